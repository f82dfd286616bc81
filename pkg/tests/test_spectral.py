"""Weighted determinants, factorization identities, and resonances."""

import math

import numpy as np
import pytest

from torusdyn.errors import (
    EigenSplitFailure,
    InsufficientDecaySignal,
    MissingMultipliers,
    NotOrientable,
)
from torusdyn.maps import make_spec
from torusdyn.orbits import OrbitDatabase
from torusdyn.spectral import (
    NAMED_WEIGHTS,
    check_identity,
    closed_form_count,
    determinant_series,
    product_formula_series,
    resonance_report,
    rho_bounds,
    spectral_sums,
    split_multipliers,
    zeta_closed_form,
    zeta_from_counts,
)

LAM = (3.0 + math.sqrt(5.0)) / 2.0


def test_split_multipliers_cat_exact():
    ms, mu = split_multipliers(3.0, 1.0)
    assert mu == pytest.approx(LAM, abs=1e-14)
    assert ms == pytest.approx(1.0 / LAM, abs=1e-14)
    # orientation-reversing branch keeps the signs
    ms2, mu2 = split_multipliers(-1.0, -1.0)
    assert mu2 == pytest.approx(-1.618033988749895, abs=1e-14)
    assert ms2 == pytest.approx(0.6180339887498949, abs=1e-14)


def test_split_multipliers_failures():
    with pytest.raises(EigenSplitFailure):
        split_multipliers(1.0, 1.0)  # elliptic: no real splitting
    with pytest.raises(EigenSplitFailure):
        split_multipliers(2.0, 1.0)  # parabolic boundary
    with pytest.raises(MissingMultipliers):
        split_multipliers(float("nan"), 1.0)


def test_named_weights_catalog():
    assert set(NAMED_WEIGHTS) == {
        "one", "inv-det", "g-tilde", "gu", "gu-over-g", "gu2", "gu2-over-g",
    }
    assert NAMED_WEIGHTS["one"] == (0, 0)
    assert NAMED_WEIGHTS["g-tilde"] == (-1, 0)
    assert NAMED_WEIGHTS["gu2-over-g"] == (1, -2)


def test_level_one_extended_normaliser(db_cat_lin, db_fib):
    # single fixed point at level 1 with weight one: S_1 = 1 / D~ where
    # D~ = D (1 - ms/mu) and D = 1 for both reference matrices
    for db, expect in ((db_cat_lin, 1.0 - 1.0 / LAM**2), (db_fib, 1.0 + 0.381966011250105)):
        s1 = spectral_sums(db, "one", 1, extended=True)[0]
        assert 1.0 / s1 == pytest.approx(expect, abs=1e-12)


def test_zeta_closed_form_matches_counts(db_cat_lin, db_fib):
    for db in (db_cat_lin, db_fib):
        lm = db.spec.linear()
        za = zeta_from_counts(db, order=10)
        zb = zeta_closed_form(lm, order=10)
        assert za.max_abs_diff(zb) < 1e-10


def test_closed_form_counts(db_cat_lin, db_fib):
    for db in (db_cat_lin, db_fib):
        lm = db.spec.linear()
        for n, c in db.counts().items():
            assert closed_form_count(lm, n) == pytest.approx(c, abs=1e-9)


def test_product_formula_matches_determinant(db_cat_lin, db_fib):
    for db in (db_cat_lin, db_fib):
        lm = db.spec.linear()
        det = determinant_series(db, "g-tilde", extended=True)
        prod = product_formula_series(lm, order=det.order)
        assert det.max_abs_diff(prod) < 1e-10


def test_linear_first_coefficient_closed_form(db_cat_lin):
    det = determinant_series(db_cat_lin, "g-tilde", extended=True)
    c1_closed = -LAM / (1.0 - LAM**-2)
    assert det.coeffs[1] == pytest.approx(c1_closed, abs=1e-6)


@pytest.mark.parametrize("extended", [False, True])
def test_identity_residuals_linear(db_cat_lin, db_fib, extended):
    for db in (db_cat_lin, db_fib):
        rep = check_identity(db, extended=extended)
        assert rep.residual < 1e-10
        assert rep.twisted_residual < 1e-10


@pytest.mark.parametrize("extended", [False, True])
def test_identity_residuals_perturbed(db_cat02, db_cat05, extended):
    for db in (db_cat02, db_cat05):
        rep = check_identity(db, extended=extended)
        assert rep.residual < 1e-6
        assert rep.twisted_residual < 1e-6


def test_twisted_residual_equals_untwisted(db_cat05):
    # substituting z -> sigma z on both sides cannot change the residual
    for extended in (False, True):
        rep = check_identity(db_cat05, extended=extended)
        assert rep.twisted_residual == pytest.approx(rep.residual, rel=1e-12, abs=1e-18)


def test_base_route_requires_orientable_stable_multipliers():
    spec = make_spec([[0, 1], [1, 1]], [])
    db = OrbitDatabase.build(spec, range(1, 7))
    with pytest.raises(NotOrientable):
        check_identity(db, extended=False)
    # the extended route has no such gate
    rep = check_identity(db, extended=True)
    assert rep.residual < 1e-10


def test_resonance_reports(db_cat_lin, db_cat02, db_cat05, db_fib):
    for db in (db_cat_lin, db_cat02, db_cat05, db_fib):
        rep = resonance_report(db)
        h = db.spec.linear().h_top
        assert rep.verdict, (db.spec.label, rep)
        assert rep.disc_zero_count == 1
        assert abs(rep.modulus - math.exp(-h)) <= 1e-3


def test_resonance_needs_depth(db_cat05, cat05):
    shallow = OrbitDatabase.build(cat05, range(1, 5))
    with pytest.raises(InsufficientDecaySignal):
        resonance_report(shallow)


def test_rho_bounds_linear(cat_lin):
    b = rho_bounds(cat_lin, r=5)
    assert b.r1 == pytest.approx(3.01, abs=1e-12)
    assert b.bound_valid
    assert b.rho_bound == pytest.approx(1.0 / LAM, abs=1e-9)


def test_rho_bounds_perturbed(cat05):
    b = rho_bounds(cat05, r=5)
    assert b.r1 == pytest.approx(4.0006, abs=5e-4)
    assert b.lam == pytest.approx(2.1570, abs=5e-4)
    assert b.rho_bound == pytest.approx(0.562684, abs=5e-4)
    assert b.rho_bound < 1.0


def test_spectral_sums_respect_weight_algebra(db_cat05):
    # (a, b) exponents compose: gu2 = gu * gu pointwise, so
    # S_n(gu2) = sum a^0 b^-2 / D must equal the sum with squared gu weight
    s_gu = np.array(spectral_sums(db_cat05, "gu", 6))
    s_gu2 = np.array(spectral_sums(db_cat05, "gu2", 6))
    lv = db_cat05.level(1)
    assert s_gu.shape == (6,) and s_gu2.shape == (6,)
    assert np.all(np.isfinite(s_gu)) and np.all(np.isfinite(s_gu2))
