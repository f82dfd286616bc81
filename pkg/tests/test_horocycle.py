"""Stable-flow integrals, drift, deviations, and rotation numbers."""

import math

import numpy as np
import pytest

from torusdyn.errors import (
    MeanNotZero,
    NoConvergence,
    SpecError,
    StepUnderflow,
    TransversalityFailure,
)
from torusdyn.horocycle import (
    Observable,
    _raise_flow_status,
    coboundary_report,
    continued_fraction,
    deviation_exponent,
    deviation_suite,
    estimate_drift,
    horocycle_integral,
    linear_integral_values,
    linear_mode_bound,
    linear_observable_bound,
    nearest_quadratic_relation,
    rotation_number,
)

GOLDEN = 0.6180339887498949


# -- observable algebra -------------------------------------------------------


def test_cosine_evaluates_correctly(rng):
    obs = Observable.cosine((1, 2), amp=0.7, phase=0.4)
    X = rng.random((50, 2))
    want = 0.7 * np.cos(2 * math.pi * (X[:, 0] + 2 * X[:, 1]) + 0.4)
    assert np.max(np.abs(obs.evaluate(X) - want)) < 1e-14


def test_from_terms_folds_conjugates():
    obs = Observable.from_terms([((-1, 0), 0.5j), ((1, 0), 0.25)])
    assert obs.modes == ((1, 0),)
    assert obs.amps[0] == pytest.approx(0.25 - 0.5j)


def test_observable_rejects_bad_modes():
    with pytest.raises(SpecError):
        Observable(modes=((0, 0),), amps=(1.0,))
    with pytest.raises(SpecError):
        Observable(modes=((-1, 0),), amps=(1.0,))  # not canonical
    with pytest.raises(SpecError):
        Observable(modes=((1, 0), (1, 0)), amps=(1.0, 2.0))  # duplicate
    with pytest.raises(SpecError):
        Observable.from_terms([((0, 0), 1.0j)])  # complex mean


def test_mean_accumulates():
    obs = Observable.from_terms([((0, 0), 0.25), ((1, 0), 1.0)], mean=0.5)
    assert obs.mean == pytest.approx(0.75)
    assert not obs.zero_mean


# -- integrals ----------------------------------------------------------------


def test_linear_integral_matches_closed_form(cat_lin, rng):
    lm = cat_lin.linear()
    obs = Observable.from_terms([((1, 0), 0.5), ((0, 1), 0.25j), ((1, 1), 0.1)])
    x0 = rng.random(2)
    tcheck = np.array([0.5, 2.0, 11.0, 47.0, 150.0])
    res = horocycle_integral(cat_lin, x0[None, :], tcheck, obs)
    exact = linear_integral_values(lm, obs, x0, tcheck)
    assert np.max(np.abs(res.values[0] - exact)) < 1e-6
    assert res.clock_error < 1e-9


def test_linear_integral_respects_sup_bound(cat_lin, rng):
    obs = Observable.cosine((1, 0))
    bound = linear_observable_bound(cat_lin.linear(), obs)
    starts = rng.random((4, 2))
    tcheck = np.geomspace(1.0, 2e3, 16)
    res = horocycle_integral(cat_lin, starts, tcheck, obs)
    assert np.max(np.abs(res.values)) <= bound + 1e-3


def test_mode_bound_closed_form(cat_lin):
    lm = cat_lin.linear()
    k = (1, 0)
    want = 1.0 / (math.pi * abs(lm.vs[0]))
    assert linear_mode_bound(lm, k) == pytest.approx(want, rel=1e-14)


def test_flow_status_mapping():
    with pytest.raises(StepUnderflow):
        _raise_flow_status(np.array([0, 1]), "test")
    with pytest.raises(NoConvergence):
        _raise_flow_status(np.array([2]), "test")
    with pytest.raises(TransversalityFailure):
        _raise_flow_status(np.array([3]), "test")
    _raise_flow_status(np.array([0, 0]), "test")  # silent when all clear


# -- drift and deviations -----------------------------------------------------


def test_linear_drift_is_exact(cat_lin):
    obs = Observable.cosine((1, 0))
    est = estimate_drift(cat_lin, obs)
    assert est.exact and est.mu == 0.0 and est.spread == 0.0
    obs_mean = Observable.from_terms([((1, 0), 0.5)], mean=0.3)
    assert estimate_drift(cat_lin, obs_mean).mu == pytest.approx(0.3)


def test_perturbed_drift_is_reproducible(cat05):
    obs = Observable.cosine((1, 0))
    est = estimate_drift(cat05, obs, T=4e3, samples=3)
    est2 = estimate_drift(cat05, obs, T=4e3, samples=3)
    assert est.mu == est2.mu  # seeded
    assert abs(est.mu - 0.0433) < 5e-3
    assert est.spread < 5e-3


def test_deviation_exponent_linear_small(cat_lin):
    # the fit needs a dense enough grid: sparse grids alias the sup build-up
    obs = Observable.cosine((1, 0))
    rep = deviation_exponent(cat_lin, obs, T_max=2e3, grid=10, samples=6)
    assert rep.verdict and abs(rep.theta) < 0.1
    assert rep.mu == 0.0


def test_deviation_suite_matches_singles(cat_lin):
    obs = [Observable.cosine((1, 0)), Observable.cosine((0, 1))]
    reps = deviation_suite(cat_lin, obs, T_max=1e3, grid=8, samples=4)
    singles = [
        deviation_exponent(cat_lin, o, T_max=1e3, grid=8, samples=4, mu=0.0)
        for o in obs
    ]
    for r, s in zip(reps, singles):
        assert r.theta == pytest.approx(s.theta, abs=2e-3)
        assert np.max(np.abs(r.dev - s.dev)) < 2e-4


def test_coboundary_rejects_drifting_observable(cat05):
    obs = Observable.cosine((1, 0))
    with pytest.raises(MeanNotZero):
        coboundary_report(
            cat05, obs, require_zero_drift=True, T_max=5e2, grid=6, samples=2,
        )


def test_coboundary_linear_bounded(cat_lin):
    # the slope threshold is calibrated to the default grid: the running
    # sup needs the full window to saturate
    obs = Observable.cosine((1, 0))
    rep = coboundary_report(cat_lin, obs, require_zero_drift=True)
    assert rep.verdict
    assert rep.running_sup[-1] <= linear_observable_bound(cat_lin.linear(), obs) + 1e-3


# -- rotation numbers ---------------------------------------------------------


def test_continued_fraction_golden():
    assert continued_fraction(GOLDEN, terms=8) == (1,) * 8


def test_nearest_quadratic_relation_golden():
    rel, resid = nearest_quadratic_relation(GOLDEN)
    assert rel == (1, -1)
    assert resid < 1e-14


def test_rotation_linear(cat_lin, fib):
    for spec in (cat_lin, fib):
        rep = rotation_number(spec, returns=512)
        assert rep.omega == pytest.approx(GOLDEN, abs=1e-9)
        assert rep.relation == (1, -1)
        assert rep.relation_residual < 1e-9


def test_rotation_perturbed(cat05):
    rep = rotation_number(cat05, returns=1024)
    assert rep.relation == (1, -1)
    assert abs(rep.omega - GOLDEN) < 5e-4
