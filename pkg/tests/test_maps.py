"""Map descriptions, lifts, and the cone certificate."""

import json
import math

import numpy as np
import pytest

from torusdyn.errors import ConeViolation, NotHyperbolic, SpecError
from torusdyn.maps import (
    IntegerMatrix2,
    MapSpec,
    evaluate_lift,
    evaluate_torus,
    inverse_lift,
    jacobian,
    linear_model,
    make_spec,
    reduce_torus,
    require_cone,
    torus_distance,
    verify_cone_condition,
)

LAM = (3.0 + math.sqrt(5.0)) / 2.0


def test_reduce_torus_range(rng):
    X = rng.normal(scale=40.0, size=(300, 2))
    R = reduce_torus(X)
    assert np.all((R >= 0.0) & (R < 1.0))
    assert np.allclose(np.round(X - R), X - R)


def test_torus_distance_wraparound(rng):
    a = np.array([[0.02, 0.97]])
    b = np.array([[0.98, 0.01]])
    assert torus_distance(a, b)[0] == pytest.approx(0.04, abs=1e-14)
    X = rng.random((200, 2))
    m = rng.integers(-3, 4, size=(200, 2)).astype(float)
    assert np.max(torus_distance(X, X + m)) < 1e-12


def test_integer_matrix_spectra():
    cat = IntegerMatrix2(2, 1, 1, 1)
    lm = linear_model(cat)
    assert lm.lam == pytest.approx(LAM, abs=1e-14)
    assert lm.h_top == pytest.approx(math.log(LAM), abs=1e-14)
    assert lm.sigma == 1
    assert lm.ms == pytest.approx(1.0 / LAM, abs=1e-14)
    fib = IntegerMatrix2(0, 1, 1, -1)
    lf = linear_model(fib)
    assert lf.sigma == -1
    assert lf.ms == pytest.approx(0.6180339887498949, abs=1e-14)
    assert lf.mu == pytest.approx(-1.618033988749895, abs=1e-14)
    assert lf.h_top == pytest.approx(0.48121182505960347, abs=1e-14)


@pytest.mark.parametrize("rows", [[[1, 0], [0, 1]], [[0, 1], [-1, 0]], [[1, 1], [0, 1]]])
def test_non_hyperbolic_rejected(rows):
    with pytest.raises(NotHyperbolic):
        make_spec(rows, [])


def test_spec_validation_errors():
    with pytest.raises(SpecError):
        make_spec([[2, 1], [1, 1]], [{"coord": 2, "amp": 0.1, "mode": [1, 0], "phase": 0.0}])
    with pytest.raises(SpecError):
        make_spec([[2, 1], [1, 1]], [{"coord": 0, "amp": 0.1, "mode": [0, 0], "phase": 0.0}])


def test_lift_equivariance(rng, cat05):
    """The lift must commute with deck transformations: F(x+m) = F(x) + A m."""
    A = np.array([[2.0, 1.0], [1.0, 1.0]])
    X = rng.random((150, 2)) * 4.0 - 2.0
    m = rng.integers(-5, 6, size=(150, 2)).astype(float)
    lhs = evaluate_lift(cat05, X + m)
    rhs = evaluate_lift(cat05, X) + m @ A.T
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_jacobian_matches_finite_differences(rng, cat05):
    X = rng.random((40, 2))
    J = jacobian(cat05, X)
    h = 1e-6
    for axis in range(2):
        E = np.zeros((1, 2))
        E[0, axis] = h
        fd = (evaluate_lift(cat05, X + E) - evaluate_lift(cat05, X - E)) / (2 * h)
        assert np.max(np.abs(J[:, :, axis] - fd)) < 1e-8


def test_inverse_lift_roundtrip(rng, cat05):
    X = rng.random((60, 2)) * 6.0 - 3.0
    Y = evaluate_lift(cat05, X)
    back = inverse_lift(cat05, Y)
    assert np.max(np.abs(back - X)) < 1e-11


def test_evaluate_torus_stays_reduced(rng, cat02):
    X = rng.random((80, 2))
    Y = evaluate_torus(cat02, X)
    assert np.all((Y >= 0.0) & (Y < 1.0))


def test_spec_serialization_roundtrip(cat05, tmp_path):
    p = tmp_path / "spec.json"
    cat05.save(p)
    back = MapSpec.load(p)
    assert back == cat05
    assert back.content_hash() == cat05.content_hash()
    # the hash must react to any parameter change
    other = make_spec(
        [[2, 1], [1, 1]],
        [{"coord": 0, "amp": 0.050001, "mode": [1, 0], "phase": 0.0}],
    )
    assert other.content_hash() != cat05.content_hash()


def test_spec_scaled_interpolates(cat05):
    half = cat05.scaled(0.5)
    assert half.terms[0].amp == pytest.approx(0.025)
    assert cat05.scaled(0.0).is_linear


def test_cone_certificate_corpus(cat_lin, cat02, cat05, fib):
    for spec in (cat_lin, cat02, cat05, fib):
        rep = verify_cone_condition(spec)
        assert rep.passed, rep.message
        assert rep.lam_u_min > 1.0 > rep.nu_s > 0.0
        assert rep.min_angle > 0.5
    assert verify_cone_condition(fib).sigma == -1
    # fib reverses area but its stable multiplier is positive
    assert verify_cone_condition(fib).orientation_preserved
    assert verify_cone_condition(cat_lin).orientation_preserved
    flip = make_spec([[0, 1], [1, 1]], [])
    assert not verify_cone_condition(flip).orientation_preserved


def test_cone_certificate_fails_for_large_amplitude():
    wild = make_spec(
        [[2, 1], [1, 1]],
        [{"coord": 0, "amp": 0.45, "mode": [1, 0], "phase": 0.0}],
    )
    rep = verify_cone_condition(wild)
    assert not rep.passed
    with pytest.raises(ConeViolation):
        require_cone(wild)


def test_cone_report_is_cached(cat05):
    a = verify_cone_condition(cat05)
    b = verify_cone_condition(cat05)
    assert a is b


def test_spec_json_shape(cat05):
    doc = json.loads(cat05.to_json())
    assert doc["matrix"] == [[2, 1], [1, 1]]
    assert doc["terms"][0]["amp"] == 0.05
