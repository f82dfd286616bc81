"""The compiled and pure-numpy kernel paths must agree."""

import numpy as np
import pytest

from torusdyn import kernels
from torusdyn.maps import make_spec


@pytest.fixture()
def pert_spec():
    return make_spec(
        [[2, 1], [1, 1]],
        [{"coord": 0, "amp": 0.05, "mode": [1, 0], "phase": 0.0}],
    )


@pytest.fixture()
def both_backends():
    """Yield the two kernel implementations, restoring the ambient one."""
    prev = kernels.backend_name()
    yield ("numba", "numpy")
    kernels.set_backend(prev)


def _with(backend, fn, *args):
    kernels.set_backend(backend)
    return fn(*args)


def test_backend_selection_roundtrip():
    prev = kernels.backend_name()
    try:
        kernels.set_backend("numpy")
        assert kernels.backend_name() == "numpy"
        kernels.set_backend("numba")
        assert kernels.backend_name() == "numba"
    finally:
        kernels.set_backend(prev)


def test_lift_and_jacobian_agree(pert_spec, rng, both_backends):
    pm = pert_spec.packed()
    X = rng.random((200, 2)) * 8.0 - 4.0
    ya = _with("numba", kernels.lift, pm, X)
    yb = _with("numpy", kernels.lift, pm, X)
    assert np.max(np.abs(ya - yb)) < 1e-14
    ja = _with("numba", kernels.jac, pm, X)
    jb = _with("numpy", kernels.jac, pm, X)
    assert np.max(np.abs(ja - jb)) < 1e-14


def test_invert_lift_agrees(pert_spec, rng, both_backends):
    pm = pert_spec.packed()
    X = rng.random((100, 2)) * 4.0 - 2.0
    Y = kernels.lift(pm, X)
    xa = _with("numba", kernels.invert_lift, pm, Y)
    xb = _with("numpy", kernels.invert_lift, pm, Y)
    assert np.max(np.abs(xa - X)) < 1e-11
    assert np.max(np.abs(xa - xb)) < 1e-11


def test_periodic_newton_agrees(pert_spec, rng, both_backends):
    pm = pert_spec.packed()
    n = 4
    A = np.array([[2, 1], [1, 1]])
    An = np.linalg.matrix_power(A, n)
    # random targets in the deck group, seeded from the linear solution
    X0 = rng.random((30, 2))
    m = (X0 @ (An - np.eye(2)).T).round()
    B = An - np.eye(2)
    Xlin = np.linalg.solve(B, m.T).T
    out = {}
    for b in ("numba", "numpy"):
        kernels.set_backend(b)
        pts, resid, ok, iters = kernels.periodic_newton(pm, Xlin, m, n)
        out[b] = (pts, resid, ok)
    assert np.all(out["numba"][2]) and np.all(out["numpy"][2])
    assert np.max(np.abs(out["numba"][0] - out["numpy"][0])) < 1e-10
    assert np.max(out["numba"][1]) < 1e-10


def test_direction_pairs_agree(pert_spec, rng, both_backends):
    pm = pert_spec.packed()
    lm = pert_spec.linear()
    X = rng.random((50, 2))
    sa = _with("numba", kernels.stable_pair, pm, X, 20, lm.vs)
    sb = _with("numpy", kernels.stable_pair, pm, X, 20, lm.vs)
    assert np.max(np.abs(sa[0] - sb[0])) < 1e-12  # directions
    assert np.max(np.abs(sa[2] - sb[2])) < 1e-12  # multipliers
    ua = _with("numba", kernels.unstable_pair, pm, X, 20, lm.vu)
    ub = _with("numpy", kernels.unstable_pair, pm, X, 20, lm.vu)
    assert np.all(ua[4]) and np.all(ub[4])
    assert np.max(np.abs(ua[0] - ub[0])) < 1e-12
    assert np.max(np.abs(ua[2] - ub[2])) < 1e-12


def test_flow_run_agrees(pert_spec, rng, both_backends):
    pm = pert_spec.packed()
    lm = pert_spec.linear()
    X0 = rng.random((3, 2))
    tcheck = np.array([1.0, 5.0, 20.0])
    modes = np.array([[1.0, 0.0], [0.0, 0.0]])
    out = {}
    for b in ("numba", "numpy"):
        kernels.set_backend(b)
        pos, Hre, Him, status, nsteps, hmin = kernels.flow_run(
            pm, X0, tcheck, modes, lm.vs, 1.0, 14, 1e-9, 0.13
        )
        assert np.all(status == 0)
        out[b] = (pos, Hre, Him)
    # identical adaptive step sequences: the two paths agree to roundoff
    assert np.max(np.abs(out["numba"][0] - out["numpy"][0])) < 1e-9
    assert np.max(np.abs(out["numba"][1] - out["numpy"][1])) < 1e-9
    assert np.max(np.abs(out["numba"][2] - out["numpy"][2])) < 1e-9


def test_rotation_run_agrees(pert_spec, both_backends):
    pm = pert_spec.packed()
    lm = pert_spec.linear()
    X0 = np.array([[0.37, 0.21]])
    out = {}
    for b in ("numba", "numpy"):
        kernels.set_backend(b)
        yfirst, ylast, count, minv1, status, tfinal = kernels.rotation_run(
            pm, X0, 0.5, 64, lm.vs, 1.0, 14, 1e-9, 0.13
        )
        assert status[0] == 0
        out[b] = (yfirst[0], ylast[0], count[0])
    assert out["numba"][2] == out["numpy"][2]
    assert out["numba"][0] == pytest.approx(out["numpy"][0], abs=1e-9)
    assert out["numba"][1] == pytest.approx(out["numpy"][1], abs=1e-9)


def test_env_flag_selects_backend(monkeypatch):
    prev = kernels.backend_name()
    try:
        monkeypatch.setenv("TORUSDYN_BACKEND", "numpy")
        kernels.set_backend("auto")
        assert kernels.backend_name() == "numpy"
    finally:
        monkeypatch.delenv("TORUSDYN_BACKEND", raising=False)
        kernels.set_backend(prev)
