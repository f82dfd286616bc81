"""Backend dispatch for the numerical kernels.

Two interchangeable implementations exist: a numba-compiled one
(``_kernels_numba``) and a pure-numpy one (``_kernels_numpy``).  The active
backend is chosen at import time from the ``TORUSDYN_BACKEND`` environment
variable:

* ``auto`` (default) -- numba if importable, else numpy
* ``numba``          -- require the compiled backend, fail otherwise
* ``numpy``          -- force the pure-numpy fallback

``set_backend`` switches at runtime (used by the CLI ``--backend`` flag and
by benchmarks); ``backend_name`` reports the active choice.  All public
wrappers take a :class:`~torusdyn.maps.PackedMap` plus plain arrays, validate
shapes, and normalise dtypes/contiguity before handing off.
"""

from __future__ import annotations

import os
from typing import TYPE_CHECKING

import numpy as np

from .errors import InverseNewtonFailure, SpecError

if TYPE_CHECKING:  # pragma: no cover
    from .maps import PackedMap

_BACKENDS = ("auto", "numba", "numpy")
_impl = None
_name = "unset"


def set_backend(name: str) -> str:
    """Select the kernel backend; returns the resolved backend name."""
    global _impl, _name
    if name not in _BACKENDS:
        raise SpecError(f"unknown backend {name!r}; expected one of {_BACKENDS}")
    if name == "numpy":
        from . import _kernels_numpy as impl

        _impl, _name = impl, "numpy"
    elif name == "numba":
        try:
            from . import _kernels_numba as impl
        except ImportError as exc:
            raise SpecError(f"numba backend requested but unavailable: {exc}") from exc
        _impl, _name = impl, "numba"
    else:  # auto: honor the environment flag, then prefer the compiled path
        env = os.environ.get("TORUSDYN_BACKEND", "").strip().lower()
        if env in ("numba", "numpy"):
            return set_backend(env)
        try:
            from . import _kernels_numba as impl

            _impl, _name = impl, "numba"
        except ImportError:
            from . import _kernels_numpy as impl

            _impl, _name = impl, "numpy"
    return _name


def backend_name() -> str:
    return _name


set_backend("auto")


def _as_points(X) -> np.ndarray:
    X = np.ascontiguousarray(np.atleast_2d(X), dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != 2:
        raise SpecError(f"expected points of shape (B, 2), got {X.shape}")
    return X


def _as_vec2(v) -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.shape != (2,):
        raise SpecError(f"expected a 2-vector, got shape {v.shape}")
    return v


def lift(pm: "PackedMap", X) -> np.ndarray:
    return _impl.lift_batch(pm.mat, pm.tcoord, pm.tk, pm.tamp, pm.tph, _as_points(X))


def jac(pm: "PackedMap", X) -> np.ndarray:
    return _impl.jac_batch(pm.mat, pm.tcoord, pm.tk, pm.tamp, pm.tph, _as_points(X))


def invert_lift(pm: "PackedMap", Y, tol: float = 1e-13, max_iter: int = 50) -> np.ndarray:
    X, ok = _impl.invert_lift_batch(
        pm.mat, pm.minv, pm.tcoord, pm.tk, pm.tamp, pm.tph, _as_points(Y),
        float(tol), int(max_iter),
    )
    if not np.all(ok):
        bad = int(np.flatnonzero(~ok)[0])
        raise InverseNewtonFailure(
            f"lift inversion failed for {int(np.sum(~ok))} point(s), first at row {bad}"
        )
    return X


def periodic_newton(pm: "PackedMap", X, mvec, n: int, tol: float = 1e-12, max_iter: int = 60):
    X = _as_points(X)
    mvec = _as_points(mvec)
    if mvec.shape != X.shape:
        raise SpecError("translation vectors must match seed points in shape")
    if n < 1:
        raise SpecError(f"period must be >= 1, got {n}")
    return _impl.periodic_newton_batch(
        pm.mat, pm.tcoord, pm.tk, pm.tamp, pm.tph, X, mvec, int(n), float(tol),
        int(max_iter),
    )


def orbit_products(pm: "PackedMap", X, n: int):
    if n < 1:
        raise SpecError(f"period must be >= 1, got {n}")
    return _impl.orbit_products_batch(
        pm.mat, pm.tcoord, pm.tk, pm.tamp, pm.tph, _as_points(X), int(n)
    )


def stable_pair(pm: "PackedMap", X, depth: int, vref):
    if depth < 1:
        raise SpecError(f"pullback depth must be >= 1, got {depth}")
    return _impl.stable_pair_batch(
        pm.mat, pm.tcoord, pm.tk, pm.tamp, pm.tph, _as_points(X), int(depth),
        _as_vec2(vref),
    )


def unstable_pair(pm: "PackedMap", X, depth: int, uref, inv_tol: float = 1e-13, inv_max_iter: int = 50):
    if depth < 1:
        raise SpecError(f"pushforward depth must be >= 1, got {depth}")
    return _impl.unstable_pair_batch(
        pm.mat, pm.minv, pm.tcoord, pm.tk, pm.tamp, pm.tph, _as_points(X),
        int(depth), _as_vec2(uref), float(inv_tol), int(inv_max_iter),
    )


def flow_run(
    pm: "PackedMap", X0, tcheck, modes, vref, sgn: float, depth: int,
    rtol: float, max_step: float, max_steps: int = 50_000_000,
):
    X0 = _as_points(X0)
    tcheck = np.ascontiguousarray(np.atleast_1d(tcheck), dtype=np.float64)
    if tcheck.size == 0 or np.any(tcheck <= 0.0) or np.any(np.diff(tcheck) <= 0.0):
        raise SpecError("checkpoints must be strictly increasing and positive")
    modes = np.ascontiguousarray(np.atleast_2d(modes), dtype=np.float64)
    if modes.shape[0] and modes.shape[1] != 2:
        raise SpecError(f"modes must have shape (M, 2), got {modes.shape}")
    if sgn not in (1.0, -1.0):
        raise SpecError(f"flow direction sign must be +-1, got {sgn}")
    if not (0.0 < max_step):
        raise SpecError("max_step must be positive")
    return _impl.flow_run_batch(
        pm.mat, pm.tcoord, pm.tk, pm.tamp, pm.tph, X0, tcheck, modes,
        _as_vec2(vref), float(sgn), int(depth), float(rtol), float(max_step),
        int(max_steps),
    )


def rotation_run(
    pm: "PackedMap", X0, section_c: float, nreturns: int, vref, sgn: float,
    depth: int, rtol: float, max_step: float, max_steps: int = 50_000_000,
    v1_margin: float = 1e-3,
):
    X0 = _as_points(X0)
    if nreturns < 2:
        raise SpecError(f"need at least 2 section returns, got {nreturns}")
    if not (0.0 < max_step < 1.0):
        raise SpecError(
            f"rotation stepping needs max_step in (0, 1) so that at most one "
            f"section crossing occurs per step, got {max_step}"
        )
    if sgn not in (1.0, -1.0):
        raise SpecError(f"flow direction sign must be +-1, got {sgn}")
    return _impl.rotation_run_batch(
        pm.mat, pm.tcoord, pm.tk, pm.tamp, pm.tph, X0, float(section_c),
        int(nreturns), _as_vec2(vref), float(sgn), int(depth), float(rtol),
        float(max_step), int(max_steps), float(v1_margin),
    )


def warmup() -> str:
    """Run every kernel once on a tiny workload (triggers JIT compilation)."""
    mat = np.array([[2.0, 1.0], [1.0, 1.0]])
    minv = np.array([[1.0, -1.0], [-1.0, 2.0]])
    tcoord = np.array([0], dtype=np.int64)
    tk = np.array([[1.0, 0.0]])
    tamp = np.array([0.01])
    tph = np.array([0.0])
    X = np.array([[0.31, 0.47]])
    vref = np.array([0.5257311121191336, -0.8506508083520399])
    uref = np.array([0.8506508083520399, 0.5257311121191336])
    _impl.lift_batch(mat, tcoord, tk, tamp, tph, X)
    _impl.jac_batch(mat, tcoord, tk, tamp, tph, X)
    _impl.invert_lift_batch(mat, minv, tcoord, tk, tamp, tph, X, 1e-13, 50)
    _impl.periodic_newton_batch(
        mat, tcoord, tk, tamp, tph, np.zeros((1, 2)), np.zeros((1, 2)), 1, 1e-12, 30
    )
    _impl.orbit_products_batch(mat, tcoord, tk, tamp, tph, X, 2)
    _impl.stable_pair_batch(mat, tcoord, tk, tamp, tph, X, 4, vref)
    _impl.unstable_pair_batch(mat, minv, tcoord, tk, tamp, tph, X, 4, uref, 1e-13, 50)
    _impl.flow_run_batch(
        mat, tcoord, tk, tamp, tph, X, np.array([0.1]), np.array([[1.0, 0.0]]),
        vref, 1.0, 4, 1e-7, 0.1, 10_000,
    )
    _impl.rotation_run_batch(
        mat, tcoord, tk, tamp, tph, X, 0.5, 2, vref, 1.0, 4, 1e-7, 0.45,
        100_000, 1e-3,
    )
    return _name
