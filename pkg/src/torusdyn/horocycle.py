"""Ergodic averages along the unit-speed stable flow.

The flow moves each point with unit speed along the stable direction field
(resolved on the fly by finite-depth pullback).  For a trigonometric
observable the running integral splits into per-character quadratures

    H_k(t) = integral_0^t exp(2 pi i k . x(s)) ds,

which are integrated as extra ODE state alongside the position.  A constant
(0,0) character is always carried as well: it must integrate to ``t``
exactly, which cross-checks the integrator's clock on every run.

The module provides the asymptotic drift ``mu`` of an observable's integral
(estimated by a Richardson difference that cancels the bounded part), the
*deviation exponent* -- the log-log growth rate of ``sup |I(t) - mu t|``,
which the no-deviations property forces to be ~0 -- a running-sup
boundedness check for the drift-corrected integral (the coboundary
property), and the rotation number of the section return map, together with
its nearest integer-quadratic relation.

For linear maps everything has a closed form (the flow is a straight line),
giving exact values and sup bounds that the integrator is tested against.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import (
    MeanNotZero,
    NoConvergence,
    SpecError,
    StepUnderflow,
    TransversalityFailure,
)
from .maps import MapSpec, verify_cone_condition
from .bundles import default_depth

DEFAULT_RTOL = 1e-7
CLOCK_RTOL = 1e-9
BASE_MAX_STEP = 0.13


def _canonical(mode: tuple[int, int]) -> bool:
    k0, k1 = mode
    return k0 > 0 or (k0 == 0 and k1 > 0)


@dataclass(frozen=True)
class Observable:
    """Real trigonometric observable sum_k c_k exp(2 pi i k.x).

    Stored by its canonical half-spectrum (one representative per +-k pair,
    with ``c_{-k} = conj(c_k)`` implied) plus the real mean."""

    modes: tuple[tuple[int, int], ...]  # canonical representatives, no (0,0)
    amps: tuple[complex, ...]  # coefficient of each canonical mode
    mean: float = 0.0
    label: str = ""

    def __post_init__(self):
        if len(self.modes) != len(self.amps):
            raise SpecError("modes and amplitudes must pair up")
        seen = set()
        for k in self.modes:
            if len(k) != 2 or not all(
                isinstance(v, (int, np.integer)) for v in k
            ):
                raise SpecError(f"mode {k!r} must be a pair of integers")
            if k == (0, 0):
                raise SpecError("the (0,0) coefficient belongs in `mean`")
            if not _canonical(k):
                raise SpecError(
                    f"mode {k} is not canonical; fold it onto {(-k[0], -k[1])} "
                    f"with the conjugate amplitude"
                )
            if k in seen:
                raise SpecError(f"duplicate mode {k}")
            seen.add(k)

    @classmethod
    def from_terms(cls, terms, mean: float = 0.0, label: str = "") -> "Observable":
        """Build from (mode, amplitude) pairs, folding non-canonical modes
        onto their canonical partner with conjugated amplitude."""
        acc: dict[tuple[int, int], complex] = {}
        mean = float(mean)
        for mode, amp in terms:
            k = (int(mode[0]), int(mode[1]))
            amp = complex(amp)
            if k == (0, 0):
                if abs(amp.imag) > 1e-15:
                    raise SpecError("the mean coefficient must be real")
                mean += amp.real
                continue
            if not _canonical(k):
                k = (-k[0], -k[1])
                amp = amp.conjugate()
            acc[k] = acc.get(k, 0.0 + 0.0j) + amp
        modes = tuple(sorted(acc))
        return cls(
            modes=modes,
            amps=tuple(acc[k] for k in modes),
            mean=mean,
            label=label,
        )

    @classmethod
    def cosine(
        cls, mode, amp: float = 1.0, phase: float = 0.0, label: str = ""
    ) -> "Observable":
        """amp * cos(2 pi k.x + phase)."""
        c = 0.5 * amp * cmath.exp(1j * phase)
        return cls.from_terms([(tuple(mode), c)], label=label)

    @property
    def zero_mean(self) -> bool:
        return self.mean == 0.0

    def evaluate(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        vals = np.full(X.shape[0], self.mean)
        for k, c in zip(self.modes, self.amps):
            ph = 2.0 * math.pi * (k[0] * X[:, 0] + k[1] * X[:, 1])
            vals += 2.0 * (c.real * np.cos(ph) - c.imag * np.sin(ph))
        return vals


def _mode_plan(observables):
    """Union of canonical modes across observables, plus per-observable
    (index, coefficient) lists; the clock mode (0,0) is appended last."""
    index: dict[tuple[int, int], int] = {}
    for obs in observables:
        for k in obs.modes:
            if k not in index:
                index[k] = len(index)
    modes = np.zeros((len(index) + 1, 2))
    for k, i in index.items():
        modes[i, 0] = k[0]
        modes[i, 1] = k[1]
    plans = [
        (obs.mean, [(index[k], c) for k, c in zip(obs.modes, obs.amps)])
        for obs in observables
    ]
    return modes, plans


def _default_max_step(modes: np.ndarray) -> float:
    """Step cap that resolves the fastest character oscillation.

    The error control follows the position only, so the bound must come from
    the mode frequencies: the phase of mode k advances at most |k|_2 per unit
    time along the unit-speed flow."""
    if modes.shape[0] == 0:
        return BASE_MAX_STEP
    kmax = float(np.max(np.hypot(modes[:, 0], modes[:, 1])))
    return BASE_MAX_STEP / max(1.0, kmax)


def _raise_flow_status(status: np.ndarray, context: str) -> None:
    if np.all(status == 0):
        return
    code = int(status[np.argmax(status != 0)])
    n_bad = int(np.sum(status != 0))
    detail = f"{context}: {n_bad} trajectory(ies) failed"
    if code == 1:
        raise StepUnderflow(f"{detail}: step size underflowed")
    if code == 2:
        raise NoConvergence(f"{detail}: step budget exhausted")
    if code == 3:
        raise TransversalityFailure(
            f"{detail}: flow tangent to the section (crossing not transversal)"
        )
    raise NoConvergence(f"{detail}: kernel status {code}")


@dataclass(frozen=True)
class FlowIntegral:
    """Batched flow run: positions, per-mode quadratures, and observable
    values at each checkpoint."""

    t: np.ndarray  # (C,) checkpoint times
    values: np.ndarray  # (B, C) observable running integrals
    positions: np.ndarray  # (B, C, 2) reduced positions at checkpoints
    modes: np.ndarray  # (M, 2) quadrature modes (clock mode excluded)
    H: np.ndarray  # (B, C, M) complex per-mode quadratures
    clock_error: float  # worst relative error of the carried clock mode
    nsteps: np.ndarray  # (B,)
    depth: int
    rtol: float
    max_step: float


def _integrate_modes(
    spec: MapSpec,
    starts: np.ndarray,
    tcheck: np.ndarray,
    modes: np.ndarray,
    *,
    depth: int | None,
    rtol: float,
    max_step: float | None,
    sgn: float,
):
    """Shared driver: run the flow carrying `modes` plus the clock mode."""
    if depth is None:
        depth = default_depth(spec)
    if max_step is None:
        max_step = _default_max_step(modes)
    run_modes = np.vstack([modes, [0.0, 0.0]])
    pm = spec.packed()
    lm = spec.linear()
    pos, Hre, Him, status, nsteps, hmin = kernels.flow_run(
        pm, starts, tcheck, run_modes, lm.vs, sgn, depth, rtol, max_step
    )
    _raise_flow_status(status, "flow integration")
    H = Hre + 1j * Him
    clock = H[:, :, -1].real
    clock_err = float(np.max(np.abs(clock - tcheck[None, :]) / tcheck[None, :]))
    if clock_err > CLOCK_RTOL:
        raise NoConvergence(
            f"integrator clock drifted by relative {clock_err:.3e} "
            f"(limit {CLOCK_RTOL:g}); the run cannot be trusted"
        )
    return pos, H[:, :, :-1], clock_err, nsteps, int(depth), float(max_step)


def horocycle_integral(
    spec: MapSpec,
    starts,
    tcheck,
    observable: Observable,
    *,
    depth: int | None = None,
    rtol: float = DEFAULT_RTOL,
    max_step: float | None = None,
    sgn: float = 1.0,
) -> FlowIntegral:
    """Running integral of the observable along the stable flow.

    ``starts`` is (B,2); ``tcheck`` the strictly increasing checkpoint
    times.  One ODE run per start carries every character of the observable
    plus the clock mode."""
    starts = np.ascontiguousarray(np.atleast_2d(starts), dtype=np.float64)
    tcheck = np.ascontiguousarray(np.atleast_1d(tcheck), dtype=np.float64)
    modes, plans = _mode_plan([observable])
    pos, H, clock_err, nsteps, depth, max_step = _integrate_modes(
        spec, starts, tcheck, modes[:-1],
        depth=depth, rtol=rtol, max_step=max_step, sgn=sgn,
    )
    mean, pairs = plans[0]
    values = np.broadcast_to(mean * tcheck, (starts.shape[0], tcheck.size)).copy()
    for idx, c in pairs:
        values += 2.0 * (c * H[:, :, idx]).real
    return FlowIntegral(
        t=tcheck,
        values=values,
        positions=pos,
        modes=modes[:-1],
        H=H,
        clock_error=clock_err,
        nsteps=nsteps,
        depth=depth,
        rtol=rtol,
        max_step=max_step,
    )


# -- closed forms for linear maps -------------------------------------------


def linear_mode_quadrature(lm, mode, x0, t: float) -> complex:
    """Exact H_k(t) for a linear map: the flow is x0 + t * vs."""
    k = (float(mode[0]), float(mode[1]))
    om = k[0] * lm.vs[0] + k[1] * lm.vs[1]
    ph0 = cmath.exp(2j * math.pi * (k[0] * x0[0] + k[1] * x0[1]))
    if om == 0.0:
        return ph0 * t
    return ph0 * (cmath.exp(2j * math.pi * om * t) - 1.0) / (2j * math.pi * om)


def linear_mode_bound(lm, mode) -> float:
    """Sup over t of |H_k(t)| for a linear map: 1 / (pi |k . vs|)."""
    om = float(mode[0]) * lm.vs[0] + float(mode[1]) * lm.vs[1]
    if om == 0.0:
        return math.inf
    return 1.0 / (math.pi * abs(om))


def linear_observable_bound(lm, observable: Observable) -> float:
    """Sup over t of |I(t) - mean*t| for a linear map."""
    return sum(
        2.0 * abs(c) * linear_mode_bound(lm, k)
        for k, c in zip(observable.modes, observable.amps)
    )


def linear_integral_values(lm, observable: Observable, x0, tcheck) -> np.ndarray:
    """Exact running integral of the observable for a linear map."""
    out = np.empty(len(tcheck))
    for i, t in enumerate(tcheck):
        acc = observable.mean * t
        for k, c in zip(observable.modes, observable.amps):
            acc += 2.0 * (c * linear_mode_quadrature(lm, k, x0, t)).real
        out[i] = acc
    return out


# -- drift, deviations, coboundary -------------------------------------------


@dataclass(frozen=True)
class DriftEstimate:
    """Asymptotic rate of the observable's flow integral."""

    mu: float
    spread: float  # max-min over sample starts (0 when exact)
    samples: np.ndarray  # per-start estimates
    T: float
    exact: bool  # True when derived from the linear closed form


def estimate_drift(
    spec: MapSpec,
    observable: Observable,
    *,
    T: float = 5e4,
    samples: int = 4,
    seed: int = 0,
    depth: int | None = None,
    rtol: float = DEFAULT_RTOL,
    max_step: float | None = None,
) -> DriftEstimate:
    """Estimate mu = lim I(t)/t by the difference (I(T)-I(T/2))/(T/2),
    which cancels the bounded part of the integral; averaged over random
    starts.  Linear maps short-circuit to the exact value (the bounded part
    is explicitly bounded, so mu is exactly the observable mean)."""
    if spec.is_linear:
        return DriftEstimate(
            mu=float(observable.mean),
            spread=0.0,
            samples=np.full(samples, float(observable.mean)),
            T=float(T),
            exact=True,
        )
    rng = np.random.default_rng(seed)
    starts = rng.random((samples, 2))
    res = horocycle_integral(
        spec, starts, [0.5 * T, T], observable,
        depth=depth, rtol=rtol, max_step=max_step,
    )
    per = (res.values[:, 1] - res.values[:, 0]) / (0.5 * T)
    return DriftEstimate(
        mu=float(np.mean(per)),
        spread=float(np.ptp(per)),
        samples=per,
        T=float(T),
        exact=False,
    )


def _growth_exponent(T_grid: np.ndarray, dev: np.ndarray) -> float:
    """Log-log slope of the deviation envelope (its running maximum).

    The controlled quantity is a sup over time: raw deviations oscillate
    beneath their envelope, and a slope fitted to the oscillation measures
    noise, not growth.  The envelope of a bounded sequence flattens, while
    a genuine power t^theta keeps its slope."""
    running = np.maximum.accumulate(dev)
    if running[-1] < 1e-9:
        return 0.0
    return float(
        np.polyfit(np.log(T_grid), np.log(np.maximum(running, 1e-12)), 1)[0]
    )


@dataclass(frozen=True)
class DeviationReport:
    """Growth exponent of sup_x |I(t) - mu t| over a time grid."""

    theta: float  # log-log slope of the deviation envelope (0 at floor)
    verdict: bool  # theta <= threshold
    threshold: float
    T_grid: np.ndarray
    dev: np.ndarray  # (C,) sup over starts of |I - mu t|
    mu: float
    mu_spread: float
    samples: int
    clock_error: float


def deviation_exponent(
    spec: MapSpec,
    observable: Observable,
    *,
    T_min: float = 10.0,
    T_max: float = 1e4,
    grid: int = 24,
    samples: int = 8,
    seed: int = 1,
    mu: float | None = None,
    mu_spread: float = 0.0,
    threshold: float = 0.1,
    depth: int | None = None,
    rtol: float = DEFAULT_RTOL,
    max_step: float | None = None,
) -> DeviationReport:
    """Fit the growth exponent of the drift-corrected integral.

    The no-deviations property says |I(t) - mu t| stays bounded, so the
    envelope slope must be ~0; anything approaching a genuine power
    t^theta with theta > threshold fails the verdict.  Checkpoints are
    read off a single integration pass, so a dense grid costs nothing."""
    if mu is None:
        est = estimate_drift(
            spec, observable, seed=seed + 1000,
            depth=depth, rtol=rtol, max_step=max_step,
        )
        mu, mu_spread = est.mu, est.spread
    T_grid = np.geomspace(T_min, T_max, grid)
    rng = np.random.default_rng(seed)
    starts = rng.random((samples, 2))
    res = horocycle_integral(
        spec, starts, T_grid, observable,
        depth=depth, rtol=rtol, max_step=max_step,
    )
    dev = np.max(np.abs(res.values - mu * T_grid[None, :]), axis=0)
    theta = _growth_exponent(T_grid, dev)
    return DeviationReport(
        theta=theta,
        verdict=theta <= threshold,
        threshold=threshold,
        T_grid=T_grid,
        dev=dev,
        mu=float(mu),
        mu_spread=float(mu_spread),
        samples=samples,
        clock_error=res.clock_error,
    )


@dataclass(frozen=True)
class CoboundaryReport:
    """Boundedness evidence for the drift-corrected integral."""

    slope: float  # log-log slope of the running sup
    verdict: bool  # slope <= threshold
    threshold: float
    T_grid: np.ndarray
    running_sup: np.ndarray
    mu: float
    mu_spread: float


def coboundary_report(
    spec: MapSpec,
    observable: Observable,
    *,
    require_zero_drift: bool = False,
    T_min: float = 10.0,
    T_max: float = 1e4,
    grid: int = 24,
    samples: int = 8,
    seed: int = 2,
    threshold: float = 0.05,
    mu: float | None = None,
    mu_spread: float = 0.0,
    depth: int | None = None,
    rtol: float = DEFAULT_RTOL,
    max_step: float | None = None,
) -> CoboundaryReport:
    """Check that I(t) - mu t behaves like a bounded coboundary.

    The running sup of the deviation over the grid must flatten: its
    log-log slope may not exceed ``threshold``.  With
    ``require_zero_drift`` the observable itself must have no drift
    (mu indistinguishable from zero), else the check refuses.  A drift
    value already in hand can be passed through ``mu``/``mu_spread`` to
    skip the estimation run."""
    if mu is not None:
        est = DriftEstimate(
            mu=float(mu), spread=float(mu_spread),
            samples=np.array([float(mu)]), T=0.0, exact=False,
        )
    else:
        est = estimate_drift(
            spec, observable, seed=seed + 1000,
            depth=depth, rtol=rtol, max_step=max_step,
        )
    if require_zero_drift:
        tol = max(5.0 * est.spread, 1e-4)
        if abs(est.mu) > tol:
            raise MeanNotZero(
                f"observable has drift mu = {est.mu:.6e} (resolution {tol:.1e}); "
                f"it integrates linearly and cannot be a coboundary"
            )
    rep = deviation_exponent(
        spec, observable,
        T_min=T_min, T_max=T_max, grid=grid, samples=samples, seed=seed,
        mu=est.mu, mu_spread=est.spread,
        depth=depth, rtol=rtol, max_step=max_step,
    )
    running = np.maximum.accumulate(rep.dev)
    slope = rep.theta  # the deviation fit is already an envelope slope
    return CoboundaryReport(
        slope=slope,
        verdict=slope <= threshold,
        threshold=threshold,
        T_grid=rep.T_grid,
        running_sup=running,
        mu=est.mu,
        mu_spread=est.spread,
    )


def deviation_suite(
    spec: MapSpec,
    observables,
    *,
    T_long: float = 5e4,
    est_samples: int = 4,
    T_min: float = 10.0,
    T_max: float = 1e4,
    grid: int = 24,
    samples: int = 8,
    seed: int = 1,
    threshold: float = 0.1,
    depth: int | None = None,
    rtol: float = DEFAULT_RTOL,
    max_step: float | None = None,
) -> list[DeviationReport]:
    """Deviation exponents for several observables of one map at once.

    All observables ride the same two flow runs (their mode unions are
    integrated together), so the cost is that of a single observable: one
    long run for the drift estimates, one gridded run for the exponents.
    The per-mode results are identical to per-observable calls."""
    observables = list(observables)
    modes, plans = _mode_plan(observables)
    if max_step is None:
        max_step = _default_max_step(modes[:-1])
    rng = np.random.default_rng(seed + 1000)

    def combine(H, tcheck, plan):
        mean, pairs = plan
        vals = np.broadcast_to(
            mean * tcheck, (H.shape[0], tcheck.size)
        ).copy()
        for idx, c in pairs:
            vals += 2.0 * (c * H[:, :, idx]).real
        return vals

    if spec.is_linear:
        drifts = [
            DriftEstimate(
                mu=float(o.mean), spread=0.0,
                samples=np.full(est_samples, float(o.mean)),
                T=float(T_long), exact=True,
            )
            for o in observables
        ]
    else:
        starts = rng.random((est_samples, 2))
        tc = np.array([0.5 * T_long, T_long])
        _, H, _, _, _, _ = _integrate_modes(
            spec, starts, tc, modes[:-1],
            depth=depth, rtol=rtol, max_step=max_step, sgn=1.0,
        )
        drifts = []
        for plan in plans:
            vals = combine(H, tc, plan)
            per = (vals[:, 1] - vals[:, 0]) / (0.5 * T_long)
            drifts.append(
                DriftEstimate(
                    mu=float(np.mean(per)), spread=float(np.ptp(per)),
                    samples=per, T=float(T_long), exact=False,
                )
            )

    T_grid = np.geomspace(T_min, T_max, grid)
    starts = np.random.default_rng(seed).random((samples, 2))
    _, H, clock_err, _, _, _ = _integrate_modes(
        spec, starts, T_grid, modes[:-1],
        depth=depth, rtol=rtol, max_step=max_step, sgn=1.0,
    )
    reports = []
    for plan, est in zip(plans, drifts):
        vals = combine(H, T_grid, plan)
        dev = np.max(np.abs(vals - est.mu * T_grid[None, :]), axis=0)
        theta = _growth_exponent(T_grid, dev)
        reports.append(
            DeviationReport(
                theta=theta,
                verdict=theta <= threshold,
                threshold=threshold,
                T_grid=T_grid,
                dev=dev,
                mu=est.mu,
                mu_spread=est.spread,
                samples=samples,
                clock_error=clock_err,
            )
        )
    return reports


# -- rotation number ----------------------------------------------------------


def continued_fraction(x: float, terms: int = 12) -> tuple[int, ...]:
    """Partial quotients of x in [0,1): x = 1/(a1 + 1/(a2 + ...))."""
    out = []
    y = x % 1.0
    for _ in range(terms):
        if y < 1e-9:
            break
        y = 1.0 / y
        a = int(math.floor(y))
        out.append(a)
        y -= a
    return tuple(out)


def nearest_quadratic_relation(
    omega: float, coeff_range: int = 8
) -> tuple[tuple[int, int], float]:
    """Integer pair (p, q) minimising |omega^2 + p*omega + q|."""
    best = (0, 0)
    best_r = abs(omega * omega)
    for p in range(-coeff_range, coeff_range + 1):
        for q in range(-coeff_range, coeff_range + 1):
            r = abs(omega * omega + p * omega + q)
            if r < best_r:
                best_r = r
                best = (p, q)
    return best, best_r


@dataclass(frozen=True)
class RotationReport:
    """Rotation number of the section return map of the stable flow."""

    omega: float  # positively-oriented rotation number in [0, 1)
    raw: float  # mean unreduced section displacement per return
    relation: tuple[int, int]  # (p, q) of the nearest omega^2+p*omega+q = 0
    relation_residual: float
    cf: tuple[int, ...]  # continued-fraction partial quotients of omega
    returns: int
    t_final: float


def rotation_number(
    spec: MapSpec,
    *,
    start=(0.37, 0.21),
    section: float = 0.5,
    returns: int = 2048,
    depth: int | None = None,
    rtol: float = 1e-9,
    max_step: float = BASE_MAX_STEP,
    sgn: float = 1.0,
) -> RotationReport:
    """Rotation number of the first-return map to the section {x1 = c}.

    Crossing ordinates are refined to Newton accuracy; only the first and
    last crossings enter the estimate, so the error decays like 1/returns.
    The positively-oriented convention reports |displacement| mod 1."""
    if depth is None:
        depth = default_depth(spec)
    pm = spec.packed()
    lm = spec.linear()
    X0 = np.atleast_2d(np.asarray(start, dtype=np.float64))
    yfirst, ylast, count, minv1, status, tfinal = kernels.rotation_run(
        pm, X0, section, returns, lm.vs, sgn, depth, rtol, max_step
    )
    _raise_flow_status(status, "rotation sampling")
    if int(count[0]) < 2:
        raise NoConvergence(
            f"only {int(count[0])} section crossing(s) found; cannot estimate"
        )
    raw = (ylast[0] - yfirst[0]) / (count[0] - 1.0)
    omega = abs(raw) % 1.0
    relation, resid = nearest_quadratic_relation(omega)
    return RotationReport(
        omega=float(omega),
        raw=float(raw),
        relation=relation,
        relation_residual=float(resid),
        cf=continued_fraction(omega),
        returns=int(count[0]),
        t_final=float(tfinal[0]),
    )
