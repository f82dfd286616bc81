"""Equidistribution of periodic points and the measure they select.

Uniform weights on the period-n points define an empirical measure; as n
grows it converges to the invariant measure of maximal entropy, and the
speed of that convergence is measured here through character averages

    mu_n(k) = (1/N_n) sum_{x : F^n x = x} exp(2 pi i k . x).

For a linear map the period-n set is a full lattice subgroup, so every
nontrivial character average vanishes *exactly* (the limit measure is
Lebesgue) and correlations of trigonometric observables reduce to a finite
mode-matching rule.  Those closed forms are exported as oracles.

For perturbed maps the module estimates the geometric decay rate of
|mu_n(k) - mu_ref(k)| across levels: the reliable window of that series is
its leading non-increasing stretch above a noise floor set by how converged
the reference itself is, and a least-squares fit over the window yields the
rate estimate rho_hat, to be compared against exp(-h_top)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDecaySignal, ResolutionExceeded
from .maps import MapSpec, evaluate_torus
from .orbits import LevelData, OrbitDatabase

DEFAULT_MODES = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2))
ZERO_SERIES_TOL = 1e-10
MIN_WINDOW = 5


def character_averages(level: LevelData, modes) -> np.ndarray:
    """Empirical character averages mu_n(k) over the level's point set."""
    X = level.points
    out = np.empty(len(modes), dtype=np.complex128)
    for i, k in enumerate(modes):
        ph = 2.0 * math.pi * (k[0] * X[:, 0] + k[1] * X[:, 1])
        out[i] = complex(np.mean(np.cos(ph)), np.mean(np.sin(ph)))
    return out


def lebesgue_character(mode) -> float:
    """Lebesgue integral of the character: 1 at the trivial mode, else 0."""
    return 1.0 if tuple(mode) == (0, 0) else 0.0


def linear_level_character(A, n: int, mode) -> float:
    """Exact character average over the period-n lattice of a linear map.

    The period-n set is the subgroup (A^n - I)^{-1} Z^2 / Z^2; a character
    sums to 1 on it iff k lies in (A^n - I)^T Z^2, else to 0."""
    An = A.power(n)
    b00, b01 = An.a - 1, An.b
    b10, b11 = An.c, An.d - 1
    det = b00 * b11 - b01 * b10
    if det == 0:
        raise ValueError(f"A^{n} - I is singular; the level is not finite")
    k0, k1 = int(mode[0]), int(mode[1])
    # solve B^T m = k with the exact integer adjugate
    m0 = b11 * k0 - b10 * k1
    m1 = -b01 * k0 + b00 * k1
    return 1.0 if (m0 % det == 0 and m1 % det == 0) else 0.0


def _full_spectrum(observable) -> dict[tuple[int, int], complex]:
    """Observable coefficients over the full (two-sided) mode lattice."""
    spec: dict[tuple[int, int], complex] = {}
    if observable.mean != 0.0:
        spec[(0, 0)] = complex(observable.mean)
    for k, c in zip(observable.modes, observable.amps):
        spec[k] = spec.get(k, 0j) + c
        mk = (-k[0], -k[1])
        spec[mk] = spec.get(mk, 0j) + c.conjugate()
    return spec


def lebesgue_correlations(A, f1, lags, f2=None) -> np.ndarray:
    """Exact Lebesgue correlations of a pair of observables under a linear
    map,

        C_j = integral f1(F^j x) f2(x) dx - integral f1 . integral f2:

    only mode pairs with (A^T)^j k + k' = 0 contribute, and subtracting the
    mean product removes the trivial-mode pairing."""
    if f2 is None:
        f2 = f1
    s1, s2 = _full_spectrum(f1), _full_spectrum(f2)
    mean_prod = f1.mean * f2.mean
    out = np.empty(len(lags))
    for i, j in enumerate(lags):
        Aj = A.power(int(j)) if int(j) >= 1 else None
        acc = 0j
        for (k0, k1), c in s1.items():
            # (A^T)^j k, then look for the cancelling mode of the partner
            if Aj is None:
                kj = (k0, k1)
            else:
                kj = (Aj.a * k0 + Aj.c * k1, Aj.b * k0 + Aj.d * k1)
            partner = s2.get((-kj[0], -kj[1]))
            if partner is not None:
                acc += c * partner
        out[i] = acc.real - mean_prod
    return out


def empirical_correlations(
    spec: MapSpec, level: LevelData, f1, lags, f2=None
) -> np.ndarray:
    """Correlations of an observable pair under the empirical level-n
    measure, means subtracted:

        C_j = mean(f1(F^j x) f2(x)) - mean(f1) mean(f2)

    over the level's point set.  The orbit average is computed by iterating
    the map on the points; lags are trustworthy only while the iterated
    modes stay below the lattice resolution, which caps them at n - 2."""
    if f2 is None:
        f2 = f1
    lags = [int(j) for j in lags]
    max_lag = max(lags, default=0)
    if max_lag > max(0, level.n - 2):
        raise ResolutionExceeded(
            f"level {level.n} resolves correlation lags up to {max(0, level.n - 2)}; "
            f"requested {max_lag}.  Build a deeper level."
        )
    base = f2.evaluate(level.points)
    mean_prod = float(np.mean(f1.evaluate(level.points))) * float(np.mean(base))
    out = np.empty(len(lags))
    X = level.points.copy()
    vals = {0: f1.evaluate(level.points)}
    for j in range(1, max_lag + 1):
        X = evaluate_torus(spec, X)
        if j in lags:
            vals[j] = f1.evaluate(X)
    for i, j in enumerate(lags):
        out[i] = float(np.mean(vals[j] * base)) - mean_prod
    # note: the point set is n-periodic, so C_j = C_{n-j} identically; lags
    # past n/2 mirror earlier ones instead of adding information
    return out


@dataclass(frozen=True)
class DecayFit:
    """Geometric decay rate fitted over the reliable window of a series."""

    rho: float
    window: tuple[int, ...]  # level numbers used in the fit
    floor: float
    superexponential: bool  # series was identically at roundoff level
    bound_only: bool = False  # rho is an upper bound, not a fitted rate


def decay_rate_fit(
    levels, series, floor: float, min_window: int = MIN_WINDOW,
    monotone: bool = True, allow_floor_bound: bool = False,
) -> DecayFit:
    """Fit log-linear decay over the leading stretch of the series that
    stays above the noise floor.

    With ``monotone`` (the default, suited to convergence-error series) the
    window also stops at the first uptick; correlation magnitudes may
    oscillate while decaying, so their fits pass ``monotone=False``.  A
    series that is at roundoff level everywhere past its peak decays faster
    than any resolvable geometric rate and is reported as superexponential
    with rate 0.

    When the series dives below the floor before ``min_window`` values
    accumulate, the decay outpaced what the measure resolves.  With
    ``allow_floor_bound`` that is returned as an upper bound on the rate
    (``bound_only=True``, rho = (floor/peak)^(1/steps-to-floor)) instead of
    an error; without it the short window raises InsufficientDecaySignal."""
    levels = np.asarray(levels, dtype=np.int64)
    series = np.asarray(series, dtype=np.float64)
    if np.all(series <= ZERO_SERIES_TOL):
        return DecayFit(rho=0.0, window=(), floor=floor, superexponential=True)
    start = int(np.argmax(series))
    if start + 1 < series.size and np.all(series[start + 1 :] <= ZERO_SERIES_TOL):
        return DecayFit(rho=0.0, window=(), floor=floor, superexponential=True)
    idx = [start]
    floor_cut = None
    for i in range(start + 1, series.size):
        if series[i] < floor:
            floor_cut = i
            break
        if monotone and series[i] > series[idx[-1]]:
            break
        idx.append(i)
    if len(idx) < min_window:
        if allow_floor_bound and floor_cut is not None:
            bound = float((floor / series[start]) ** (1.0 / (floor_cut - start)))
            return DecayFit(
                rho=bound,
                window=tuple(int(levels[i]) for i in idx),
                floor=floor,
                superexponential=False,
                bound_only=True,
            )
        raise InsufficientDecaySignal(
            f"only {len(idx)} usable value(s) above the noise floor "
            f"{floor:.3e}; the decay rate cannot be resolved"
        )
    sl = np.polyfit(levels[idx].astype(float), np.log(series[idx]), 1)[0]
    return DecayFit(
        rho=float(math.exp(sl)),
        window=tuple(int(levels[i]) for i in idx),
        floor=floor,
        superexponential=False,
    )


@dataclass(frozen=True)
class CorrelationReport:
    """Correlation magnitudes of an observable pair across lags, with the
    geometric decay rate fitted over the pre-noise window."""

    lags: tuple[int, ...]
    values: np.ndarray  # mean-subtracted C_j per lag
    mean1: float  # mean of f1 under the measure used
    mean2: float
    level: int  # period of the point set standing in for the measure
    floor: float
    fit: DecayFit
    rate_limit: float  # exp(-h_top), the expected decay rate

    def ok(self, margin: float = 1.2) -> bool:
        return self.fit.superexponential or self.fit.rho <= margin * self.rate_limit


def _reference_error(db: OrbitDatabase, n: int, modes=DEFAULT_MODES) -> float:
    """Spread between the level-n and level-(n-2) character averages; the
    empirical measure cannot be trusted below this resolution."""
    if n - 2 in db.level_list:
        mu_n = character_averages(db.level(n), modes)
        mu_p = character_averages(db.level(n - 2), modes)
        return float(np.max(np.abs(mu_n - mu_p)))
    return math.exp(-0.5 * db.spec.linear().h_top * n)


def correlation_decay(
    db: OrbitDatabase, f1, f2=None, k_max: int | None = None,
    min_window: int = MIN_WINDOW,
) -> CorrelationReport:
    """Fit the correlation decay rate of a pair under the deepest level.

    Lags run from 0 to ``k_max``, defaulting to n/2 for the deepest level n
    since the n-periodicity of the point set mirrors later lags onto
    earlier ones.  Values below 10x the measure's own convergence error
    only echo that error, so they set the fit's noise floor; correlation
    magnitudes may oscillate, hence a non-monotone window, and a series
    that outruns the floor is reported as a rate upper bound."""
    if f2 is None:
        f2 = f1
    n = db.level_list[-1]
    level = db.level(n)
    if k_max is None:
        k_max = max(0, n // 2)
    lags = list(range(0, k_max + 1))
    values = empirical_correlations(db.spec, level, f1, lags, f2)
    if db.spec.is_linear:
        floor = 0.0  # exact point sets: the series has no noise plateau
    else:
        floor = 10.0 * _reference_error(db, n)
    fit = decay_rate_fit(
        lags, np.abs(values), floor, min_window=min_window,
        monotone=False, allow_floor_bound=True,
    )
    return CorrelationReport(
        lags=tuple(lags),
        values=values,
        mean1=float(np.mean(f1.evaluate(level.points))),
        mean2=float(np.mean(f2.evaluate(level.points))),
        level=n,
        floor=floor,
        fit=fit,
        rate_limit=math.exp(-db.spec.linear().h_top),
    )


@dataclass(frozen=True)
class EquidistributionReport:
    """Convergence of level-n character averages toward their limit."""

    modes: tuple[tuple[int, int], ...]
    levels: tuple[int, ...]
    table: np.ndarray  # (levels, modes) complex character averages
    reference: np.ndarray  # the limit proxy per mode
    reference_exact: bool  # True when the limit is the Lebesgue value
    series: np.ndarray  # per level: max over modes of |mu_n - reference|
    fit: DecayFit
    rate_limit: float  # exp(-h_top), the expected decay rate

    def ok(self, margin: float = 1.2) -> bool:
        return self.fit.superexponential or self.fit.rho <= margin * self.rate_limit


def equidistribution_report(
    db: OrbitDatabase, modes=DEFAULT_MODES, min_window: int = MIN_WINDOW
) -> EquidistributionReport:
    """Measure how fast the empirical measures converge, mode by mode.

    Linear maps use the exact Lebesgue limit (all zero) as reference; the
    series is then identically zero and the verdict is superexponential.
    Otherwise the deepest level stands in for the limit, and the noise
    floor is 10x the spread between the two deepest same-parity levels --
    below that, differences only measure the reference's own error."""
    modes = tuple((int(k[0]), int(k[1])) for k in modes)
    levels = list(db.level_list)
    table = np.vstack([character_averages(db.level(n), modes) for n in levels])
    h_top = db.spec.linear().h_top
    if db.spec.is_linear:
        # compare each level against its exact lattice value (shallow levels
        # legitimately alias: the period-1 set is just the origin); the limit
        # itself is Lebesgue, i.e. zero on every nontrivial mode
        reference = np.zeros(len(modes), dtype=np.complex128)
        exact = True
        fit_levels = levels
        A = db.spec.matrix
        exact_table = np.array(
            [[linear_level_character(A, n, k) for k in modes] for n in levels]
        )
        diffs = table - exact_table
    else:
        reference = table[-1]
        exact = False
        fit_levels = levels[:-1]
        diffs = table[:-1] - reference[None, :]
    series = np.max(np.abs(diffs), axis=1)
    if exact:
        floor = 0.0
    else:
        ref_err = (
            float(np.max(np.abs(table[-1] - table[-3])))
            if len(levels) >= 3
            else 0.0
        )
        floor = 10.0 * ref_err
        if floor == 0.0:
            floor = math.exp(-0.5 * h_top * levels[-1])
    fit = decay_rate_fit(fit_levels, series, floor, min_window=min_window)
    return EquidistributionReport(
        modes=modes,
        levels=tuple(fit_levels),
        table=table,
        reference=reference,
        reference_exact=exact,
        series=series,
        fit=fit,
        rate_limit=math.exp(-h_top),
    )
