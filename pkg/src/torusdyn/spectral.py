"""Dynamical determinants, zeta functions, and resonance location.

Every fixed point of ``F^n`` carries its n-step multipliers: the stable one
``ms`` (|ms| < 1) and the unstable one ``mu`` (|mu| > 1), extracted from the
monodromy trace and determinant stored in an orbit database.  A *weight* is
a monomial ``a^p b^q`` in ``a = |ms|`` and ``b = mu`` (signed), and each
weighted determinant is

    d_w(z) = exp( - sum_{n>=1} z^n / n * S_n(w) ),
    S_n(w) = sum_{x in Fix F^n} a^p b^q / D(x),

where ``D`` is the base normaliser ``1/a - 1/(ab) - 1 + 1/b`` (positive
exactly when the stable bundle is orientable with ``ms > 0``), or its
extended variant ``D~ = D * (1 - a/b)`` which needs no orientability.

Two exact factorisations of the fixed-point zeta function
``zeta(z) = exp( sum z^n/n N_n )`` follow per point from the algebra of the
weights; ``check_identity`` verifies them through a given order, including
invariance of the coefficient magnitudes under the substitution
``z -> sigma*z`` (sigma the determinant of the linear part).

For the orientation-preserving route the determinant with weight ``1/a``
(extended normaliser) has an explicit product form over linear maps, and its
only zero in the closed unit disc sits at ``exp(-h_top)``; ``resonance_report``
locates that zero from orbit data alone and refuses to answer when the
truncated series shows no coefficient decay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    EigenSplitFailure,
    IncompleteDatabase,
    InsufficientDecaySignal,
    MissingMultipliers,
    NotOrientable,
    SpecError,
)
from .maps import LinearModel, MapSpec, verify_cone_condition
from .orbits import LevelData, OrbitDatabase
from .series import PowerSeries, find_zeros

#: weight name -> exponents (p, q) of a^p b^q with a = |ms_n|, b = mu_n
NAMED_WEIGHTS: dict[str, tuple[int, int]] = {
    "one": (0, 0),
    "inv-det": (-1, -1),
    "g-tilde": (-1, 0),
    "gu": (0, -1),
    "gu-over-g": (1, -1),
    "gu2": (0, -2),
    "gu2-over-g": (1, -2),
}

#: numerator/denominator weight groupings of the two zeta factorisations
BASE_GROUPING = (("one", "inv-det"), ("g-tilde", "gu"))
EXTENDED_GROUPING = (("one", "inv-det", "gu2-over-g"), ("g-tilde", "gu-over-g", "gu2"))


def weight_exponents(weight: str) -> tuple[int, int]:
    try:
        return NAMED_WEIGHTS[weight]
    except KeyError:
        raise SpecError(
            f"unknown weight {weight!r}; choose from {sorted(NAMED_WEIGHTS)}"
        ) from None


def split_multipliers(
    trace: np.ndarray, det: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Stable/unstable n-step multipliers from monodromy trace and det.

    The larger-magnitude root of ``t^2 - trace*t + det`` is the unstable
    multiplier ``mu``; ``ms = det/mu``.  Raises when the splitting
    ``|ms| < 1 < |mu|`` fails anywhere.
    """
    trace = np.asarray(trace, dtype=np.float64)
    det = np.asarray(det, dtype=np.float64)
    if trace.size == 0 or np.any(~np.isfinite(trace)) or np.any(~np.isfinite(det)):
        raise MissingMultipliers("monodromy trace/determinant data missing or invalid")
    disc = trace * trace - 4.0 * det
    if np.any(disc <= 0.0):
        raise EigenSplitFailure(
            f"{int(np.sum(disc <= 0.0))} point(s) have complex or defective "
            f"monodromy eigenvalues (min discriminant {float(np.min(disc)):.3e})"
        )
    mu = 0.5 * (trace + np.copysign(np.sqrt(disc), trace))
    ms = det / mu
    if not np.all((np.abs(ms) < 1.0) & (np.abs(mu) > 1.0)):
        bad = int(np.sum(~((np.abs(ms) < 1.0) & (np.abs(mu) > 1.0))))
        raise EigenSplitFailure(
            f"{bad} point(s) violate the multiplier split |ms| < 1 < |mu|"
        )
    return ms, mu


def _normalisers(
    ms: np.ndarray, mu: np.ndarray, extended: bool, context: str
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(a, b, D) per point; gates orientability for the base normaliser."""
    if not extended and np.any(ms <= 0.0):
        raise NotOrientable(
            f"{context}: {int(np.sum(ms <= 0.0))} point(s) have ms <= 0; the "
            f"base normaliser requires an orientable stable bundle "
            f"(use the extended route)"
        )
    a = np.abs(ms)
    b = mu
    D = 1.0 / a - 1.0 / (a * b) - 1.0 + 1.0 / b
    if extended:
        D = D * (1.0 - a / b)
    return a, b, D


def spectral_sum(level: LevelData, weight: str, extended: bool = False) -> float:
    """S_n(w) for one level, accumulated with compensated summation."""
    p, q = weight_exponents(weight)
    ms, mu = split_multipliers(level.trace, level.det)
    a, b, D = _normalisers(ms, mu, extended, f"level {level.n}")
    terms = np.power(a, p) * np.power(b, q) / D
    return math.fsum(terms.tolist())


def spectral_sums(
    db: OrbitDatabase, weight: str, order: int, extended: bool = False
) -> np.ndarray:
    """S_1(w) .. S_order(w) from the database (all levels must be present)."""
    out = np.empty(order)
    for n in range(1, order + 1):
        out[n - 1] = spectral_sum(db.level(n), weight, extended)
    return out


def determinant_series(
    db: OrbitDatabase,
    weight: str,
    order: int | None = None,
    extended: bool = False,
) -> PowerSeries:
    """Weighted determinant d_w(z) as a series through ``order``."""
    if order is None:
        order = max(db.level_list)
    sums = spectral_sums(db, weight, order, extended)
    c = np.zeros(order + 1, dtype=np.complex128)
    for n in range(1, order + 1):
        c[n] = -sums[n - 1] / n
    return PowerSeries(c).exp()


def zeta_from_counts(counts, order: int | None = None) -> PowerSeries:
    """Fixed-point zeta exp(sum z^n/n N_n) from counts or a database."""
    if isinstance(counts, OrbitDatabase):
        db = counts
        if order is None:
            order = max(db.level_list)
        counts = [db.level(n).count for n in range(1, order + 1)]
    counts = list(counts)
    if order is None:
        order = len(counts)
    if len(counts) < order:
        raise IncompleteDatabase(
            f"zeta through order {order} needs {order} counts, got {len(counts)}"
        )
    c = np.zeros(order + 1, dtype=np.complex128)
    for n in range(1, order + 1):
        c[n] = counts[n - 1] / n
    return PowerSeries(c).exp()


def closed_form_count(lm: LinearModel, n: int) -> float:
    """Fixed-point count of the linear map from its expansion rate."""
    lam = lm.lam
    if lm.sigma > 0 or n % 2 == 0:
        return lam**n + lam ** (-n) - 2.0
    return lam**n - lam ** (-n)


def zeta_closed_form(lm: LinearModel, order: int) -> PowerSeries:
    """Rational closed form of the linear-map zeta, expanded as a series.

    orientation-preserving:  (1-z)^2 / ((1-lam*z)(1-z/lam))
    orientation-reversing:   (1-z^2) / ((1-lam*z)(1+z/lam))
    """
    lam = lm.lam
    num = np.zeros(order + 1, dtype=np.complex128)
    if lm.sigma > 0:
        num[0] = 1.0
        if order >= 1:
            num[1] = -2.0
        if order >= 2:
            num[2] = 1.0
        den_roots = (lam, 1.0 / lam)
    else:
        num[0] = 1.0
        if order >= 2:
            num[2] = -1.0
        den_roots = (lam, -1.0 / lam)
    den = PowerSeries.one(order)
    for r in den_roots:
        f = np.zeros(order + 1, dtype=np.complex128)
        f[0] = 1.0
        if order >= 1:
            f[1] = -r
        den = den * PowerSeries(f)
    return PowerSeries(num).div(den)


def product_formula_series(
    lm: LinearModel, order: int, cutoff: float = 1e-18
) -> PowerSeries:
    """Product form of the ``1/a``-weighted extended determinant of a linear
    map: factors (1 - z * sigma^j * lam^(1-2j)) for j = 0, 1, ... until the
    factor magnitude drops below ``cutoff``."""
    out = PowerSeries.one(order)
    j = 0
    while True:
        mag = lm.lam ** (1 - 2 * j)
        if mag < cutoff:
            break
        r = (lm.sigma**j) * mag
        f = np.zeros(order + 1, dtype=np.complex128)
        f[0] = 1.0
        if order >= 1:
            f[1] = -r
        out = out * PowerSeries(f)
        j += 1
    return out


def per_point_identity_residuals(
    level: LevelData, extended: bool = False
) -> np.ndarray:
    """|combined weight / D + 1| per fixed point; zero in exact arithmetic.

    The combined weight is the signed sum of the numerator minus denominator
    monomials of the grouping, which telescopes to ``-D`` pointwise.
    """
    ms, mu = split_multipliers(level.trace, level.det)
    a, b, D = _normalisers(ms, mu, extended, f"level {level.n}")
    if extended:
        comb = (
            1.0
            + 1.0 / (a * b)
            + a / (b * b)
            - 1.0 / a
            - a / b
            - 1.0 / (b * b)
        )
    else:
        comb = 1.0 + 1.0 / (a * b) - 1.0 / a - 1.0 / b
    return np.abs(comb / D + 1.0)


@dataclass(frozen=True)
class IdentityReport:
    """Result of checking one zeta factorisation through a series order."""

    extended: bool
    order: int
    residual: float  # max |zeta_counts - combination| coefficient-wise
    twisted_residual: float  # same after substituting z -> sigma*z both sides
    per_point_max: float  # worst pointwise telescoping residual
    zeta_coeffs: np.ndarray
    combination_coeffs: np.ndarray


def check_identity(
    db: OrbitDatabase, order: int | None = None, extended: bool = False
) -> IdentityReport:
    """Verify the determinant factorisation of the zeta function.

    Builds the zeta series from fixed-point counts and the weighted
    determinant combination from multiplier data, and compares them
    coefficient by coefficient, along with the sigma-substitution twist."""
    if order is None:
        order = max(db.level_list)
    zeta = zeta_from_counts(db, order)
    num_names, den_names = EXTENDED_GROUPING if extended else BASE_GROUPING
    comb = PowerSeries.one(order)
    for name in num_names:
        comb = comb * determinant_series(db, name, order, extended)
    for name in den_names:
        comb = comb.div(determinant_series(db, name, order, extended))
    residual = zeta.max_abs_diff(comb)
    sigma = db.spec.matrix.sigma
    twisted = zeta.substitute_scaled(sigma).max_abs_diff(
        comb.substitute_scaled(sigma)
    )
    pp = 0.0
    for n in range(1, order + 1):
        r = per_point_identity_residuals(db.level(n), extended)
        if r.size:
            pp = max(pp, float(np.max(r)))
    return IdentityReport(
        extended=extended,
        order=order,
        residual=residual,
        twisted_residual=twisted,
        per_point_max=pp,
        zeta_coeffs=zeta.coeffs.copy(),
        combination_coeffs=comb.coeffs.copy(),
    )


@dataclass(frozen=True)
class ResonanceReport:
    """Location of the leading determinant zero against exp(-h_top)."""

    zero: complex
    modulus: float
    expected: float  # exp(-h_top) of the linear part
    distance: float
    simple: bool
    stable: bool
    disc_zero_count: int  # stable zeros strictly inside the unit disc
    order: int
    coeff_tail_ratio: float
    verdict: bool
    coeffs: np.ndarray


def resonance_report(
    db: OrbitDatabase,
    order: int | None = None,
    distance_tol: float = 1e-3,
    stability_tol: float = 1e-3,
) -> ResonanceReport:
    """Locate the leading resonance from periodic-orbit data.

    Computes the ``1/a``-weighted extended determinant through ``order``,
    finds its zeros, and checks that exactly one stable simple zero lies in
    the open unit disc, at distance at most ``distance_tol`` from
    ``exp(-h_top)``.  Raises when the truncated coefficients show no decay
    (the zero estimate would be meaningless)."""
    if order is None:
        order = max(db.level_list)
    det = determinant_series(db, "g-tilde", order, extended=True)
    mags = np.abs(det.coeffs)
    head = float(np.max(mags))
    tail = float(np.max(mags[2 * order // 3 :])) if order >= 3 else head
    tail_ratio = tail / head if head > 0 else math.inf
    if tail_ratio > 1e-2:
        raise InsufficientDecaySignal(
            f"determinant coefficients do not decay through order {order} "
            f"(tail/head = {tail_ratio:.3e}); raise the order before trusting zeros"
        )
    zeros = find_zeros(det, stability_tol=stability_tol)
    inside = [z for z in zeros if z.modulus < 1.0 and z.stable]
    expected = math.exp(-db.spec.linear().h_top)
    if not inside:
        raise InsufficientDecaySignal(
            f"no stable zero inside the unit disc at order {order}"
        )
    lead = min(inside, key=lambda z: abs(z.z - expected))
    distance = abs(lead.z - expected)
    verdict = (
        len(inside) == 1
        and lead.multiplicity == 1
        and lead.stable
        and distance <= distance_tol
    )
    return ResonanceReport(
        zero=lead.z,
        modulus=lead.modulus,
        expected=expected,
        distance=distance,
        simple=lead.multiplicity == 1,
        stable=lead.stable,
        disc_zero_count=len(inside),
        order=order,
        coeff_tail_ratio=tail_ratio,
        verdict=verdict,
        coeffs=det.coeffs.copy(),
    )


@dataclass(frozen=True)
class RegularityBounds:
    """Smoothness threshold and essential-spectral-radius bound."""

    r1: float  # smoothness above which the bound machinery applies
    r: float  # smoothness the bound is evaluated at
    lam: float  # certified hyperbolicity strength min(lam_u_min, 1/nu_s)
    h_top: float
    rho_bound: float  # exp(h_top) / lam^((r-1)/2)
    bound_valid: bool  # r >= r1
    eps: float


def rho_bounds(
    spec: MapSpec, r: float, eps: float = 0.01, report=None
) -> RegularityBounds:
    """Essential-spectral-radius bound from certified cone stretches.

    ``r1 = 1 + eps + (log Lam_u - log Lam_s) / (-log nu_s)`` is the
    smoothness threshold; the bound ``exp(h_top)/lam^((r-1)/2)`` uses the
    weakest certified expansion/contraction rate ``lam``.  ``h_top`` comes
    from the linear part (it is a conjugacy invariant).  Pass a cone
    ``report`` to reuse one already computed for this spec."""
    if report is None:
        report = verify_cone_condition(spec)
    h_top = spec.linear().h_top
    r1 = 1.0 + eps + (math.log(report.Lam_u) - math.log(report.Lam_s)) / (
        -math.log(report.nu_s)
    )
    lam = min(report.lam_u_min, 1.0 / report.nu_s)
    rho = math.exp(h_top) / lam ** ((r - 1.0) / 2.0)
    return RegularityBounds(
        r1=r1,
        r=r,
        lam=lam,
        h_top=h_top,
        rho_bound=rho,
        bound_valid=r >= r1,
        eps=eps,
    )
