"""Truncated power-series algebra and polynomial zero finding.

Series are represented by their coefficient vector ``c[0..N]`` (complex128)
for sums ``c_0 + c_1 z + ... + c_N z^N``.  Multiplication, division, exp and
log use the standard convolution/Newton recurrences, exact through the stored
order.  ``find_zeros`` locates zeros of the truncation via an explicit
companion matrix, after trimming trailing coefficients that have decayed to
relative noise, and cross-checks each zero against a two-orders-lower
truncation to flag which zeros are stable features of the series rather than
artifacts of the cut.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import SpecError


@dataclass(frozen=True)
class PowerSeries:
    """Truncated power series with complex coefficients ``c[0..order]``."""

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        c = np.ascontiguousarray(self.coeffs, dtype=np.complex128)
        if c.ndim != 1 or c.size == 0:
            raise SpecError("series coefficients must be a non-empty 1-d array")
        object.__setattr__(self, "coeffs", c)

    @property
    def order(self) -> int:
        return self.coeffs.size - 1

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[complex]) -> "PowerSeries":
        return cls(np.asarray(list(coeffs), dtype=np.complex128))

    @classmethod
    def one(cls, order: int) -> "PowerSeries":
        c = np.zeros(order + 1, dtype=np.complex128)
        c[0] = 1.0
        return cls(c)

    @classmethod
    def zero(cls, order: int) -> "PowerSeries":
        return cls(np.zeros(order + 1, dtype=np.complex128))

    def truncate(self, order: int) -> "PowerSeries":
        if order >= self.order:
            c = np.zeros(order + 1, dtype=np.complex128)
            c[: self.coeffs.size] = self.coeffs
            return PowerSeries(c)
        return PowerSeries(self.coeffs[: order + 1].copy())

    def __call__(self, z: complex) -> complex:
        acc = 0.0 + 0.0j
        for c in self.coeffs[::-1]:
            acc = acc * z + c
        return acc

    def __add__(self, other: "PowerSeries") -> "PowerSeries":
        n = min(self.order, other.order)
        return PowerSeries(self.coeffs[: n + 1] + other.coeffs[: n + 1])

    def __sub__(self, other: "PowerSeries") -> "PowerSeries":
        n = min(self.order, other.order)
        return PowerSeries(self.coeffs[: n + 1] - other.coeffs[: n + 1])

    def scale(self, a: complex) -> "PowerSeries":
        return PowerSeries(self.coeffs * a)

    def __mul__(self, other: "PowerSeries") -> "PowerSeries":
        n = min(self.order, other.order)
        out = np.zeros(n + 1, dtype=np.complex128)
        for k in range(n + 1):
            out[k] = np.sum(self.coeffs[: k + 1] * other.coeffs[k::-1])
        return PowerSeries(out)

    def div(self, other: "PowerSeries") -> "PowerSeries":
        """Series quotient; the divisor needs a nonzero constant term."""
        n = min(self.order, other.order)
        b0 = other.coeffs[0]
        if b0 == 0:
            raise SpecError("series division needs a nonzero constant term")
        out = np.zeros(n + 1, dtype=np.complex128)
        for k in range(n + 1):
            s = self.coeffs[k]
            if k:
                s = s - np.sum(other.coeffs[1 : k + 1] * out[k - 1 :: -1])
            out[k] = s / b0
        return PowerSeries(out)

    def exp(self) -> "PowerSeries":
        """exp of the series: E' = c' E gives k E_k = sum j c_j E_{k-j}."""
        n = self.order
        out = np.zeros(n + 1, dtype=np.complex128)
        out[0] = np.exp(self.coeffs[0])
        for k in range(1, n + 1):
            s = 0.0 + 0.0j
            for j in range(1, k + 1):
                s += j * self.coeffs[j] * out[k - j]
            out[k] = s / k
        return PowerSeries(out)

    def log(self) -> "PowerSeries":
        """log of the series; the constant term must be nonzero."""
        n = self.order
        c0 = self.coeffs[0]
        if c0 == 0:
            raise SpecError("series log needs a nonzero constant term")
        out = np.zeros(n + 1, dtype=np.complex128)
        out[0] = np.log(c0)
        for k in range(1, n + 1):
            s = k * self.coeffs[k]
            for j in range(1, k):
                s -= j * out[j] * self.coeffs[k - j]
            out[k] = s / (k * c0)
        return PowerSeries(out)

    def substitute_scaled(self, a: complex) -> "PowerSeries":
        """Argument scaling z -> a*z, i.e. coefficients c_k * a^k."""
        powers = np.power(np.complex128(a), np.arange(self.coeffs.size))
        return PowerSeries(self.coeffs * powers)

    def max_abs_diff(self, other: "PowerSeries") -> float:
        n = min(self.order, other.order)
        return float(np.max(np.abs(self.coeffs[: n + 1] - other.coeffs[: n + 1])))


def polynomial_from_roots(roots: Iterable[complex], order: int) -> PowerSeries:
    """Series of prod (1 - z*r) for the given inverse-root factors ``r``."""
    out = PowerSeries.one(order)
    for r in roots:
        c = np.zeros(order + 1, dtype=np.complex128)
        c[0] = 1.0
        if order >= 1:
            c[1] = -r
        out = out * PowerSeries(c)
    return out


@dataclass(frozen=True)
class SeriesZero:
    """One zero of a truncated series with stability metadata."""

    z: complex
    modulus: float
    stable: bool
    multiplicity: int
    shift_on_truncation: float


def trim_degree(coeffs: np.ndarray, trim_rel: float = 1e-13) -> int:
    """Largest index whose coefficient is above relative noise (0 if none)."""
    mags = np.abs(coeffs)
    mx = float(np.max(mags))
    if mx == 0.0:
        return 0
    above = np.flatnonzero(mags > trim_rel * mx)
    return int(above[-1]) if above.size else 0


def _companion_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of c_0 + c_1 z + ... + c_d z^d via the companion matrix."""
    d = coeffs.size - 1
    if d < 1:
        return np.zeros(0, dtype=np.complex128)
    monic = coeffs / coeffs[-1]
    comp = np.zeros((d, d), dtype=np.complex128)
    for i in range(1, d):
        comp[i, i - 1] = 1.0
    comp[:, -1] = -monic[:d]
    return np.linalg.eigvals(comp)


def find_zeros(
    series: PowerSeries,
    trim_rel: float = 1e-13,
    stability_tol: float = 1e-3,
) -> list[SeriesZero]:
    """Zeros of the trimmed truncation, sorted by modulus.

    A zero is marked stable when dropping the last two retained coefficients
    moves it by at most ``10 * stability_tol``; multiplicity counts zeros of
    the full truncation clustered within ``stability_tol``.
    """
    deg = trim_degree(series.coeffs, trim_rel)
    if deg < 1:
        return []
    roots = _companion_roots(series.coeffs[: deg + 1])
    ref_deg = deg - 2
    ref_roots = (
        _companion_roots(series.coeffs[: ref_deg + 1]) if ref_deg >= 1 else None
    )
    order = np.argsort(np.abs(roots))
    roots = roots[order]
    used = np.zeros(roots.size, dtype=bool)
    out: list[SeriesZero] = []
    for i in range(roots.size):
        if used[i]:
            continue
        cluster = [i]
        used[i] = True
        for j in range(i + 1, roots.size):
            if not used[j] and abs(roots[j] - roots[i]) <= stability_tol:
                cluster.append(j)
                used[j] = True
        z = complex(np.mean(roots[cluster]))
        if ref_roots is not None and ref_roots.size:
            shift = float(np.min(np.abs(ref_roots - z)))
        else:
            shift = math.inf
        out.append(
            SeriesZero(
                z=z,
                modulus=abs(z),
                stable=shift <= 10.0 * stability_tol,
                multiplicity=len(cluster),
                shift_on_truncation=shift,
            )
        )
    out.sort(key=lambda s: s.modulus)
    return out
