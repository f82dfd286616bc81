"""Hyperbolic torus maps: integer matrices plus trigonometric perturbations.

A map is specified as ``F = A + p`` where ``A`` is a hyperbolic element of
GL(2, Z) acting on the two-torus ``T^2 = R^2/Z^2`` and ``p`` is a finite sum
of sinusoidal terms, each Z^2-periodic, so the lift satisfies the
equivariance relation ``F_lift(x + m) = F_lift(x) + A m`` for integer ``m``.

The module owns:

* exact integer-matrix data (:class:`IntegerMatrix2`) with hyperbolicity
  validation and closed-form eigen data (:func:`linear_model`),
* the map specification (:class:`MapSpec`) with JSON round-trip and a
  content hash used to key derived artifacts,
* lift/torus evaluation and Jacobians (delegated to the compiled kernels),
* the constant-cone hyperbolicity certificate (:func:`verify_cone_condition`)
  that downstream modules require before trusting a spec.

All metric quantities use the flat metric on ``[0,1)^2``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .errors import NotHyperbolic, SpecError

TWO_PI = 2.0 * math.pi


def reduce_torus(x: np.ndarray) -> np.ndarray:
    """Reduce lift coordinates mod 1 into ``[0,1)^2`` (idempotent)."""
    x = np.asarray(x, dtype=np.float64)
    r = x - np.floor(x)
    # floor(x) can round r up to exactly 1.0 for tiny negative inputs
    return np.where(r >= 1.0, r - 1.0, r)


def torus_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Distance on the flat torus (max over coordinates of circle distance)."""
    d = np.abs(reduce_torus(np.asarray(x) - np.asarray(y)))
    d = np.minimum(d, 1.0 - d)
    return np.max(d, axis=-1)


@dataclass(frozen=True)
class IntegerMatrix2:
    """Exact 2x2 integer matrix ``[[a, b], [c, d]]`` with |det| = 1."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d"):
            v = getattr(self, name)
            if not isinstance(v, int) or isinstance(v, bool):
                raise SpecError(f"matrix entry {name}={v!r} is not an integer")
        if abs(self.det) != 1:
            raise SpecError(f"matrix determinant {self.det} is not +-1")

    @property
    def det(self) -> int:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> int:
        return self.a + self.d

    @property
    def sigma(self) -> int:
        """Orientation sign: determinant, +1 or -1."""
        return self.det

    def require_hyperbolic(self) -> None:
        """Raise :class:`NotHyperbolic` unless no eigenvalue lies on the unit circle.

        For det = +1 this means |trace| > 2; for det = -1 the eigenvalues are
        real of product -1 and avoid +-1 exactly when trace != 0.
        """
        t, s = self.trace, self.sigma
        if s == 1 and abs(t) <= 2:
            raise NotHyperbolic(
                f"trace {t} with det +1 gives an eigenvalue on the unit circle"
            )
        if s == -1 and t == 0:
            raise NotHyperbolic("trace 0 with det -1 gives eigenvalues +-1")

    @property
    def is_hyperbolic(self) -> bool:
        try:
            self.require_hyperbolic()
        except NotHyperbolic:
            return False
        return True

    def as_array(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=np.float64)

    def inverse_array(self) -> np.ndarray:
        """Exact float inverse (entries are integers divided by det = +-1)."""
        s = float(self.det)
        return np.array(
            [[self.d / s, -self.b / s], [-self.c / s, self.a / s]], dtype=np.float64
        )

    def to_rows(self) -> list[list[int]]:
        return [[self.a, self.b], [self.c, self.d]]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[int]]) -> "IntegerMatrix2":
        (a, b), (c, d) = rows
        return cls(int(a), int(b), int(c), int(d))

    def matmul(self, other: "IntegerMatrix2") -> "IntegerMatrix2":
        return IntegerMatrix2(
            self.a * other.a + self.b * other.c,
            self.a * other.b + self.b * other.d,
            self.c * other.a + self.d * other.c,
            self.c * other.b + self.d * other.d,
        )

    def power(self, n: int) -> "IntegerMatrix2":
        """Exact integer power by squaring, n >= 1."""
        if n < 1:
            raise SpecError(f"matrix power needs n >= 1, got {n}")
        result = None
        base = self
        while n:
            if n & 1:
                result = base if result is None else result.matmul(base)
            base = base.matmul(base)
            n >>= 1
        assert result is not None
        return result


@dataclass(frozen=True)
class LinearModel:
    """Closed-form eigen data of a hyperbolic integer matrix.

    ``lam`` is the modulus of the expanding eigenvalue, ``h_top = log(lam)``
    the topological entropy, ``sigma`` the determinant. ``ms``/``mu`` are the
    signed contracting/expanding eigenvalues and ``vs``/``vu`` the unit
    eigenvectors, each normalised to positive first coordinate (the first
    coordinate never vanishes for a hyperbolic matrix: b = 0 forces integer
    eigenvalues +-1).
    """

    lam: float
    h_top: float
    sigma: int
    ms: float
    mu: float
    vs: np.ndarray
    vu: np.ndarray


def linear_model(A: IntegerMatrix2) -> LinearModel:
    """Spectral data of the linear part; raises :class:`NotHyperbolic`."""
    A.require_hyperbolic()
    t = float(A.trace)
    s = float(A.sigma)
    disc = t * t - 4.0 * s
    root = math.sqrt(disc)
    # the two real eigenvalues; expanding = larger modulus
    e1 = 0.5 * (t + root)
    e2 = 0.5 * (t - root)
    mu, ms = (e1, e2) if abs(e1) > abs(e2) else (e2, e1)

    def unit_eigvec(lam: float) -> np.ndarray:
        if A.b != 0:
            v = np.array([1.0, (lam - A.a) / A.b])
        else:  # unreachable for hyperbolic matrices; kept for safety
            v = np.array([A.c / (lam - A.d), 1.0])
        v /= math.hypot(v[0], v[1])
        if v[0] < 0:
            v = -v
        return v

    return LinearModel(
        lam=abs(mu),
        h_top=math.log(abs(mu)),
        sigma=A.sigma,
        ms=ms,
        mu=mu,
        vs=unit_eigvec(ms),
        vu=unit_eigvec(mu),
    )


@dataclass(frozen=True)
class PerturbationTerm:
    """One sinusoidal forcing term ``amp * sin(2*pi*(mode . x) + phase)``
    added to lift coordinate ``coord``."""

    coord: int
    mode: tuple[int, int]
    amp: float
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.coord not in (0, 1):
            raise SpecError(f"term coord must be 0 or 1, got {self.coord}")
        k1, k2 = self.mode
        if not (isinstance(k1, int) and isinstance(k2, int)):
            raise SpecError(f"term mode {self.mode!r} must be integer")
        if k1 == 0 and k2 == 0:
            raise SpecError("term mode (0,0) is not periodic forcing; fold it out")
        if not math.isfinite(self.amp) or not math.isfinite(self.phase):
            raise SpecError("term amp/phase must be finite")


class PackedMap(NamedTuple):
    """Plain-array view of a MapSpec consumed by the compiled kernels."""

    mat: np.ndarray  # (2,2) float64
    minv: np.ndarray  # (2,2) float64 exact inverse of mat
    tcoord: np.ndarray  # (m,) int64
    tk: np.ndarray  # (m,2) float64
    tamp: np.ndarray  # (m,) float64
    tph: np.ndarray  # (m,) float64


@dataclass(frozen=True)
class MapSpec:
    """A torus map ``F = A + p`` with label; immutable and content-hashable."""

    matrix: IntegerMatrix2
    terms: tuple[PerturbationTerm, ...] = ()
    label: str = ""

    def __post_init__(self) -> None:
        self.matrix.require_hyperbolic()

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "matrix": self.matrix.to_rows(),
            "terms": [
                {
                    "coord": t.coord,
                    "mode": [t.mode[0], t.mode[1]],
                    "amp": t.amp,
                    "phase": t.phase,
                }
                for t in self.terms
            ],
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MapSpec":
        try:
            matrix = IntegerMatrix2.from_rows(data["matrix"])
            terms = tuple(
                PerturbationTerm(
                    coord=int(t["coord"]),
                    mode=(int(t["mode"][0]), int(t["mode"][1])),
                    amp=float(t["amp"]),
                    phase=float(t.get("phase", 0.0)),
                )
                for t in data.get("terms", ())
            )
        except (KeyError, TypeError, ValueError, IndexError) as exc:
            raise SpecError(f"malformed map spec: {exc}") from exc
        return cls(matrix=matrix, terms=terms, label=str(data.get("label", "")))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "MapSpec":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "MapSpec":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def content_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    # -- derived views -----------------------------------------------------

    @property
    def is_linear(self) -> bool:
        return len(self.terms) == 0 or all(t.amp == 0.0 for t in self.terms)

    @property
    def max_amplitude(self) -> float:
        return max((abs(t.amp) for t in self.terms), default=0.0)

    def scaled(self, s: float, label: str | None = None) -> "MapSpec":
        """Spec with every term amplitude multiplied by ``s`` (homotopy slices)."""
        terms = tuple(
            PerturbationTerm(t.coord, t.mode, s * t.amp, t.phase) for t in self.terms
        )
        return MapSpec(self.matrix, terms, label if label is not None else self.label)

    def packed(self) -> PackedMap:
        m = len(self.terms)
        tcoord = np.zeros(m, dtype=np.int64)
        tk = np.zeros((m, 2), dtype=np.float64)
        tamp = np.zeros(m, dtype=np.float64)
        tph = np.zeros(m, dtype=np.float64)
        for i, t in enumerate(self.terms):
            tcoord[i] = t.coord
            tk[i, 0], tk[i, 1] = float(t.mode[0]), float(t.mode[1])
            tamp[i] = t.amp
            tph[i] = t.phase
        return PackedMap(
            mat=np.ascontiguousarray(self.matrix.as_array()),
            minv=np.ascontiguousarray(self.matrix.inverse_array()),
            tcoord=tcoord,
            tk=np.ascontiguousarray(tk),
            tamp=tamp,
            tph=tph,
        )

    def linear(self) -> LinearModel:
        return linear_model(self.matrix)


def make_spec(
    rows: Sequence[Sequence[int]],
    terms: Iterable[dict] | None = None,
    label: str = "",
) -> MapSpec:
    """Convenience constructor from plain data (see MapSpec.from_dict)."""
    return MapSpec.from_dict(
        {"matrix": [list(r) for r in rows], "terms": list(terms or ()), "label": label}
    )


# -- evaluation (thin wrappers over the kernel backend) ---------------------


def evaluate_lift(spec: MapSpec, x: np.ndarray) -> np.ndarray:
    """Lift image ``A x + p(x)``; accepts shape (2,) or (B,2)."""
    from . import kernels

    pm = spec.packed()
    xs = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = kernels.lift(pm, xs)
    return y[0] if np.asarray(x).ndim == 1 else y


def evaluate_torus(spec: MapSpec, x: np.ndarray) -> np.ndarray:
    """Torus image: lift reduced mod 1."""
    return reduce_torus(evaluate_lift(spec, x))


def jacobian(spec: MapSpec, x: np.ndarray) -> np.ndarray:
    """Derivative matrix of the lift; shape (2,2) or (B,2,2).

    Identical at ``x`` and ``x + m`` for integer ``m`` (periodic forcing).
    """
    from . import kernels

    pm = spec.packed()
    xs = np.atleast_2d(np.asarray(x, dtype=np.float64))
    j = kernels.jac(pm, xs)
    return j[0] if np.asarray(x).ndim == 1 else j


def inverse_lift(spec: MapSpec, y: np.ndarray, tol: float = 1e-13, max_iter: int = 50) -> np.ndarray:
    """Unique lift preimage, Newton-seeded with the linear inverse."""
    from . import kernels

    pm = spec.packed()
    ys = np.atleast_2d(np.asarray(y, dtype=np.float64))
    x = kernels.invert_lift(pm, ys, tol, max_iter)
    return x[0] if np.asarray(y).ndim == 1 else x


# -- constant-cone hyperbolicity certificate ---------------------------------


@dataclass(frozen=True)
class ConeReport:
    """Result of the grid cone check; ``passed`` gates downstream modules.

    Stretch statistics are measured along locally iterated stable/unstable
    directions: ``lam_u_min``/``Lam_u`` are the min/max pointwise unstable
    stretch, ``nu_s``/``Lam_s`` the max/min pointwise stable stretch (so
    hyperbolicity needs ``Lam_s <= nu_s < 1 < lam_u_min <= Lam_u``).
    """

    passed: bool
    halfwidth: float
    grid_n: int
    margin: float
    lam_u_min: float
    nu_s: float
    Lam_u: float
    Lam_s: float
    min_angle: float
    orientation_preserved: bool
    sigma: int
    message: str = ""


_CONE_CACHE: dict[tuple[str, float, int], ConeReport] = {}


def verify_cone_condition(
    spec: MapSpec, halfwidth: float = 0.3, grid_n: int = 32
) -> ConeReport:
    """Check the constant stable cone on a grid and measure stretch bounds.

    The cone is centred on the stable eigendirection of the linear part, with
    the given halfwidth as slope bound in the linear eigenbasis. The check
    requires the derivative pullback ``DF(x)^{-1}`` to map the cone strictly
    into itself at every grid point. Stretches come from depth-iterated
    pullback/pushforward at each grid point and reduce to the eigenvalue
    moduli of ``A`` for linear specs.

    Results are cached per (content hash, halfwidth, grid size).
    """
    if grid_n < 16:
        raise SpecError(f"cone grid must be at least 16, got {grid_n}")
    if not (0.0 < halfwidth < 10.0):
        raise SpecError(f"cone halfwidth must be in (0, 10), got {halfwidth}")
    key = (spec.content_hash(), float(halfwidth), int(grid_n))
    cached = _CONE_CACHE.get(key)
    if cached is not None:
        return cached

    from . import kernels

    lin = spec.linear()
    pm = spec.packed()
    g = (np.arange(grid_n) + 0.5) / grid_n
    xx, yy = np.meshgrid(g, g, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])

    # basis matrix E = [vu | vs]; coordinates w = E^{-1} v, cone: |w_u| <= k |w_s|
    E = np.column_stack([lin.vu, lin.vs])
    Einv = np.linalg.inv(E)
    J = kernels.jac(pm, pts)  # (B,2,2)
    detJ = J[:, 0, 0] * J[:, 1, 1] - J[:, 0, 1] * J[:, 1, 0]
    if np.any(np.abs(detJ) < 1e-12):
        report = ConeReport(
            False, halfwidth, grid_n, -1.0, math.nan, math.nan, math.nan, math.nan,
            math.nan, False, spec.matrix.sigma,
            "derivative is singular at a grid point",
        )
        _CONE_CACHE[key] = report
        return report
    Jinv = np.empty_like(J)
    Jinv[:, 0, 0] = J[:, 1, 1] / detJ
    Jinv[:, 0, 1] = -J[:, 0, 1] / detJ
    Jinv[:, 1, 0] = -J[:, 1, 0] / detJ
    Jinv[:, 1, 1] = J[:, 0, 0] / detJ

    # boundary rays of the stable cone, mapped by the pullback
    worst = 0.0
    for sgn in (+1.0, -1.0):
        ray = E @ np.array([sgn * halfwidth, 1.0])
        img = Jinv @ ray  # (B,2)
        w = img @ Einv.T  # eigenbasis coordinates of the images
        ratio = np.abs(w[:, 0]) / np.maximum(np.abs(w[:, 1]), 1e-300)
        worst = max(worst, float(np.max(ratio)))
    margin = 1.0 - worst / halfwidth
    if margin <= 0.0:
        report = ConeReport(
            False, halfwidth, grid_n, margin, math.nan, math.nan, math.nan, math.nan,
            math.nan, False, spec.matrix.sigma,
            f"stable cone not strictly invariant (margin {margin:.3e})",
        )
        _CONE_CACHE[key] = report
        return report

    depth = 40
    vs, vfs, ms, res_s = kernels.stable_pair(pm, pts, depth, lin.vs)
    vu, vfu, mu, res_u, ok_u = kernels.unstable_pair(pm, pts, depth, lin.vu, 1e-13, 50)
    if not np.all(ok_u):
        report = ConeReport(
            False, halfwidth, grid_n, margin, math.nan, math.nan, math.nan, math.nan,
            math.nan, False, spec.matrix.sigma,
            "lift inversion failed while measuring unstable stretch",
        )
        _CONE_CACHE[key] = report
        return report

    # computed stable directions must live inside the certified cone
    wcoords = vs @ Einv.T
    inside = np.abs(wcoords[:, 0]) <= halfwidth * np.abs(wcoords[:, 1])
    abs_ms = np.abs(ms)
    abs_mu = np.abs(mu)
    nu_s = float(np.max(abs_ms))
    Lam_s = float(np.min(abs_ms))
    lam_u_min = float(np.min(abs_mu))
    Lam_u = float(np.max(abs_mu))
    cross = np.abs(vs[:, 0] * vu[:, 1] - vs[:, 1] * vu[:, 0])
    min_angle = float(np.min(np.arcsin(np.clip(cross, 0.0, 1.0))))
    orientation_preserved = bool(np.all(ms > 0.0))
    hyperbolic = nu_s < 1.0 < lam_u_min
    passed = bool(hyperbolic and np.all(inside))
    msg = ""
    if not np.all(inside):
        msg = "iterated stable direction escapes the certified cone"
    elif not hyperbolic:
        msg = f"stretch bounds not hyperbolic (nu_s={nu_s:.4f}, lam_u_min={lam_u_min:.4f})"
    report = ConeReport(
        passed=passed,
        halfwidth=halfwidth,
        grid_n=grid_n,
        margin=margin,
        lam_u_min=lam_u_min,
        nu_s=nu_s,
        Lam_u=Lam_u,
        Lam_s=Lam_s,
        min_angle=min_angle,
        orientation_preserved=orientation_preserved,
        sigma=spec.matrix.sigma,
        message=msg,
    )
    _CONE_CACHE[key] = report
    return report


def require_cone(spec: MapSpec, halfwidth: float = 0.3, grid_n: int = 32) -> ConeReport:
    """Return a passing cone report or raise :class:`ConeViolation`."""
    report = verify_cone_condition(spec, halfwidth=halfwidth, grid_n=grid_n)
    if not report.passed:
        from .errors import ConeViolation

        raise ConeViolation(
            f"spec {spec.label or spec.content_hash()[:12]} failed the cone check: "
            f"{report.message}"
        )
    return report
