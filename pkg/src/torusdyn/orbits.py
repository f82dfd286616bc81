"""Periodic-point enumeration, continuation, and orbit databases.

For the linear part ``A``, the fixed points of ``A^n`` on the torus are the
solutions of ``(A^n - I) x = m`` over ``Z^2``; they are enumerated *exactly*
(integer Smith normal form plus rational arithmetic), giving both the points
and their lattice translation vectors ``m``.  For perturbed maps every seed
is carried to the target amplitude by a homotopy in the perturbation scale,
Newton-correcting at each slice against the map of that slice; each slice
must pass the cone certificate before its Newton solve is trusted.

The result is an :class:`OrbitDatabase`: per level ``n`` all fixed points of
``F^n`` with translation vectors, primitive periods, cycle ids, and n-step
monodromy data (trace, determinant product, closure gap).  Databases persist
as JSONL (one manifest line, then one line per point) and revalidate on load.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import kernels
from .errors import (
    ContinuationCollision,
    CountOverflow,
    IncompleteDatabase,
    NewtonDivergence,
    SpecError,
)
from .maps import IntegerMatrix2, MapSpec, require_cone

FORMAT_TAG = "torusdyn-orbits-v1"
DEFAULT_COUNT_CAP = 5_000_000
NEWTON_TOL = 1e-12
SEPARATION_TOL = 1e-7
MATCH_TOL = 1e-7
GAP_TOL = 1e-9
CONDITION_FLAG = 1e8


def _xgcd(a: int, b: int) -> tuple[int, int, int]:
    """g, x, y with a*x + b*y = g = gcd(a, b) (exact integers)."""
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    return old_r, old_s, old_t


def _mat2(a, b, c, d):
    return [[a, b], [c, d]]


def _matmul2(p, q):
    return [
        [p[0][0] * q[0][0] + p[0][1] * q[1][0], p[0][0] * q[0][1] + p[0][1] * q[1][1]],
        [p[1][0] * q[0][0] + p[1][1] * q[1][0], p[1][0] * q[0][1] + p[1][1] * q[1][1]],
    ]


def _det2(m) -> int:
    return m[0][0] * m[1][1] - m[0][1] * m[1][0]


def smith_normal_form(B) -> tuple[list, list, list]:
    """Exact Smith decomposition B = U D V of a 2x2 integer matrix.

    U and V are unimodular, D = diag(d1, d2) with d1, d2 >= 0 and d1 | d2.
    Requires det(B) != 0.
    """
    M = [list(map(int, row)) for row in B]
    if _det2(M) == 0:
        raise SpecError("Smith form of a singular matrix is not supported here")
    # maintain M = P B Q with P, Q unimodular; return U = P^-1, V = Q^-1
    P = _mat2(1, 0, 0, 1)
    Q = _mat2(1, 0, 0, 1)
    for _ in range(256):
        if M[0][0] == 0:
            # det != 0 forces M[1][0] != 0 here; rotate it into the pivot
            R = _mat2(0, 1, -1, 0)
            M = _matmul2(R, M)
            P = _matmul2(R, P)
        elif M[1][0] != 0 and M[1][0] % M[0][0] == 0:
            # plain elimination: zeroes [1][0] without touching row 0
            q = M[1][0] // M[0][0]
            R = _mat2(1, 0, -q, 1)
            M = _matmul2(R, M)
            P = _matmul2(R, P)
        elif M[1][0] != 0:
            # pivot does not divide: gcd step strictly shrinks the pivot
            g, x, y = _xgcd(M[0][0], M[1][0])
            r0, r1 = M[0][0] // g, M[1][0] // g
            R = _mat2(x, y, -r1, r0)  # det = x*r0 + y*r1 = 1
            M = _matmul2(R, M)
            P = _matmul2(R, P)
        elif M[0][1] != 0 and M[0][1] % M[0][0] == 0:
            # plain elimination: zeroes [0][1] without touching column 0
            q = M[0][1] // M[0][0]
            Cm = _mat2(1, -q, 0, 1)
            M = _matmul2(M, Cm)
            Q = _matmul2(Q, Cm)
        elif M[0][1] != 0:
            g, x, y = _xgcd(M[0][0], M[0][1])
            c0, c1 = M[0][0] // g, M[0][1] // g
            Cm = _mat2(x, -c1, y, c0)  # det = x*c0 + y*c1 = 1
            M = _matmul2(M, Cm)
            Q = _matmul2(Q, Cm)
        else:
            d1, d2 = M[0][0], M[1][1]
            if d1 != 0 and d2 % d1 == 0:
                break
            # fold the second column into the first and keep reducing
            Cm = _mat2(1, 0, 1, 1)
            M = _matmul2(M, Cm)
            Q = _matmul2(Q, Cm)
    else:  # pragma: no cover - the elimination loop terminates quickly
        raise SpecError("Smith reduction did not terminate")
    # normalise signs to make the diagonal positive
    if M[0][0] < 0:
        R = _mat2(-1, 0, 0, 1)
        M = _matmul2(R, M)
        P = _matmul2(R, P)
    if M[1][1] < 0:
        R = _mat2(1, 0, 0, -1)
        M = _matmul2(R, M)
        P = _matmul2(R, P)
    dP = _det2(P)
    Pinv = _mat2(P[1][1] // dP, -P[0][1] // dP, -P[1][0] // dP, P[0][0] // dP)
    dQ = _det2(Q)
    Qinv = _mat2(Q[1][1] // dQ, -Q[0][1] // dQ, -Q[1][0] // dQ, Q[0][0] // dQ)
    D = _mat2(M[0][0], 0, 0, M[1][1])
    return Pinv, D, Qinv


def exact_fixed_count(A: IntegerMatrix2, n: int) -> int:
    """|det(A^n - I)| computed in exact integer arithmetic."""
    if n < 1:
        raise SpecError(f"level must be >= 1, got {n}")
    An = A.power(n)
    return abs((An.a - 1) * (An.d - 1) - An.b * An.c)


def enumerate_linear_level(A: IntegerMatrix2, n: int) -> tuple[np.ndarray, np.ndarray]:
    """All torus fixed points of the linear ``A^n`` with translation vectors.

    Solves ``(A^n - I) x = m`` exactly: with the Smith form ``B = U D V`` the
    solutions are ``x = V^{-1} (j/d1, k/d2) mod 1``.  Returned as float64
    (points, mvec); the rational-to-float conversion is the only rounding.
    """
    An = A.power(n)
    B = _mat2(An.a - 1, An.b, An.c, An.d - 1)
    U, D, V = smith_normal_form(B)
    d1, d2 = D[0][0], D[1][1]
    dV = _det2(V)
    Vinv = _mat2(V[1][1] // dV, -V[0][1] // dV, -V[1][0] // dV, V[0][0] // dV)
    K = d1 * d2
    pts = np.empty((K, 2))
    mvec = np.empty((K, 2))
    i = 0
    for j in range(d1):
        fj = Fraction(j, d1)
        for k in range(d2):
            fk = Fraction(k, d2)
            x0 = Vinv[0][0] * fj + Vinv[0][1] * fk
            x1 = Vinv[1][0] * fj + Vinv[1][1] * fk
            p0 = math.floor(x0)
            p1 = math.floor(x1)
            x0 -= p0
            x1 -= p1
            m0 = U[0][0] * j + U[0][1] * k - (B[0][0] * p0 + B[0][1] * p1)
            m1 = U[1][0] * j + U[1][1] * k - (B[1][0] * p0 + B[1][1] * p1)
            pts[i, 0] = float(x0)
            pts[i, 1] = float(x1)
            mvec[i, 0] = float(m0)
            mvec[i, 1] = float(m1)
            i += 1
    return pts, mvec


def min_torus_separation(pts: np.ndarray) -> float:
    """Minimum pairwise torus distance (max-coordinate metric), via a sweep.

    Exact for separations below 0.25 (all we ever threshold on); returns the
    sweep window bound otherwise.
    """
    K = pts.shape[0]
    if K < 2:
        return math.inf
    window = 0.25
    order = np.argsort(pts[:, 0], kind="stable")
    s = pts[order]
    best = math.inf
    # duplicate the leading block shifted by +1 to catch wraparound pairs
    lead = s[s[:, 0] < window] + np.array([1.0, 0.0])
    ext = np.vstack([s, lead])
    for i in range(K):
        j = i + 1
        while j < ext.shape[0] and ext[j, 0] - ext[i, 0] <= min(best, window):
            d0 = abs(ext[j, 0] - ext[i, 0])
            d0 = min(d0, 1.0 - d0)
            d1 = abs(ext[j, 1] - ext[i, 1])
            d1 = min(d1, 1.0 - d1)
            best = min(best, max(d0, d1))
            j += 1
    return float(best)


@dataclass(frozen=True)
class LevelData:
    """All fixed points of ``F^n`` for one level ``n``."""

    n: int
    points: np.ndarray  # (K,2) float64, torus coordinates in [0,1)
    mvec: np.ndarray  # (K,2) float64 integer-valued lattice translations
    period: np.ndarray  # (K,) int64 primitive period (divides n)
    orbit_id: np.ndarray  # (K,) int64 cycle index within the level
    trace: np.ndarray  # (K,) float64 n-step monodromy trace
    det: np.ndarray  # (K,) float64 n-step determinant (product of steps)
    gap: np.ndarray  # (K,) float64 torus closure gap of F^n
    newton_resid: np.ndarray  # (K,) float64 final lift-equation residual
    cond: np.ndarray  # (K,) float64 condition estimate of the Newton matrix

    @property
    def count(self) -> int:
        return int(self.points.shape[0])


def _match_index(pts: np.ndarray, queries: np.ndarray, tol: float) -> np.ndarray:
    """Index of the db point within ``tol`` of each query (torus metric).

    Returns -1 where no match exists.  Grid-bucket lookup with neighbour
    probing; assumes pairwise separations well above ``tol``.
    """
    grid = 1.0 / 1024.0
    buckets: dict[tuple[int, int], list[int]] = {}
    cells = int(round(1.0 / grid))
    for i, (x0, x1) in enumerate(pts):
        key = (int(x0 / grid) % cells, int(x1 / grid) % cells)
        buckets.setdefault(key, []).append(i)
    out = np.full(queries.shape[0], -1, dtype=np.int64)
    for qi, (x0, x1) in enumerate(queries):
        c0 = int(x0 / grid)
        c1 = int(x1 / grid)
        best = -1
        best_d = tol
        for a in (-1, 0, 1):
            for b_ in (-1, 0, 1):
                for i in buckets.get(((c0 + a) % cells, (c1 + b_) % cells), ()):
                    d0 = abs(pts[i, 0] - x0)
                    d0 = min(d0, 1.0 - d0)
                    d1 = abs(pts[i, 1] - x1)
                    d1 = min(d1, 1.0 - d1)
                    d = max(d0, d1)
                    if d <= best_d:
                        best_d = d
                        best = i
        out[qi] = best
    return out


def _divisors(n: int) -> list[int]:
    return [d for d in range(1, n + 1) if n % d == 0]


def _orbit_structure(
    spec: MapSpec, n: int, pts: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Primitive periods and cycle ids for the level-n point set."""
    from .maps import reduce_torus

    K = pts.shape[0]
    pm = spec.packed()
    imgs = np.empty((n, K, 2))
    y = pts
    for d in range(n):
        y = reduce_torus(kernels.lift(pm, y))
        imgs[d] = y
    nxt = _match_index(pts, imgs[0], MATCH_TOL)
    if np.any(nxt < 0):
        raise IncompleteDatabase(
            f"level {n}: the image of {int(np.sum(nxt < 0))} point(s) does not "
            f"land on a database point; the level set is not map-invariant"
        )
    hits = np.bincount(nxt, minlength=K)
    if np.any(hits != 1):
        raise IncompleteDatabase(
            f"level {n}: point images do not permute the level set bijectively"
        )
    period = np.full(K, n, dtype=np.int64)
    for d in _divisors(n)[:-1]:
        delta = np.abs(imgs[d - 1] - pts)
        delta = np.minimum(delta, 1.0 - delta)
        back = np.max(delta, axis=1) <= MATCH_TOL
        # divisors ascend, so the first returning divisor is the period
        period[back & (period == n)] = d
    orbit_id = np.full(K, -1, dtype=np.int64)
    oid = 0
    for i in range(K):
        if orbit_id[i] >= 0:
            continue
        j = i
        length = 0
        while orbit_id[j] < 0:
            orbit_id[j] = oid
            j = int(nxt[j])
            length += 1
        if length != period[i]:
            raise IncompleteDatabase(
                f"level {n}: cycle through point {i} has length {length} but "
                f"primitive period {int(period[i])}"
            )
        oid += 1
    return period, orbit_id


def _advance_slice(
    spec: MapSpec,
    n: int,
    X: np.ndarray,
    mvec: np.ndarray,
    s0: float,
    s1: float,
    depth: int,
    cone_halfwidth: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Newton-correct points converged at scale ``s0`` against the map at
    scale ``s1``; on failure, bisect the scale increment for the failing
    points only (Newton basins shrink like the inverse of the n-step
    expansion, so a fixed slicing cannot serve every level)."""
    sub = spec.scaled(s1)
    require_cone(sub, halfwidth=cone_halfwidth)
    pts, resid, ok, _ = kernels.periodic_newton(
        sub.packed(), X, mvec, n, NEWTON_TOL, 60
    )
    if np.all(ok):
        return pts, resid
    if depth <= 0:
        raise NewtonDivergence(
            f"level {n}: Newton failed for {int(np.sum(~ok))} of {X.shape[0]} "
            f"points on the scale step {s0:.6f} -> {s1:.6f} even after bisection"
        )
    bad = ~ok
    sm = 0.5 * (s0 + s1)
    xm, _ = _advance_slice(spec, n, X[bad], mvec[bad], s0, sm, depth - 1, cone_halfwidth)
    xg, rg = _advance_slice(spec, n, xm, mvec[bad], sm, s1, depth - 1, cone_halfwidth)
    out = pts.copy()
    out[bad] = xg
    res = resid.copy()
    res[bad] = rg
    return out, res


def _continue_level(
    spec: MapSpec,
    n: int,
    seeds: np.ndarray,
    mvec: np.ndarray,
    steps: int,
    cone_halfwidth: float,
) -> tuple[np.ndarray, np.ndarray]:
    """Carry the exact linear seeds to full amplitude through ``steps``
    homotopy slices (adaptively bisected where needed), certifying the
    cone condition at every visited slice."""
    X = seeds.copy()
    resid = np.zeros(seeds.shape[0])
    for i in range(1, steps + 1):
        X, resid = _advance_slice(
            spec, n, X, mvec, (i - 1) / steps, i / steps, 6, cone_halfwidth
        )
    return X, resid


def build_level(
    spec: MapSpec,
    n: int,
    *,
    count_cap: int = DEFAULT_COUNT_CAP,
    homotopy_steps: int = 8,
    cone_halfwidth: float = 0.3,
) -> LevelData:
    """Enumerate and refine all fixed points of ``F^n`` for one level."""
    count = exact_fixed_count(spec.matrix, n)
    if count > count_cap:
        raise CountOverflow(
            f"level {n} holds {count} fixed points, above the cap {count_cap}"
        )
    require_cone(spec, halfwidth=cone_halfwidth)
    seeds, mvec = enumerate_linear_level(spec.matrix, n)
    if spec.is_linear:
        pts = seeds
        resid = np.zeros(count)
    else:
        pts = resid = None
        last_exc: Exception | None = None
        for steps in (homotopy_steps, 2 * homotopy_steps):
            try:
                cand, resid_c = _continue_level(
                    spec, n, seeds, mvec, steps, cone_halfwidth
                )
            except NewtonDivergence as exc:
                last_exc = exc
                continue
            if min_torus_separation(cand) < SEPARATION_TOL:
                last_exc = ContinuationCollision(
                    f"level {n}: continued points collide below "
                    f"{SEPARATION_TOL} (steps={steps})"
                )
                continue
            pts, resid = cand, resid_c
            break
        if pts is None:
            raise last_exc if last_exc is not None else NewtonDivergence(
                f"level {n}: continuation failed"
            )
    pm = spec.packed()
    tr, det, gap, M = kernels.orbit_products(pm, pts, n)
    d00 = M[:, 0, 0] - 1.0
    d11 = M[:, 1, 1] - 1.0
    dmi = d00 * d11 - M[:, 0, 1] * M[:, 1, 0]
    fro2 = d00**2 + M[:, 0, 1] ** 2 + M[:, 1, 0] ** 2 + d11**2
    cond = fro2 / np.maximum(np.abs(dmi), 1e-300)
    period, orbit_id = _orbit_structure(spec, n, pts)
    return LevelData(
        n=n,
        points=pts,
        mvec=mvec,
        period=period,
        orbit_id=orbit_id,
        trace=tr,
        det=det,
        gap=gap,
        newton_resid=np.asarray(resid, dtype=np.float64),
        cond=cond,
    )


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    levels: dict
    messages: tuple[str, ...]


class OrbitDatabase:
    """Fixed-point levels of one map spec, with validation and JSONL I/O."""

    def __init__(self, spec: MapSpec, levels: dict[int, LevelData]):
        self.spec = spec
        self.levels = dict(sorted(levels.items()))

    @classmethod
    def build(
        cls,
        spec: MapSpec,
        levels: "list[int] | range",
        *,
        count_cap: int = DEFAULT_COUNT_CAP,
        homotopy_steps: int = 8,
        cone_halfwidth: float = 0.3,
    ) -> "OrbitDatabase":
        data = {}
        for n in sorted(set(int(n) for n in levels)):
            data[n] = build_level(
                spec,
                n,
                count_cap=count_cap,
                homotopy_steps=homotopy_steps,
                cone_halfwidth=cone_halfwidth,
            )
        return cls(spec, data)

    @property
    def level_list(self) -> list[int]:
        return list(self.levels)

    def counts(self) -> dict[int, int]:
        return {n: lv.count for n, lv in self.levels.items()}

    def level(self, n: int) -> LevelData:
        if n not in self.levels:
            raise IncompleteDatabase(
                f"level {n} not present; database holds {self.level_list}"
            )
        return self.levels[n]

    # -- validation ---------------------------------------------------------

    def validate(self) -> ValidationReport:
        msgs: list[str] = []
        per_level: dict[int, dict] = {}
        for n, lv in self.levels.items():
            expected = exact_fixed_count(self.spec.matrix, n)
            entry = {
                "count_expected": expected,
                "count_actual": lv.count,
                "max_gap": float(np.max(lv.gap)) if lv.count else 0.0,
                "max_newton_resid": float(np.max(lv.newton_resid)) if lv.count else 0.0,
                "min_separation": min_torus_separation(lv.points),
                "max_condition": float(np.max(lv.cond)) if lv.count else 0.0,
                "condition_flagged": int(np.sum(lv.cond > CONDITION_FLAG)),
                "trace_spread": 0.0,
            }
            if lv.count != expected:
                msgs.append(
                    f"level {n}: count {lv.count} != exact count {expected}"
                )
            if entry["max_gap"] > GAP_TOL:
                msgs.append(f"level {n}: closure gap {entry['max_gap']:.3e} above {GAP_TOL}")
            if entry["min_separation"] < SEPARATION_TOL:
                msgs.append(
                    f"level {n}: separation {entry['min_separation']:.3e} below {SEPARATION_TOL}"
                )
            # points on one cycle share their n-step trace/det (conjugacy)
            spread = 0.0
            for oid in np.unique(lv.orbit_id):
                sel = lv.orbit_id == oid
                for arr in (lv.trace[sel], lv.det[sel]):
                    ref = np.max(np.abs(arr))
                    if ref > 0:
                        spread = max(spread, float(np.ptp(arr)) / ref)
            entry["trace_spread"] = spread
            if spread > 1e-7:
                msgs.append(f"level {n}: trace/det spread {spread:.3e} along a cycle")
            # periods divide the level and are coherent across stored levels
            if np.any(lv.period <= 0) or np.any(n % lv.period != 0):
                msgs.append(f"level {n}: invalid primitive periods")
            per_level[n] = entry
        for n, lv in self.levels.items():
            for d in _divisors(n)[:-1]:
                if d in self.levels:
                    here = int(np.sum(lv.period == d))
                    there = int(np.sum(self.levels[d].period == d))
                    if here != there:
                        msgs.append(
                            f"levels {n}/{d}: {here} vs {there} points of primitive period {d}"
                        )
        return ValidationReport(ok=not msgs, levels=per_level, messages=tuple(msgs))

    def require_valid(self) -> ValidationReport:
        report = self.validate()
        if not report.ok:
            raise IncompleteDatabase(
                "orbit database failed validation: " + "; ".join(report.messages)
            )
        return report

    # -- persistence --------------------------------------------------------

    def save(self, path) -> None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            manifest = {
                "format": FORMAT_TAG,
                "spec": self.spec.to_dict(),
                "spec_hash": self.spec.content_hash(),
                "levels": self.level_list,
                "counts": {str(n): lv.count for n, lv in self.levels.items()},
            }
            fh.write(json.dumps(manifest, sort_keys=True) + "\n")
            for n, lv in self.levels.items():
                for i in range(lv.count):
                    row = {
                        "n": n,
                        "x": [lv.points[i, 0], lv.points[i, 1]],
                        "m": [int(lv.mvec[i, 0]), int(lv.mvec[i, 1])],
                        "period": int(lv.period[i]),
                        "orbit": int(lv.orbit_id[i]),
                        "trace": lv.trace[i],
                        "det": lv.det[i],
                        "gap": lv.gap[i],
                        "resid": lv.newton_resid[i],
                        "cond": lv.cond[i],
                    }
                    fh.write(json.dumps(row) + "\n")

    @classmethod
    def load(cls, path, spec: MapSpec | None = None) -> "OrbitDatabase":
        path = Path(path)
        with open(path, "r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("format") != FORMAT_TAG:
                raise SpecError(f"{path} is not an orbit database file")
            file_spec = MapSpec.from_dict(header["spec"])
            if spec is not None and spec.content_hash() != file_spec.content_hash():
                raise SpecError(
                    f"database {path} was built for spec {file_spec.label!r} "
                    f"({header['spec_hash'][:12]}), not the requested one"
                )
            rows: dict[int, list[dict]] = {}
            for line in fh:
                if not line.strip():
                    continue
                row = json.loads(line)
                rows.setdefault(int(row["n"]), []).append(row)
        levels = {}
        for n, rr in rows.items():
            K = len(rr)
            lv = LevelData(
                n=n,
                points=np.array([r["x"] for r in rr], dtype=np.float64),
                mvec=np.array([r["m"] for r in rr], dtype=np.float64),
                period=np.array([r["period"] for r in rr], dtype=np.int64),
                orbit_id=np.array([r["orbit"] for r in rr], dtype=np.int64),
                trace=np.array([r["trace"] for r in rr], dtype=np.float64),
                det=np.array([r["det"] for r in rr], dtype=np.float64),
                gap=np.array([r["gap"] for r in rr], dtype=np.float64),
                newton_resid=np.array([r["resid"] for r in rr], dtype=np.float64),
                cond=np.array([r["cond"] for r in rr], dtype=np.float64),
            )
            if K != int(header["counts"][str(n)]):
                raise IncompleteDatabase(
                    f"{path}: level {n} holds {K} rows, manifest says "
                    f"{header['counts'][str(n)]}"
                )
            levels[n] = lv
        return cls(file_spec, levels)


def default_level_cap(spec: MapSpec) -> int:
    """Largest level the default tooling enumerates: the count grows like
    exp(n * h_top), so cap where it passes ~10^5 points."""
    return max(1, math.ceil(5.0 * math.log(10.0) / spec.linear().h_top))


def cache_dir() -> Path | None:
    root = os.environ.get("TORUSDYN_CACHE", "").strip()
    return Path(root) if root else None


def load_or_build(
    spec: MapSpec,
    levels: "list[int] | range",
    *,
    cache: Path | None = None,
    **build_kwargs,
) -> OrbitDatabase:
    """Build a database, reusing a cached JSONL file when one matches."""
    levels = sorted(set(int(n) for n in levels))
    root = cache if cache is not None else cache_dir()
    if root is None:
        return OrbitDatabase.build(spec, levels, **build_kwargs)
    root = Path(root)
    name = f"orbits-{spec.content_hash()[:16]}-n{max(levels)}.jsonl"
    path = root / name
    if path.exists():
        try:
            db = OrbitDatabase.load(path, spec)
            if set(levels) <= set(db.level_list):
                return db
        except (SpecError, IncompleteDatabase, json.JSONDecodeError):
            pass
    db = OrbitDatabase.build(spec, levels, **build_kwargs)
    db.save(path)
    return db
