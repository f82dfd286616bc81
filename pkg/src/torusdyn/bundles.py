"""Stable/unstable direction fields and pointwise stretch factors.

The stable direction at a point is obtained by pulling a reference vector
back through the inverse Jacobians along the forward orbit (the pullback
contracts every direction onto the stable line); the unstable direction by
pushing forward along a backward orbit computed with Newton inversion of the
lift.  Both come with a genuine convergence residual: two independent
equal-length chains are compared, so the residual decays like
``(contraction/expansion)^depth`` and measures the actual bundle error.

Stretch factors are the signed factors by which ``DF`` scales the stable and
unstable directions; their ratio ``mu / |ms|`` is the extended one-step
expansion used by the orientation-insensitive weighting.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .errors import NoConvergence
from .maps import ConeReport, MapSpec, verify_cone_condition

DEPTH_MIN = 8
DEPTH_MAX = 40


def default_depth(
    spec: MapSpec, tol: float = 1e-10, report: ConeReport | None = None
) -> int:
    """Pullback depth needed to resolve the bundles to ``tol``.

    The two-chain residual contracts per step by roughly the certified ratio
    ``nu_s / lam_u_min``; the result is clamped to [8, 40]."""
    if report is None:
        report = verify_cone_condition(spec)
    rate = report.nu_s / report.lam_u_min
    if not (0.0 < rate < 1.0):
        return DEPTH_MAX
    depth = math.ceil(math.log(tol) / math.log(rate))
    return int(min(DEPTH_MAX, max(DEPTH_MIN, depth)))


@dataclass(frozen=True)
class DirectionSample:
    """Unit bundle directions and one-step stretches at sample points."""

    points: np.ndarray  # (K,2)
    stable: np.ndarray  # (K,2) unit stable directions
    unstable: np.ndarray  # (K,2) unit unstable directions
    ms: np.ndarray  # (K,) signed stable stretch of DF
    mu: np.ndarray  # (K,) signed unstable stretch of DF
    resid_stable: np.ndarray  # (K,) two-chain convergence residual
    resid_unstable: np.ndarray  # (K,)
    depth: int

    @property
    def angle(self) -> np.ndarray:
        """Angle between the bundles at each point (radians, in (0, pi/2])."""
        cross = np.abs(
            self.stable[:, 0] * self.unstable[:, 1]
            - self.stable[:, 1] * self.unstable[:, 0]
        )
        return np.arcsin(np.clip(cross, 0.0, 1.0))

    @property
    def extended_expansion(self) -> np.ndarray:
        """Signed one-step extended expansion mu / |ms|."""
        return self.mu / np.abs(self.ms)


def grid_points(n: int) -> np.ndarray:
    """Uniform n x n grid of torus points (cell centres)."""
    g = (np.arange(n) + 0.5) / n
    gx, gy = np.meshgrid(g, g, indexing="ij")
    return np.column_stack([gx.ravel(), gy.ravel()])


def sample_directions(
    spec: MapSpec,
    points,
    depth: int | None = None,
    tol: float = 1e-10,
) -> DirectionSample:
    """Stable and unstable unit directions with stretches at given points."""
    X = np.ascontiguousarray(np.atleast_2d(points), dtype=np.float64)
    if depth is None:
        depth = default_depth(spec, tol)
    pm = spec.packed()
    lm = spec.linear()
    vs, _, ms, rs = kernels.stable_pair(pm, X, depth, lm.vs)
    vu, _, mu, ru, ok = kernels.unstable_pair(pm, X, depth, lm.vu)
    if not np.all(ok):
        raise NoConvergence(
            f"backward-orbit inversion failed at {int(np.sum(~ok))} of "
            f"{X.shape[0]} sample points"
        )
    return DirectionSample(
        points=X,
        stable=vs,
        unstable=vu,
        ms=ms,
        mu=mu,
        resid_stable=rs,
        resid_unstable=ru,
        depth=int(depth),
    )


@dataclass(frozen=True)
class StretchSummary:
    """Distribution summary of one-step stretch factors over a sample."""

    ms_min: float
    ms_max: float
    mu_min: float
    mu_max: float
    extended_min: float
    extended_max: float
    min_angle: float
    max_resid: float
    depth: int
    count: int


def stretch_summary(sample: DirectionSample) -> StretchSummary:
    ext = sample.extended_expansion
    return StretchSummary(
        ms_min=float(np.min(sample.ms)),
        ms_max=float(np.max(sample.ms)),
        mu_min=float(np.min(sample.mu)),
        mu_max=float(np.max(sample.mu)),
        extended_min=float(np.min(ext)),
        extended_max=float(np.max(ext)),
        min_angle=float(np.min(sample.angle)),
        max_resid=float(
            max(np.max(sample.resid_stable), np.max(sample.resid_unstable))
        ),
        depth=sample.depth,
        count=int(sample.points.shape[0]),
    )


def write_direction_csv(sample: DirectionSample, path) -> None:
    """Write a direction sample as CSV (one row per point)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    ang = sample.angle
    ext = sample.extended_expansion
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(
            [
                "x0", "x1", "stable0", "stable1", "unstable0", "unstable1",
                "ms", "mu", "extended_expansion", "angle",
                "resid_stable", "resid_unstable",
            ]
        )
        for i in range(sample.points.shape[0]):
            w.writerow(
                [
                    repr(float(sample.points[i, 0])),
                    repr(float(sample.points[i, 1])),
                    repr(float(sample.stable[i, 0])),
                    repr(float(sample.stable[i, 1])),
                    repr(float(sample.unstable[i, 0])),
                    repr(float(sample.unstable[i, 1])),
                    repr(float(sample.ms[i])),
                    repr(float(sample.mu[i])),
                    repr(float(ext[i])),
                    repr(float(ang[i])),
                    repr(float(sample.resid_stable[i])),
                    repr(float(sample.resid_unstable[i])),
                ]
            )
