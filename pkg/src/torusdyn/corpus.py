"""Reference map collection shared by tests, benchmarks, and the CLI.

Four standard maps cover the regimes the toolkit cares about: the
orientation-preserving integer model, two sine perturbations of it (small
and moderate), and an orientation-reversing integer model."""

from __future__ import annotations

import json
from pathlib import Path

from .errors import SpecError
from .maps import MapSpec, make_spec

CAT_ROWS = ((2, 1), (1, 1))
FIB_ROWS = ((0, 1), (1, -1))


def cat_linear() -> MapSpec:
    """Orientation-preserving linear model (determinant +1)."""
    return make_spec(CAT_ROWS, [], label="cat-linear")


def cat_sin(eps: float) -> MapSpec:
    """Cat matrix plus eps * sin(2 pi x0) on the first coordinate."""
    return make_spec(
        CAT_ROWS,
        [{"coord": 0, "amp": float(eps), "mode": [1, 0], "phase": 0.0}],
        label=f"cat-sin-{eps:g}",
    )


def fib_linear() -> MapSpec:
    """Orientation-reversing linear model (determinant -1)."""
    return make_spec(FIB_ROWS, [], label="fib-linear")


def standard_corpus() -> tuple[MapSpec, ...]:
    return (cat_linear(), cat_sin(0.02), cat_sin(0.05), fib_linear())


def by_label(label: str) -> MapSpec:
    for spec in standard_corpus():
        if spec.label == label:
            return spec
    known = ", ".join(s.label for s in standard_corpus())
    raise SpecError(f"unknown corpus label {label!r}; known: {known}")


def write_manifest(directory) -> Path:
    """Write every corpus spec plus a manifest with content hashes."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for spec in standard_corpus():
        fname = f"{spec.label}.json"
        spec.save(directory / fname)
        entries.append(
            {
                "label": spec.label,
                "file": fname,
                "hash": spec.content_hash(),
                "linear": spec.is_linear,
                "sigma": spec.matrix.sigma,
            }
        )
    manifest = directory / "manifest.json"
    manifest.write_text(json.dumps({"specs": entries}, indent=2) + "\n")
    return manifest
