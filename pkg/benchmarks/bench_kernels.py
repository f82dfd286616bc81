"""Compare the compiled and pure-numpy kernel backends on realistic workloads.

Each workload is timed as best-of-``--repeat`` wall-clock runs per backend,
after a warm run that absorbs JIT compilation.  The batch kernels (Newton,
orbit products, bundle pullbacks) are vectorised under both backends and
should be near parity; the adaptive step loops (flow, rotation returns) are
where the compiled backend pays off.  Run from the repo root:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --repeat 5 --backend numpy
"""

import argparse
import math
import sys
from time import perf_counter

import numpy as np

from torusdyn import bundles, corpus, kernels
from torusdyn.orbits import OrbitDatabase


def build_workloads():
    spec = corpus.cat_sin(0.05)
    pm = spec.packed()
    lm = spec.linear()
    lv = OrbitDatabase.build(spec, range(1, 9)).level(8)
    seeds = lv.points + 1e-4  # push off the solution so Newton does real work
    grid = bundles.grid_points(128)
    depth = bundles.default_depth(spec)
    modes = np.array([[1, 0], [0, 1], [1, 1], [1, -1], [0, 0]], dtype=float)
    flow_step = 0.13 / math.sqrt(2.0)
    starts = np.random.default_rng(7).random((8, 2))
    tcheck = np.array([5.0, 10.0, 20.0])

    return {
        "periodic_newton (2205 pts, n=8)": lambda: kernels.periodic_newton(
            pm, seeds, lv.mvec, 8
        ),
        "orbit_products (2205 pts, n=8)": lambda: kernels.orbit_products(
            pm, lv.points, 8
        ),
        f"stable_pair (16384 pts, depth {depth})": lambda: kernels.stable_pair(
            pm, grid, depth, lm.vs
        ),
        "flow_run (8 starts, T=20, 5 modes)": lambda: kernels.flow_run(
            pm, starts, tcheck, modes, lm.vs, 1.0, depth, 1e-7, flow_step
        ),
        "rotation_run (32 returns)": lambda: kernels.rotation_run(
            pm, starts[:1], 0.5, 32, lm.vs, 1.0, depth, 1e-9, 0.13
        ),
    }


def time_best(fn, repeat: int) -> float:
    best = math.inf
    for _ in range(repeat):
        t0 = perf_counter()
        fn()
        best = min(best, perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3, help="runs per timing (best-of)")
    ap.add_argument(
        "--backend", choices=["numba", "numpy"], action="append",
        help="restrict to one backend (repeatable; default: both)",
    )
    args = ap.parse_args(argv)

    wanted = args.backend or ["numba", "numpy"]
    available = []
    for name in wanted:
        try:
            kernels.set_backend(name)
            available.append(name)
        except Exception as exc:  # missing optional dependency
            print(f"skipping backend {name}: {exc}", file=sys.stderr)
    if not available:
        print("no requested backend is available", file=sys.stderr)
        return 1

    workloads = build_workloads()
    results: dict[str, dict[str, float]] = {}
    for name in available:
        kernels.set_backend(name)
        kernels.warmup()
        for label, fn in workloads.items():
            fn()  # warm run outside the timing
            results.setdefault(label, {})[name] = time_best(fn, args.repeat)

    width = max(len(label) for label in results)
    cols = [n for n in ("numba", "numpy") if n in available]
    header = f"{'workload':<{width}}  " + "  ".join(f"{n:>10}" for n in cols)
    if len(cols) == 2:
        header += f"  {'speedup':>8}"
    print(header)
    print("-" * len(header))
    for label, times in results.items():
        row = f"{label:<{width}}  " + "  ".join(
            f"{times[n] * 1e3:>8.2f}ms" for n in cols
        )
        if len(cols) == 2:
            row += f"  {times['numpy'] / times['numba']:>7.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    sys.exit(main())
