"""Command-line interface.

Every subcommand prints one JSON document to stdout carrying the tool
version, the map's content hash, the backend used, and the command's
result.  Exit status: 0 when the command's verdict (if any) holds, 1 when
a check ran to completion but failed, 2 on errors."""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__, kernels
from . import bundles, corpus, horocycle, mme, orbits, spectral
from .errors import TorusDynError
from .maps import MapSpec, verify_cone_condition


# -- plumbing -----------------------------------------------------------------


def _jsonable(obj):
    """Recursively convert report objects to plain JSON values."""
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if hasattr(obj, "__dataclass_fields__"):
        return {
            k: _jsonable(getattr(obj, k)) for k in obj.__dataclass_fields__
        }
    return obj


def _load_spec(args) -> MapSpec:
    if getattr(args, "spec", None):
        return MapSpec.load(args.spec)
    if getattr(args, "label", None):
        return corpus.by_label(args.label)
    raise TorusDynError("pass --spec FILE or --label NAME")


def _observable(args) -> horocycle.Observable:
    mode = tuple(int(v) for v in args.mode.split(","))
    return horocycle.Observable.cosine(mode, amp=args.amp, phase=args.phase)


def _emit(args, spec: MapSpec | None, result: dict, ok: bool) -> int:
    doc = {
        "command": args.command,
        "version": __version__,
        "backend": kernels.backend_name(),
        "ok": bool(ok),
        "result": _jsonable(result),
    }
    if spec is not None:
        doc["spec_label"] = spec.label
        doc["spec_hash"] = spec.content_hash()
    indent = 2 if args.pretty else None
    json.dump(doc, sys.stdout, indent=indent)
    sys.stdout.write("\n")
    return 0 if ok else 1


def _database(spec: MapSpec, max_level: int) -> orbits.OrbitDatabase:
    return orbits.load_or_build(spec, range(1, max_level + 1))


# -- subcommands --------------------------------------------------------------


def _cmd_verify(args) -> int:
    spec = _load_spec(args)
    rep = verify_cone_condition(spec, halfwidth=args.halfwidth, grid_n=args.grid_n)
    return _emit(args, spec, _jsonable(rep), rep.passed)


def _cmd_orbits(args) -> int:
    spec = _load_spec(args)
    db = _database(spec, args.levels)
    if args.action == "enumerate":
        if args.out:
            db.save(args.out)
        result = {"counts": {str(n): c for n, c in db.counts().items()}}
        if args.out:
            result["out"] = args.out
        return _emit(args, spec, result, True)
    rep = db.validate()
    return _emit(
        args, spec, {"ok": rep.ok, "levels": rep.levels, "messages": rep.messages},
        rep.ok,
    )


def _cmd_bundles(args) -> int:
    spec = _load_spec(args)
    pts = bundles.grid_points(args.grid)
    sample = bundles.sample_directions(spec, pts, depth=args.depth)
    if args.csv:
        bundles.write_direction_csv(sample, args.csv)
    summary = bundles.stretch_summary(sample)
    result = _jsonable(summary)
    if args.csv:
        result["csv"] = args.csv
    return _emit(args, spec, result, True)


def _cmd_spectral(args) -> int:
    spec = _load_spec(args)
    db = _database(spec, args.levels)
    if args.action == "determinant":
        series = spectral.determinant_series(
            db, args.weight, extended=args.extended
        )
        return _emit(
            args, spec,
            {"weight": args.weight, "extended": args.extended,
             "coefficients": series.coeffs},
            True,
        )
    if args.action == "resonances":
        rep = spectral.resonance_report(db, distance_tol=args.tol)
        return _emit(args, spec, _jsonable(rep), rep.verdict)
    rep = spectral.check_identity(db, extended=args.extended)
    ok = rep.residual <= args.tol and rep.twisted_residual <= args.tol
    result = _jsonable(rep)
    result["tolerance"] = args.tol
    return _emit(args, spec, result, ok)


def _cmd_horocycle(args) -> int:
    spec = _load_spec(args)
    if args.action == "integrate":
        obs = _observable(args)
        tcheck = np.geomspace(args.t / 64.0, args.t, 7)
        res = horocycle.horocycle_integral(
            spec, [args.start], tcheck, obs, rtol=args.rtol
        )
        return _emit(
            args, spec,
            {"t": res.t, "values": res.values[0], "clock_error": res.clock_error,
             "depth": res.depth, "max_step": res.max_step},
            True,
        )
    if args.action == "deviation":
        obs = _observable(args)
        rep = horocycle.deviation_exponent(
            spec, obs, T_max=args.t, samples=args.samples, seed=args.seed,
            rtol=args.rtol,
        )
        return _emit(args, spec, _jsonable(rep), rep.verdict)
    if args.action == "coboundary":
        obs = _observable(args)
        rep = horocycle.coboundary_report(
            spec, obs, T_max=args.t, samples=args.samples, seed=args.seed,
            rtol=args.rtol,
        )
        return _emit(args, spec, _jsonable(rep), rep.verdict)
    rep = horocycle.rotation_number(
        spec, returns=args.returns, section=args.section
    )
    return _emit(args, spec, _jsonable(rep), True)


def _cmd_mme(args) -> int:
    spec = _load_spec(args)
    db = _database(spec, args.levels)
    if args.action == "correlations":
        f1 = _observable(args)
        f2 = None
        if args.mode2:
            mode2 = tuple(int(v) for v in args.mode2.split(","))
            f2 = horocycle.Observable.cosine(mode2, amp=args.amp2, phase=args.phase2)
        rep = mme.correlation_decay(db, f1, f2, k_max=args.kmax)
        result = _jsonable(rep)
        if spec.is_linear:
            result["lebesgue"] = mme.lebesgue_correlations(
                spec.matrix, f1, rep.lags, f2
            )
        if args.csv:
            with open(args.csv, "w", encoding="utf-8") as fh:
                fh.write("lag,correlation\n")
                for j, c in zip(rep.lags, rep.values):
                    fh.write(f"{j},{float(c)!r}\n")
            result["csv"] = args.csv
        return _emit(args, spec, result, rep.ok())
    rep = mme.equidistribution_report(db)
    return _emit(args, spec, _jsonable(rep), rep.ok())


def _cmd_diagnose(args) -> int:
    spec = _load_spec(args)
    cone = verify_cone_condition(spec)
    db = _database(spec, args.levels)
    val = db.validate()
    ident = spectral.check_identity(db)
    try:
        reson = _jsonable(spectral.resonance_report(db))
        reson_ok = reson["verdict"]
    except TorusDynError as exc:
        reson = {"error": type(exc).__name__, "message": str(exc)}
        reson_ok = False
    rot = horocycle.rotation_number(spec, returns=args.returns)
    ok = bool(cone.passed and val.ok and ident.residual <= 1e-6 and reson_ok)
    return _emit(
        args, spec,
        {
            "cone": _jsonable(cone),
            "counts": {str(n): c for n, c in db.counts().items()},
            "orbits_ok": val.ok,
            "identity_residual": ident.residual,
            "resonance": reson,
            "rotation": _jsonable(rot),
        },
        ok,
    )


def _cmd_corpus(args) -> int:
    path = corpus.write_manifest(args.out)
    labels = [s.label for s in corpus.standard_corpus()]
    return _emit(args, None, {"manifest": str(path), "labels": labels}, True)


# -- parser -------------------------------------------------------------------


def _add_common_args(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--backend", choices=["auto", "numba", "numpy"], default=None,
        help="computation backend (default: TORUSDYN_BACKEND or auto)",
    )
    p.add_argument(
        "--cache", default=None,
        help="orbit cache directory (default: TORUSDYN_CACHE)",
    )
    p.add_argument("--pretty", action="store_true", help="indent the JSON output")


def _add_spec_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", help="path to a map description JSON file")
    p.add_argument("--label", help="name of a built-in corpus map")


def _add_observable_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", default="1,0", help="integer mode k0,k1")
    p.add_argument("--amp", type=float, default=1.0)
    p.add_argument("--phase", type=float, default=0.0)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="torusdyn",
        description="Hyperbolic torus map toolkit: periodic orbits, "
        "dynamical determinants, and stable-flow averages.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="check the uniform cone certificate")
    _add_common_args(p)
    _add_spec_args(p)
    p.add_argument("--halfwidth", type=float, default=0.3)
    p.add_argument("--grid-n", type=int, default=32)
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("orbits", help="enumerate or validate periodic points")
    p.add_argument("action", choices=["enumerate", "validate"])
    _add_common_args(p)
    _add_spec_args(p)
    p.add_argument("--levels", type=int, default=8, help="deepest period")
    p.add_argument("--out", help="write the database to this JSONL file")
    p.set_defaults(func=_cmd_orbits)

    p = sub.add_parser("bundles", help="sample the invariant direction fields")
    _add_spec_args(p)
    _add_common_args(p)
    p.add_argument("--grid", type=int, default=8, help="grid points per axis")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--csv", help="write per-point directions to this CSV file")
    p.set_defaults(func=_cmd_bundles)

    p = sub.add_parser("spectral", help="weighted dynamical determinants")
    p.add_argument("action", choices=["determinant", "resonances", "check-identity"])
    _add_common_args(p)
    _add_spec_args(p)
    p.add_argument("--levels", type=int, default=10)
    p.add_argument(
        "--weight", default="g-tilde",
        choices=sorted(spectral.NAMED_WEIGHTS),
    )
    p.add_argument("--extended", action="store_true")
    p.add_argument("--tol", type=float, default=1e-3)
    p.set_defaults(func=_cmd_spectral)

    p = sub.add_parser("horocycle", help="averages along the stable flow")
    _add_common_args(p)
    p.add_argument(
        "action", choices=["integrate", "deviation", "coboundary", "rotation"]
    )
    _add_spec_args(p)
    _add_observable_args(p)
    p.add_argument("--t", type=float, default=1e3, help="final/maximal time")
    p.add_argument("--start", type=float, nargs=2, default=(0.37, 0.21))
    p.add_argument("--samples", type=int, default=8)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--rtol", type=float, default=horocycle.DEFAULT_RTOL)
    p.add_argument("--returns", type=int, default=2048)
    p.add_argument("--section", type=float, default=0.5)
    p.set_defaults(func=_cmd_horocycle)

    p = sub.add_parser("mme", help="periodic-point equidistribution")
    p.add_argument("action", choices=["correlations", "equidistribution"])
    _add_common_args(p)
    _add_spec_args(p)
    _add_observable_args(p)
    p.add_argument("--levels", type=int, default=10)
    p.add_argument("--mode2", help="second observable's mode k0,k1 (default: f2=f1)")
    p.add_argument("--amp2", type=float, default=1.0)
    p.add_argument("--phase2", type=float, default=0.0)
    p.add_argument("--kmax", type=int, default=None, help="largest lag (default n/2)")
    p.add_argument("--csv", help="write lag,correlation rows to this CSV file")
    p.set_defaults(func=_cmd_mme)

    p = sub.add_parser("diagnose", help="one-shot health panel for a map")
    _add_spec_args(p)
    _add_common_args(p)
    p.add_argument("--levels", type=int, default=10)
    p.add_argument("--returns", type=int, default=2048)
    p.set_defaults(func=_cmd_diagnose)

    p = sub.add_parser("corpus", help="write the built-in map collection")
    _add_common_args(p)
    p.add_argument("--out", default="corpus", help="output directory")
    p.set_defaults(func=_cmd_corpus)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.backend:
        kernels.set_backend(args.backend)
    if args.cache:
        os.environ["TORUSDYN_CACHE"] = args.cache
    try:
        return args.func(args)
    except TorusDynError as exc:
        json.dump(
            {"command": args.command, "error": type(exc).__name__,
             "message": str(exc)},
            sys.stderr,
        )
        sys.stderr.write("\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())
