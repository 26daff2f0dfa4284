"""Command-line front end: ``roughlab <command> [options]``.

Exit codes: 0 success, 1 a verification check failed, 2 usage error,
3 bad input (malformed file, shape mismatch, missing samples).
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Optional

from . import io as rio
from .ciesielski import norm_bundle
from .generators import GeneratorSpec, generate
from .partition import PartitionError, PartitionSequence, certify, make_badic
from .schauder import SampledPath, SchauderCoefficients, ShapeError, decompose, synthesize
from .variation import (diagnostic_series, eta_seq, level_values, variation_index_estimate,
                        variation_series)

log = logging.getLogger("roughlab")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INPUT = 0, 1, 2, 3
CSV_TOL = 1e-9


class UsageError(Exception):
    pass


def _p_list(text: str) -> list:
    try:
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad p list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty p list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="roughlab", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, needs_input=True, fmt="json"):
        if needs_input:
            p.add_argument("--input", "-i", required=True,
                           help="path CSV (t,x) or coefficient JSON")
        p.add_argument("--partition", default=None,
                       help="dyadic | badic:B | file:PATH (default: from input, else dyadic)")
        p.add_argument("--depth", type=int, default=None)
        p.add_argument("--horizon", type=float, default=None,
                       help="T of the generated partition (default: last sample time)")
        p.add_argument("--out", "-o", default=None, help="output file (default stdout)")
        p.add_argument("--format", choices=("json", "csv"), default=fmt)

    p = sub.add_parser("decompose", help="path CSV -> coefficient JSON")
    common(p)
    p = sub.add_parser("synthesize", help="coefficient JSON -> path CSV")
    common(p, fmt="csv")
    p.add_argument("--level", type=int, default=None, help="evaluate on this level's points")
    p = sub.add_parser("variation", help="p-th variation, eta and xi per level")
    common(p)
    p.add_argument("--p", type=_p_list, default=[2.0])
    p.add_argument("--t", type=float, default=None, help="cutoff time")
    p.add_argument("--tail-window", type=int, default=5)
    p.add_argument("--no-diagnostics", action="store_true", help="skip eta/xi (admits p = 1)")
    p = sub.add_parser("index", help="variation index estimate")
    common(p)
    p.add_argument("--p", type=_p_list, default=None, help="p grid (default 1.05..6)")
    p.add_argument("--tail-window", type=int, default=5)
    p = sub.add_parser("norms", help="coefficient and path norms with bound constants")
    common(p)
    p.add_argument("--p", type=_p_list, default=[2.0])
    p.add_argument("--alpha", type=float, default=0.4)
    p = sub.add_parser("generate", help="write a generated path or coefficient matrix")
    p.add_argument("--spec", default=None, help="GeneratorSpec JSON file")
    p.add_argument("--kind", default=None)
    p.add_argument("--param", action="append", default=[], metavar="KEY=VALUE")
    p.add_argument("--depth", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", "-o", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="csv")
    p = sub.add_parser("verify", help="run the self-check corpus")
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb", type=float, default=0.0,
                   help="test mode: shift the coefficients fed to the closed forms")
    p.add_argument("--out", "-o", default=None)
    p.add_argument("--format", choices=("json", "csv"), default="json")
    return ap


# ---- input handling -------------------------------------------------------

def _emit(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _make_partition(spec: Optional[str], T: float, depth: int) -> PartitionSequence:
    spec = spec or "dyadic"
    if spec.startswith("file:"):
        seq = rio.partition_from_dict(rio.read_json(spec[5:]))
        return seq if depth is None or depth >= seq.depth else seq.truncate(depth)
    if spec == "dyadic":
        base = 2
    elif spec.startswith("badic:"):
        try:
            base = int(spec[6:])
        except ValueError:
            raise UsageError(f"bad base in --partition {spec!r}") from None
    else:
        raise UsageError(f"unknown --partition {spec!r}")
    return make_badic(T, base, depth)


def _default_depth(spec: Optional[str], n_samples: int) -> int:
    base = 2
    if spec and spec.startswith("badic:"):
        base = int(spec[6:])
    depth = 0
    while base ** (depth + 1) <= n_samples - 1:
        depth += 1
    return depth


def load_input(args):
    """Return ``(seq, obj)`` where obj is a SampledPath on seq's finest points
    or SchauderCoefficients on seq."""
    src = Path(args.input)
    if not src.exists():
        raise UsageError(f"input {src} does not exist")
    if src.stat().st_size == 0:
        raise UsageError(f"input {src} is empty")
    if src.suffix.lower() == ".json":
        d = rio.read_json(src)
        if not isinstance(d, dict):
            raise rio.FormatError(f"{src}: expected a JSON object")
        if args.partition is not None:
            file_T = rio.partition_from_dict(d["partition"]).T if "partition" in d else 1.0
            T = args.horizon if args.horizon is not None else file_T
            depth = args.depth if args.depth is not None else len(d.get("theta", []))
            seq = _make_partition(args.partition, T, depth)
            coeffs = rio.coefficients_from_dict(d, seq)
        else:
            coeffs = rio.coefficients_from_dict(d)
            seq = coeffs.partition
        if args.depth is not None and args.depth < coeffs.depth:
            coeffs = SchauderCoefficients(seq, coeffs.x0, coeffs.xT, coeffs.theta[:args.depth])
        return seq, coeffs
    x = rio.read_path_csv(src)
    if x.times[0] != 0.0 and abs(x.times[0]) > CSV_TOL * x.T:
        raise rio.FormatError(f"{src}: samples must start at t=0, first is {x.times[0]!r}")
    T = args.horizon if args.horizon is not None else x.T
    depth = args.depth
    if depth is None and not (args.partition or "").startswith("file:"):
        depth = _default_depth(args.partition, x.times.size)
    seq = _make_partition(args.partition, T, depth)
    pts = seq.finest
    return seq, SampledPath(pts, x.at(pts, tol=CSV_TOL * seq.T))


def _certificate(seq: PartitionSequence) -> dict:
    return certify(seq).as_dict()


# ---- commands ---------------------------------------------------------------

def cmd_decompose(args) -> int:
    seq, x = load_input(args)
    coeffs = x if isinstance(x, SchauderCoefficients) else decompose(seq, x, seq.depth)
    if args.format == "csv":
        cols = {"m": [], "k": [], "theta": []}
        for m, row in enumerate(coeffs.theta):
            cols["m"] += [m] * row.size
            cols["k"] += list(range(row.size))
            cols["theta"] += row.tolist()
        _emit(rio.write_table_csv(cols), args.out)
    else:
        d = rio.coefficients_to_dict(coeffs)
        d["certificate"] = _certificate(seq)
        _emit(rio.dumps(d), args.out)
    if args.out is not None:
        print(f"wrote {coeffs.depth} rows ({', '.join(str(r.size) for r in coeffs.theta)}) "
              f"to {args.out}")
    return EXIT_OK


def cmd_synthesize(args) -> int:
    seq, coeffs = load_input(args)
    if not isinstance(coeffs, SchauderCoefficients):
        raise UsageError("synthesize needs a coefficient JSON input")
    level = seq.depth if args.level is None else args.level
    if not 0 <= level <= seq.depth:
        raise UsageError(f"--level {level} outside 0..{seq.depth}")
    pts = seq[level]
    vals = synthesize(seq, coeffs, pts)
    if args.format == "json":
        _emit(rio.dumps({"t": pts, "x": vals}), args.out)
    else:
        _emit(rio.write_table_csv({"t": pts.tolist(), "x": vals.tolist()}), args.out)
    return EXIT_OK


def _coeffs_for(seq, x):
    return x if isinstance(x, SchauderCoefficients) else decompose(seq, x, seq.depth)


def cmd_variation(args) -> int:
    seq, x = load_input(args)
    if any(p < 1 for p in args.p):
        raise UsageError("p must be >= 1")
    if not args.no_diagnostics and any(p <= 1 for p in args.p):
        raise UsageError("eta/xi need p > 1 (use --no-diagnostics for p = 1)")
    coeffs = _coeffs_for(seq, x)
    depth = coeffs.depth if isinstance(x, SchauderCoefficients) else seq.depth
    reports = []
    for p in args.p:
        vs = variation_series(seq, x, p, levels=range(depth + 1), t=args.t)
        eta = xi = None
        if not args.no_diagnostics:
            ds = diagnostic_series(seq, coeffs, p, t=args.t)
            # rows n < depth carry xi; eta is defined for 1 <= n <= depth
            xi = ds.xi + [None]
            eta = [None] + ds.eta[1:] + [_eta_last(seq, coeffs, p, args.t)]
        try:
            est = variation_index_estimate(seq, x, tail_window=args.tail_window)
            p_hat, diag = est.p_hat, est.as_dict()
        except ValueError as exc:
            p_hat, diag = None, {"error": str(exc)}
        reports.append({"p": p, "t": vs.t, "levels": vs.levels, "v": vs.v, "eta": eta, "xi": xi,
                        "p_hat": p_hat, "diagnostics": {"index": diag,
                                                        "certificate": _certificate(seq)}})
    if args.format == "csv":
        cols = {"p": [], "n": [], "v": [], "eta": [], "xi": []}
        for r in reports:
            for i, n in enumerate(r["levels"]):
                cols["p"].append(r["p"])
                cols["n"].append(n)
                cols["v"].append(r["v"][i])
                cols["eta"].append(None if r["eta"] is None else r["eta"][i])
                cols["xi"].append(None if r["xi"] is None else r["xi"][i])
        if len(reports) == 1:
            del cols["p"]
        _emit(rio.write_table_csv(cols), args.out)
    else:
        _emit(rio.dumps(reports[0] if len(reports) == 1 else reports), args.out)
    return EXIT_OK


def _eta_last(seq, coeffs, p, t):
    if coeffs.depth < 1:
        return None
    return eta_seq(seq, coeffs, p, coeffs.depth, t)


def cmd_index(args) -> int:
    seq, x = load_input(args)
    est = variation_index_estimate(seq, x, p_grid=args.p, tail_window=args.tail_window)
    d = est.as_dict()
    d["certificate"] = _certificate(seq)
    if args.format == "csv":
        _emit(rio.write_table_csv({"p": est.p_grid, "slope": est.slopes,
                                   "class": est.classification or [""] * len(est.p_grid)}),
              args.out)
    else:
        _emit(rio.dumps(d), args.out)
    return EXIT_OK


def cmd_norms(args) -> int:
    seq, x = load_input(args)
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    bundles = [norm_bundle(seq, x, args.alpha, p).as_dict() for p in args.p]
    if args.format == "csv":
        keys = ["p", "alpha", "alpha_sup", "p_norm", "sup_norm", "holder_grid", "var_norm"]
        _emit(rio.write_table_csv({k: [b[k] for b in bundles] for k in keys}), args.out)
    else:
        _emit(rio.dumps(bundles[0] if len(bundles) == 1 else bundles), args.out)
    return EXIT_OK


def _parse_value(text: str):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    if text.lower() in ("none", "null"):
        return None
    return text


def cmd_generate(args) -> int:
    if args.spec:
        spec_d = rio.read_json(args.spec)
        if not isinstance(spec_d, dict):
            raise rio.FormatError(f"{args.spec}: expected a JSON object")
    elif args.kind:
        spec_d = {"kind": args.kind}
    else:
        raise UsageError("generate needs --spec or --kind")
    for item in args.param:
        if "=" not in item:
            raise UsageError(f"--param expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        spec_d[k.strip()] = _parse_value(v.strip())
    if args.depth is not None:
        spec_d["depth"] = args.depth
    if args.seed is not None:
        spec_d["seed"] = args.seed
    obj = generate(GeneratorSpec.from_dict(spec_d))
    if isinstance(obj, SchauderCoefficients):
        if args.format == "json":
            _emit(rio.dumps(rio.coefficients_to_dict(obj)), args.out)
            return EXIT_OK
        seq = obj.partition
        path = SampledPath(seq.finest, level_values(seq, obj, seq.depth))
    else:
        path = obj
    if args.format == "json":
        _emit(rio.dumps({"t": path.times, "x": path.values}), args.out)
    else:
        text = "t,x\n" + "".join(f"{t!r},{v!r}\n" for t, v in
                                 zip(path.times.tolist(), path.values.tolist()))
        _emit(text, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks
    results = run_checks(depth=args.depth, perturb=args.perturb)
    ok = all(r.passed for r in results)
    if args.format == "csv":
        _emit(rio.write_table_csv({
            "check": [r.name for r in results], "passed": [r.passed for r in results],
            "residual": [r.residual for r in results],
            "tolerance": [r.tolerance for r in results]}), args.out)
    else:
        _emit(rio.dumps({"passed": ok, "depth": args.depth,
                         "checks": [r.as_dict() for r in results]}), args.out)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name} residual={r.residual:.3e} "
              f"tol={r.tolerance:.0e} {r.detail}", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


COMMANDS = {
    "decompose": cmd_decompose,
    "synthesize": cmd_synthesize,
    "variation": cmd_variation,
    "index": cmd_index,
    "norms": cmd_norms,
    "generate": cmd_generate,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"roughlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ShapeError as exc:
        print(f"roughlab: shape error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (rio.FormatError, PartitionError, KeyError, ValueError, IndexError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"roughlab: input error: {msg}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
