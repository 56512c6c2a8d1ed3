"""Command-line front end.

Exit codes: ``check`` returns 0 when every requested condition holds, 1 when
one fails and 2 on errors or undecided checks; ``unique`` returns 0/1/2 for
certified/refuted/unknown; ``eigen`` returns 3 when the iteration does not
converge.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .checks import (FAILS, HOLDS, Condition, check, classify_class, encode,
                     graph_from_signature)
from .expr import ExprError, parse_map, validate
from .satcnf import to_dimacs
from .signature import lower_signature, local_signatures, upper_signature
from .spectral import condition_M, condition_N, power_iteration

EXIT_OK, EXIT_FAIL, EXIT_ERROR, EXIT_NOCONV = 0, 1, 2, 3


class CliError(Exception):
    pass


def _point(text: str | None, n: int, what: str = "--point") -> np.ndarray | None:
    if text is None:
        return None
    try:
        vals = np.array([float(v) for v in text.replace(" ", "").split(",") if v], dtype=float)
    except ValueError:
        raise CliError(f"{what}: expected comma-separated numbers, got {text!r}") from None
    if vals.shape != (n,):
        raise CliError(f"{what}: expected {n} values, got {vals.size}")
    if not (np.isfinite(vals).all() and (vals > 0).all()):
        raise CliError(f"{what}: entries must be positive and finite")
    return vals


def _load(path: str):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None
    f = parse_map(text)
    return f, validate(f)


def _conditions(args) -> list[Condition]:
    if args.all:
        return list(Condition)
    chosen = [c for c in Condition if getattr(args, c.value)]
    return chosen


def _emit(args, report) -> None:
    if args.format == "structured":
        print(report.to_json())
    else:
        print(report.to_text())
        print()


def _engine_for(cond: Condition, engine: str, f) -> str:
    if engine == "graph" and cond is not Condition.GRAPHICAL:
        return "auto"
    if engine == "fastpath":
        if cond is not Condition.IMPERTURBABLE or classify_class(f).value != "M+":
            return "auto"
    return engine


def cmd_check(args) -> int:
    f, n = _load(args.map)
    conds = _conditions(args)
    if not conds:
        raise CliError("no condition selected; use --all or one of --facial, --graphical, "
                       "--partial, --indecomposable, --imperturbable")
    lower, upper = lower_signature(f), upper_signature(f)
    verdicts = []
    for c in conds:
        rep = check(f, c, _engine_for(c, args.engine, f), lower=lower, upper=upper,
                    max_decisions=args.max_decisions)
        verdicts.append(rep.verdict)
        _emit(args, rep)
    if FAILS in verdicts:
        return EXIT_FAIL
    if all(v == HOLDS for v in verdicts):
        return EXIT_OK
    return EXIT_ERROR


def _print_sig(args, kind: str, g) -> None:
    if args.format == "structured":
        print(json.dumps({"type": "signature", "kind": kind, "entries": g.render()}))
    else:
        print(f"{kind}:")
        for line in g.render():
            print(f"  {line}")


def cmd_signature(args) -> int:
    f, n = _load(args.map)
    both = not (args.upper or args.lower)
    if args.upper or both:
        _print_sig(args, "upper", upper_signature(f))
    if args.lower or both:
        _print_sig(args, "lower", lower_signature(f))
    u = _point(args.point, n)
    if u is not None:
        loc = local_signatures(f, u, args.tie_tol)
        if args.upper or both:
            _print_sig(args, "upper_local", loc.upper)
        if args.lower or both:
            _print_sig(args, "lower_local", loc.lower)
    return EXIT_OK


def cmd_eigen(args) -> int:
    f, n = _load(args.map)
    res = power_iteration(f, _point(args.point, n), tol=args.tol, max_iter=args.max_iter)
    _emit(args, res)
    return EXIT_OK if res.converged else EXIT_NOCONV


def cmd_unique(args) -> int:
    f, n = _load(args.map)
    u = _point(args.point, n)
    if u is None:
        res = power_iteration(f, tol=args.tol, max_iter=args.max_iter)
        if not res.converged:
            print(f"error: no eigenvector found ({res.message})", file=sys.stderr)
            return EXIT_ERROR
        u = res.vector
    engine = "auto" if args.engine in ("graph", "fastpath") else args.engine
    conds = {"M": [condition_M], "N": [condition_N], "both": [condition_M, condition_N]}
    verdicts = []
    for fn in conds[args.condition]:
        rep = fn(f, u, engine=engine, tol=args.tie_tol)
        verdicts.append(rep.verdict)
        _emit(args, rep)
    if "unknown" in verdicts:
        return EXIT_ERROR
    return EXIT_FAIL if "refuted" in verdicts else EXIT_OK


def cmd_export(args) -> int:
    f, n = _load(args.map)
    if not (args.dimacs or args.dot):
        raise CliError("nothing to export; give --dimacs PATH and/or --dot PATH")
    upper = upper_signature(f)
    if args.dimacs:
        conds = _conditions(args) or [Condition.INDECOMPOSABLE]
        lower = lower_signature(f)
        for c in conds:
            path = args.dimacs
            if len(conds) > 1:
                root, ext = os.path.splitext(args.dimacs)
                path = f"{root}.{c.value}{ext or '.cnf'}"
            _write(path, to_dimacs(encode(c, lower, upper)))
            print(f"wrote {path}")
    if args.dot:
        _write(args.dot, graph_from_signature(upper).to_dot())
        print(f"wrote {args.dot}")
    return EXIT_OK


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc.strerror}") from None


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def _positive_int(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="topical", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("map", help="map description file")
    common.add_argument("--format", choices=("text", "structured"), default="text")
    common.add_argument("--engine", choices=("sat", "brute", "graph", "fastpath", "auto"),
                        default="auto")
    common.add_argument("--point", help="comma-separated positive coordinates")
    common.add_argument("--tol", type=_positive_float, default=1e-10, help="eigen tolerance")
    common.add_argument("--tie-tol", type=_positive_float, default=1e-9)
    common.add_argument("--max-iter", type=_positive_int, default=100_000)
    common.add_argument("--max-decisions", type=_positive_int, default=10_000_000)

    conds = argparse.ArgumentParser(add_help=False)
    conds.add_argument("--all", action="store_true")
    for c in Condition:
        conds.add_argument(f"--{c.value}", action="store_true")

    sp = sub.add_parser("check", parents=[common, conds], help="decide irreducibility conditions")
    sp.set_defaults(func=cmd_check)
    sp = sub.add_parser("signature", parents=[common], help="print Boolean signatures")
    sp.add_argument("--upper", action="store_true")
    sp.add_argument("--lower", action="store_true")
    sp.set_defaults(func=cmd_signature)
    sp = sub.add_parser("eigen", parents=[common], help="power iteration for a positive eigenvector")
    sp.set_defaults(func=cmd_eigen)
    sp = sub.add_parser("unique", parents=[common], help="certify eigenvector uniqueness")
    sp.add_argument("--condition", choices=("M", "N", "both"), default="N")
    sp.set_defaults(func=cmd_unique)
    sp = sub.add_parser("export", parents=[common, conds], help="write DIMACS / DOT files")
    sp.add_argument("--dimacs", metavar="PATH")
    sp.add_argument("--dot", metavar="PATH")
    sp.set_defaults(func=cmd_export)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ExprError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
