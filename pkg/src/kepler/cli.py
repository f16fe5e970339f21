"""Command line: solve, gen-bench, oracle."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import presburger
from .frontend import (SAT, UNKNOWN, UNSAT, SolveConfig, gen_bench, model_lines,
                       oracle_script, parse, solve_script)
from .normalize import Unsupported
from .reduce import to_dot
from .sexp import ParseError

EXIT = {SAT: 0, UNSAT: 1, UNKNOWN: 2}


def _write(path, text):
    Path(path).write_text(text)


def _dumps(args, rep):
    o = next((o for o in rep.outcomes if o.status == rep.status), None)
    if o is None and rep.outcomes:
        o = rep.outcomes[-1]
    if o is None:
        return
    if args.dump_tree and o.tree is not None:
        _write(args.dump_tree, to_dot(o.tree))
    if args.dump_cfg:
        from .grammar import table_union_cfg
        g = o.cfg if o.cfg is not None else (table_union_cfg(o.tree) if o.tree is not None else None)
        _write(args.dump_cfg, g.dump() if g is not None else "")
    if args.dump_chc:
        text = ""
        if o.chc is not None:
            text = o.chc.dump()
            if o.solutions:
                text += "-- solved\n"
                for i, f in sorted(o.solutions.items()):
                    text += f"{o.chc.pred(i)} := {f}\n"
        _write(args.dump_chc, text)
    if args.dump_lia and o.lia is not None:
        _write(args.dump_lia, presburger.export_lia(o.lia))


def cmd_solve(args) -> int:
    try:
        script = parse(Path(args.file).read_text())
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    cfg = SolveConfig(max_depth=args.max_depth, max_unroll=args.max_unroll, timeout=args.timeout)
    try:
        rep = solve_script(script, cfg)
    except Unsupported as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    if args.backend == "export-only" and rep.status == SAT:
        # the length formula is written out for an external solver instead
        # of being trusted internally; without it there is no verdict
        if any(o.lia is not None and o.lia != presburger.TRUE for o in rep.outcomes):
            rep.status, rep.reason = UNKNOWN, "export-only"
    print(rep.status)
    if rep.status == UNKNOWN and rep.reason:
        print(f"; reason: {rep.reason}")
    if args.model and rep.status == SAT:
        for line in model_lines(script, rep):
            print(line)
    _dumps(args, rep)
    return EXIT[rep.status]


def cmd_gen_bench(args) -> int:
    files = gen_bench(args.out, args.phases, args.count, args.seed)
    for f in files:
        print(f)
    return 0


def cmd_oracle(args) -> int:
    try:
        script = parse(Path(args.file).read_text())
    except (ParseError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    st, model = oracle_script(script, args.max_len)
    if st == SAT:
        print("sat")
        for x in script.strings:
            print(f'(define-fun {x} () String "{model.get(x, "")}")')
        return 0
    print(f"unknown\n; no model with every string of length <= {args.max_len}")
    return 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kepler", description="string constraint solver")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="cmd", required=True)
    s = sub.add_parser("solve", help="decide an SMT-LIB string script")
    s.add_argument("file")
    s.add_argument("--max-depth", type=int, default=512)
    s.add_argument("--max-unroll", type=int, default=5040)
    s.add_argument("--timeout", type=float, default=30.0)
    s.add_argument("--dump-tree")
    s.add_argument("--dump-cfg")
    s.add_argument("--dump-chc")
    s.add_argument("--dump-lia")
    s.add_argument("--backend", choices=["internal", "export-only"], default="internal")
    s.add_argument("--model", action="store_true")
    s.set_defaults(func=cmd_solve)
    g = sub.add_parser("gen-bench", help="write quad-* benchmark scripts")
    g.add_argument("--out", required=True)
    g.add_argument("--phases", type=int, default=1, choices=[1, 2, 3])
    g.add_argument("--count", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen_bench)
    o = sub.add_parser("oracle", help="bounded brute-force check")
    o.add_argument("file")
    o.add_argument("--max-len", type=int, default=6)
    o.set_defaults(func=cmd_oracle)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except Exception as exc:  # last resort: never crash without the error code
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
