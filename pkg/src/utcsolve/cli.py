"""``utc-solve``: decide a constraint file and optionally write a certificate."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .core import Node, ParseError, parse_system
from .driver import Sat, SolverConfig, Unsat, dumps, emit_certificate, explain, revalidate, solve
from .normal import normalize
from .reach import Entailment, bounded_languages

EXIT_SAT, EXIT_UNSAT, EXIT_UNKNOWN, EXIT_INPUT = 0, 1, 2, 64


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="utc-solve", description="Decide unilateral linear tree constraints over Q>=0 + {inf}.")
    p.add_argument("file", help="constraint file, or - for stdin")
    p.add_argument("--max-steps", type=int, default=None, help="stop after N budget rounds (verdict unknown)")
    p.add_argument("--checker-depth", type=int, default=50, help="depth for the pointwise solution check")
    p.add_argument("--forbid-infinity", default=None, metavar="V1,V2|all", help="keep these roots and free variables finite")
    p.add_argument("--cert", type=Path, default=None, metavar="OUT.json", help="write the certificate here")
    p.add_argument("--parallel", action="store_true", help="run pattern attempts on a thread pool")
    p.add_argument("--dump-normal-form", action="store_true", help="print the normal form and exit")
    p.add_argument("--dump-automata", action="store_true", help="print the bounded-node automata (dot) and exit")
    p.add_argument("--explain", action="store_true", help="print classes or the refutation")
    return p


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        text = sys.stdin.read() if args.file == "-" else Path(args.file).read_text()
        system = parse_system(text)
    except (OSError, ParseError) as e:
        print(f"utc-solve: {e}", file=sys.stderr)
        return EXIT_INPUT
    if args.dump_normal_form:
        print(normalize(system).to_text(), end="")
        return EXIT_SAT
    if args.dump_automata:
        nf = normalize(system)
        ent = Entailment(system.tree, system.alphabet, system.variables)
        anchors = [a for a in nf.arith_vars if isinstance(a, Node)]
        langs = bounded_languages(ent, anchors, system.variables)
        for x in system.variables:
            print(f"// nodes of {x} above some anchor")
            print(langs.lower[x].to_dot(f"lower_{x}"))
            print(f"// nodes of {x} below some anchor")
            print(langs.upper[x].to_dot(f"upper_{x}"))
        return EXIT_SAT
    forbid = None
    if args.forbid_infinity:
        forbid = "all" if args.forbid_infinity == "all" else tuple(v.strip() for v in args.forbid_infinity.split(",") if v.strip())
    try:
        cfg = SolverConfig(checker_depth=args.checker_depth, max_steps=args.max_steps, forbid_infinity=forbid, parallel=args.parallel)
        verdict = solve(system, cfg)
    except ValueError as e:
        print(f"utc-solve: {e}", file=sys.stderr)
        return EXIT_INPUT
    doc = emit_certificate(system, verdict, cfg)
    print(verdict.kind)
    if args.explain:
        print(explain(verdict))
    if args.cert is not None:
        args.cert.write_text(dumps(doc) + "\n")
    if isinstance(verdict, Sat):
        return EXIT_SAT
    if isinstance(verdict, Unsat):
        return EXIT_UNSAT
    return EXIT_UNKNOWN


def check_main(argv: list[str] | None = None) -> int:
    """``utc-check CERT.json``: revalidate a certificate."""
    import json

    p = argparse.ArgumentParser(prog="utc-check", description="Revalidate a utc-solve certificate.")
    p.add_argument("cert", type=Path)
    args = p.parse_args(argv)
    doc = json.loads(args.cert.read_text())
    ok = revalidate(doc)
    print("valid" if ok else "INVALID")
    return 0 if ok else 1


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
