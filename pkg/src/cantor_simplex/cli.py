"""Command-line entry point: ``cantor-simplex <subcommand> ...``.

Every subcommand writes a certificate whose bytes depend only on the command
line and the input files, so ``replay`` can re-run it and compare.

Exit codes: 0 verified, 1 failed, 2 malformed input, 3 incomplete.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from fractions import Fraction
from typing import Callable, Dict, List, Optional

from . import __version__
from .algebra import (
    algebra_from_json,
    algebra_to_json,
    embedding_from_json,
    embedding_to_json,
    is_embedding,
)
from .amalgamation import STRATEGIES, AmalgamationError, amalgam_checks, amalgamate
from .backforth import DEFAULT_STAGE_BUDGET, match_enumerated
from .cantor import BernoulliMeasure, ClopenSet
from .certificates import (
    EXIT_CODES,
    EXIT_MALFORMED,
    FAILED,
    INCOMPLETE,
    VERIFIED,
    canonical_dumps,
    make_certificate,
    read_json,
    sha256_file,
    write_json,
)
from .chain import BudgetExhausted, ChainError, build_limit, chain_from_json, chain_to_json
from .dividing import DEFAULT_WORD_BUDGET, MODES, CoverError, approx_divide
from .faces import limit_isomorphism_h
from .vectors import format_rational, parse_rational
from .verify import DEFAULT_VERIFY_BUDGET, verify_dynamical_simplex


class Malformed(Exception):
    """Input that cannot be parsed or violates a precondition."""


def _rational(text: str) -> Fraction:
    try:
        return parse_rational(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _load(path: str):
    try:
        return read_json(path)
    except (OSError, json.JSONDecodeError) as exc:
        raise Malformed(f"cannot read {path}: {exc}") from exc


def _load_chain(path: str):
    try:
        return chain_from_json(_load(path))
    except ChainError as exc:
        raise Malformed(f"{path}: {exc}") from exc


# -- subcommands -----------------------------------------------------------------
# Each returns (status, result, inputs, seed).

def cmd_amalgamate(args, outputs):
    try:
        A = algebra_from_json(_load(args.a))
        B = algebra_from_json(_load(args.b))
        C = algebra_from_json(_load(args.c))
        alpha = embedding_from_json(_load(args.alpha), A, B)
        beta = embedding_from_json(_load(args.beta), A, C)
    except ValueError as exc:
        raise Malformed(str(exc)) from exc
    inputs = {"a": args.a, "b": args.b, "c": args.c, "alpha": args.alpha, "beta": args.beta}
    for name, e in (("alpha", alpha), ("beta", beta)):
        ok, why = is_embedding(e)
        if not ok:
            raise Malformed(f"{name} is not an embedding: {why}")
    try:
        D, a2, b2 = amalgamate(alpha, beta, args.strategy)
    except AmalgamationError as exc:
        return FAILED, {"strategy": args.strategy, "error": str(exc)}, inputs, None
    checks = amalgam_checks(alpha, beta, D, a2, b2)
    result = {
        "strategy": args.strategy,
        "D": algebra_to_json(D),
        "alpha_prime": embedding_to_json(a2),
        "beta_prime": embedding_to_json(b2),
        "checks": [{"id": n, "ok": ok, "detail": d} for n, ok, d in checks],
    }
    status = VERIFIED if all(ok for _, ok, _ in checks) else FAILED
    return status, result, inputs, None


def cmd_limit_build(args, outputs):
    if args.k < 1 or args.stages < 1 or args.denoms < 1:
        raise Malformed("--k, --stages and --denoms must be at least 1")
    chain = build_limit(args.k, args.stages, args.denoms, args.seed, args.strategy)
    problems = chain.check()
    write_json(outputs["chain"], chain_to_json(chain))
    result = {
        "k": chain.k,
        "stages": len(chain.stages),
        "final_atoms": len(chain.last),
        "truncated": chain.truncated,
        "problems": problems,
        "chain_sha256": sha256_file(outputs["chain"]),
    }
    return (FAILED if problems else VERIFIED), result, {}, args.seed


def cmd_check(args, outputs):
    chain = _load_chain(args.chain)
    if args.denoms < 1:
        raise Malformed("--denoms must be at least 1")
    cert = verify_dynamical_simplex(chain, args.denoms, args.budget)
    return cert["status"], cert, {"chain": args.chain}, chain.params.get("seed")


def cmd_divide(args, outputs):
    try:
        A = ClopenSet.from_json(_load(args.set))
    except ValueError as exc:
        raise Malformed(str(exc)) from exc
    if args.eps <= 0:
        raise Malformed("--eps must be positive")
    if args.n < 1:
        raise Malformed("--n must be at least 1")
    if not A:
        raise Malformed("the set to divide is empty")
    try:
        measures = [BernoulliMeasure(p) for p in args.measures]
    except ValueError as exc:
        raise Malformed(str(exc)) from exc
    if args.mode == "all" and any(m.p != Fraction(1, 2) for m in measures):
        raise Malformed("mode 'all' only preserves the uniform measure (1/2)")
    inputs = {"set": args.set}
    try:
        _, cert = approx_divide(A, args.n, args.eps, args.mode, measures, args.word_budget)
    except CoverError as exc:
        return INCOMPLETE, {"error": str(exc), "mode": args.mode}, inputs, None
    return cert["status"], cert, inputs, None


def cmd_backforth(args, outputs):
    M = _load_chain(args.left)
    N = _load_chain(args.right)
    if M.k != N.k:
        raise Malformed("chains have different vertex counts")
    inputs = {"left": args.left, "right": args.right}
    try:
        p = match_enumerated(M, N, args.count, stage_budget=args.budget)
    except BudgetExhausted as exc:
        return INCOMPLETE, {"error": str(exc)}, inputs, None
    rows = []
    for side, chain, atoms in (("left", M, M.enumerate_atoms()[:args.count]),
                               ("right", N, N.enumerate_atoms()[:args.count])):
        for a in atoms:
            rows.append({"side": side, "atom": a, "covered": p.covers(a, side),
                         "mu": [format_rational(x) for x in chain.vector(a)]})
    problems = p.problems()
    ok = not problems and all(r["covered"] for r in rows)
    result = {
        "count": args.count,
        "left_depth": p.left.depth,
        "right_depth": p.right.depth,
        "pairs": p.to_json()["pairs"],
        "targets": rows,
        "problems": problems,
    }
    return (VERIFIED if ok else FAILED), result, inputs, None


def cmd_speedup_demo(args, outputs):
    chain = _load_chain(args.chain)
    try:
        perm = [int(x) for x in args.perm.split(",")]
        _, report = limit_isomorphism_h(chain, perm, args.count, args.budget)
    except ValueError as exc:
        raise Malformed(str(exc)) from exc
    except BudgetExhausted as exc:
        return INCOMPLETE, {"error": str(exc)}, {"chain": args.chain}, None
    status = VERIFIED if report["ok"] else FAILED
    return status, report, {"chain": args.chain}, chain.params.get("seed")


COMMANDS: Dict[str, Callable] = {
    "amalgamate": cmd_amalgamate,
    "limit-build": cmd_limit_build,
    "check": cmd_check,
    "divide": cmd_divide,
    "backforth": cmd_backforth,
    "speedup-demo": cmd_speedup_demo,
}

# Output flags of each subcommand: logical name -> argparse destination.
OUTPUTS = {"limit-build": {"chain": "out"}}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cantor-simplex",
                                     description="Exact constructions on Cantor space.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("amalgamate", help="amalgamate two embeddings over a common algebra")
    for flag in ("a", "b", "c", "alpha", "beta"):
        p.add_argument(f"--{flag}", required=True)
    p.add_argument("--strategy", choices=STRATEGIES, default="product")
    p.add_argument("--out", required=True, help="certificate path")

    p = sub.add_parser("limit-build", help="build a finite chain approximating the limit")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--denoms", type=int, required=True)
    p.add_argument("--stages", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--strategy", choices=STRATEGIES, default="sparse")
    p.add_argument("--out", required=True, help="chain path")
    p.add_argument("--cert", help="certificate path (default: stdout only)")

    p = sub.add_parser("check", help="certify the simplex conditions on a chain")
    p.add_argument("--chain", required=True)
    p.add_argument("--denoms", type=int, required=True)
    p.add_argument("--budget", type=int, default=DEFAULT_VERIFY_BUDGET)
    p.add_argument("--out", required=True)

    p = sub.add_parser("divide", help="approximately divide a clopen set")
    p.add_argument("--set", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=_rational, required=True)
    p.add_argument("--mode", choices=MODES, default="all")
    p.add_argument("--measures", type=lambda s: [_rational(x) for x in s.split(",")],
                   default=[Fraction(1, 2)])
    p.add_argument("--word-budget", type=int, default=DEFAULT_WORD_BUDGET)
    p.add_argument("--out", required=True)

    p = sub.add_parser("backforth", help="match two chains on their first atoms")
    p.add_argument("--left", required=True)
    p.add_argument("--right", required=True)
    p.add_argument("--count", type=int, default=16)
    p.add_argument("--budget", type=int, default=DEFAULT_STAGE_BUDGET)
    p.add_argument("--out", required=True)

    p = sub.add_parser("speedup-demo", help="germ between a chain and its vertex-permuted copy")
    p.add_argument("--chain", required=True)
    p.add_argument("--perm", required=True, help="comma-separated 0-based vertex images")
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--budget", type=int, default=DEFAULT_STAGE_BUDGET)
    p.add_argument("--out", required=True)

    p = sub.add_parser("replay", help="re-run a certificate's command and compare bytes")
    p.add_argument("certificate")
    return parser


def _cert_path(args) -> Optional[str]:
    if args.subcommand == "limit-build":
        return args.cert
    return args.out


def execute(argv: List[str], redirect: Optional[str] = None) -> tuple:
    """Run a subcommand; return ``(exit_code, certificate_text)``.

    With ``redirect`` (a directory), every output is written there instead
    of to the paths named on the command line.
    """
    args = build_parser().parse_args(argv)
    outputs = {name: getattr(args, dest) for name, dest in OUTPUTS.get(args.subcommand, {}).items()}
    if redirect is not None:
        outputs = {name: os.path.join(redirect, name) for name in outputs}
    status, result, inputs, seed = COMMANDS[args.subcommand](args, outputs)
    cert = make_certificate(args.subcommand, argv, inputs, status, result, seed)
    text = canonical_dumps(cert)
    path = _cert_path(args)
    if redirect is None:
        if path is not None:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
    return EXIT_CODES[status], text


def replay(path: str) -> int:
    cert = _load(path)
    try:
        argv = list(cert["command"]["argv"])
        recorded = cert["inputs"]
    except (KeyError, TypeError) as exc:
        raise Malformed(f"{path} is not a certificate: {exc}") from exc
    for name, info in sorted(recorded.items()):
        if not os.path.exists(info["path"]):
            print(f"input {name} ({info['path']}) is missing", file=sys.stderr)
            return 1
        if sha256_file(info["path"]) != info["sha256"]:
            print(f"input {name} ({info['path']}) has changed", file=sys.stderr)
            return 1
    with open(path, "r", encoding="utf-8") as fh:
        original = fh.read()
    with tempfile.TemporaryDirectory() as tmp:
        _, text = execute(argv, redirect=tmp)
    if text == original:
        print("identical")
        return 0
    print("certificate differs on replay", file=sys.stderr)
    return 1


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        if argv and argv[0] == "replay":
            args = build_parser().parse_args(argv)
            return replay(args.certificate)
        code, text = execute(argv)
    except Malformed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code) if isinstance(exc.code, int) else EXIT_MALFORMED
    status = json.loads(text)["status"]
    print(status)
    return code


if __name__ == "__main__":
    sys.exit(main())
