"""Command-line front end: ``bobw solve | check | gen | verify``.

Exit codes: 0 success, 1 a checked property fails, 2 bad input, 3 a solver
precondition is violated, 4 an internal invariant failed.
"""
from __future__ import annotations

import argparse
import itertools
import json
import math
import random
import sys
from fractions import Fraction
from typing import Any, Optional

from .checkers import CHECKERS, check_property
from .core import Instance, RandomizedAllocation, expected_allocation, format_rational
from .efx_fpo import certify_run, run_efx_fpo
from .errors import FairDivisionError, PreconditionError
from .exante import exact_report, sample_lottery, verify_exante
from .jsonio import (
    FormatError, allocation_from_json, allocation_to_json, dumps, fractional_to_json,
    instance_from_json, instance_to_json, lottery_to_json, report_to_json, to_plain,
)
from .mixed_bobw import PropEfmPlan, random_permutation
from .two_agent import solve_two_agent_efm, solve_two_agent_efx

EXIT_OK, EXIT_FAILS, EXIT_INPUT, EXIT_PRECONDITION, EXIT_INTERNAL = 0, 1, 2, 3, 4
ORDER_ALGOS = ("prop-efm", "efx-fpo")
ALGOS = ("two-efx", "two-efm") + ORDER_ALGOS
MAX_SEED = 2 ** 64 - 1


class InputError(Exception):
    pass


def _seed(text: str) -> int:
    try:
        value = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"seed must be a decimal integer, got {text!r}")
    if not 0 <= value <= MAX_SEED:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")


def _read_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def _load_instance(path: str) -> Instance:
    try:
        return instance_from_json(_read_json(path))
    except (FormatError, PreconditionError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def _emit(args: argparse.Namespace, obj: Any) -> None:
    text = dumps(obj)
    if getattr(args, "out", None):
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _trace(args: argparse.Namespace, record: dict) -> None:
    if args.trace:
        sys.stderr.write(dumps(to_plain(record)))


def _order(args: argparse.Namespace, n: int) -> tuple[int, ...]:
    if args.perm is not None:
        try:
            perm = tuple(int(x) for x in args.perm.split(",")) if args.perm.strip() else ()
        except ValueError:
            raise InputError(f"--perm must be comma-separated integers, got {args.perm!r}")
        if sorted(perm) != list(range(n)):
            raise InputError(f"--perm must be a permutation of 0..{n - 1}")
        return perm
    return random_permutation(n, args.seed)


def _order_solver(args: argparse.Namespace, inst: Instance):
    """Solver for one agent order plus a hook producing per-order extras."""
    if args.algo == "prop-efm":
        plan = PropEfmPlan(inst)

        def solve(perm):
            if plan.partial is not None:
                _trace(args, {"event": "partial", "perm": list(perm),
                              "bundles": [sorted(b) for b in plan.partial.bundles],
                              "residual": list(plan.partial.residual)})
            return plan.run(perm), {}
        return solve

    def solve(perm):
        run = run_efx_fpo(inst, perm)
        for e in run.events:
            _trace(args, {"perm": list(perm), **e})
        extra = {}
        if args.certificate:
            cert = certify_run(inst, run)
            extra["certificate"] = {
                "prices": {inst.indivisible[g]: p for g, p in enumerate(cert.prices)},
                "budgets": list(cert.budgets), "mbb": list(cert.ratios)}
        return run.allocation, to_plain(extra)
    return solve


def cmd_solve(args: argparse.Namespace) -> int:
    inst = _load_instance(args.instance)
    out: dict[str, Any] = {"algo": args.algo}
    if args.algo in ("two-efx", "two-efm"):
        solver = solve_two_agent_efx if args.algo == "two-efx" else solve_two_agent_efm
        lottery = solver(inst)
        out["lottery"] = lottery_to_json(inst, lottery)
        _emit(args, out)
        return EXIT_OK
    perm = None if args.enumerate else _order(args, inst.n)
    solve = _order_solver(args, inst)
    if args.enumerate:
        p = Fraction(1, math.factorial(inst.n))
        entries = []
        for perm in itertools.permutations(range(inst.n)):
            alloc, extra = solve(perm)
            entries.append({"p": format_rational(p), "perm": list(perm),
                            "allocation": allocation_to_json(inst, alloc), **extra})
        out["lottery"] = entries
    else:
        alloc, extra = solve(perm)
        out.update({"perm": list(perm), "allocation": allocation_to_json(inst, alloc), **extra})
        if args.perm is None:
            out["seed"] = args.seed
    _emit(args, out)
    return EXIT_OK


def cmd_check(args: argparse.Namespace) -> int:
    inst = _load_instance(args.instance)
    try:
        alloc = allocation_from_json(_read_json(args.allocation), inst)
    except (FormatError, PreconditionError) as exc:
        raise InputError(f"{args.allocation}: {exc}") from exc
    report = check_property(inst, alloc, args.property)
    _emit(args, report_to_json(report))
    return EXIT_OK if report.holds else EXIT_FAILS


def _draw(rng: random.Random, p: Fraction) -> bool:
    scale = 10 ** 9
    return Fraction(rng.randrange(scale), scale) < p


def generate(family: str, n: int, m: int, seed: int, a: Fraction = Fraction(1),
             b: Fraction = Fraction(2), density: Fraction = Fraction(1, 2), vmax: int = 10,
             divisible_count: int = 1, divisible_mass: int = 10) -> Instance:
    """Deterministic random instance for a generator family and seed."""
    if n < 1 or m < 0:
        raise PreconditionError("need n >= 1 and m >= 0")
    if not 0 <= density <= 1:
        raise PreconditionError("density must lie in [0, 1]")
    rng = random.Random(seed)
    names = [f"g{k + 1}" for k in range(m)]
    if family == "binary":
        a, b = Fraction(0), Fraction(1)
    if family in ("bi_valued", "binary", "mixed"):
        if not 0 <= a < b:
            raise PreconditionError("need 0 <= a < b")
        rows = [[b if _draw(rng, density) else a for _ in range(m)] for _ in range(n)]
    elif family == "uniform":
        if vmax < 0:
            raise PreconditionError("max must be non-negative")
        rows = [[Fraction(rng.randint(0, vmax)) for _ in range(m)] for _ in range(n)]
    else:
        raise PreconditionError(f"unknown family {family!r}")
    divisible: list[str] = []
    if family == "mixed":
        if divisible_count < 0 or divisible_mass < 0:
            raise PreconditionError("divisible count and mass must be non-negative")
        divisible = [f"d{k + 1}" for k in range(divisible_count)]
        for row in rows:
            # split the agent's divisible mass into divisible_count integer parts
            cuts = sorted(rng.randint(0, divisible_mass) for _ in range(max(divisible_count - 1, 0)))
            edges = [0] + cuts + [divisible_mass]
            row.extend(Fraction(edges[k + 1] - edges[k]) for k in range(divisible_count))
    return Instance(tuple(tuple(r) for r in rows), tuple(names), tuple(divisible))


def cmd_gen(args: argparse.Namespace) -> int:
    try:
        inst = generate(args.family, args.n, args.m, args.seed, args.a, args.b, args.density,
                        args.max, args.divisible_count, args.divisible_mass)
    except PreconditionError as exc:
        raise InputError(str(exc)) from exc
    _emit(args, instance_to_json(inst))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    inst = _load_instance(args.instance)
    out: dict[str, Any] = {"algo": args.algo, "property": args.property}
    if args.algo in ("two-efx", "two-efm"):
        solver = solve_two_agent_efx if args.algo == "two-efx" else solve_two_agent_efm
        lottery: RandomizedAllocation = solver(inst)
        rep = verify_exante(lottery, inst, args.property)
        expected = expected_allocation(lottery)
        out.update({"mode": "exact", "support": len(lottery), "exante": rep.exante.holds,
                    "expost": [r.holds for r in rep.expost],
                    "expected": fractional_to_json(expected),
                    "expected_utilities": to_plain([expected.value(inst, i, i)
                                                    for i in range(inst.n)])})
        _emit(args, out)
        return EXIT_OK if rep.holds else EXIT_FAILS
    solve = _order_solver(args, inst)

    def solver(_inst, perm):
        return solve(perm)[0]

    if args.mode == "exact":
        report = exact_report(solver, inst, (args.property,))
    else:
        report = sample_lottery(solver, inst, args.seed, args.trials, (args.property,))
    verdict = report.verdicts[args.property]
    out.update({"mode": report.mode, "trials": report.trials, "support": report.support_size,
                "exante": verdict.holds, "expost": list(report.expost[args.property]),
                "expected": fractional_to_json(report.expected),
                "expected_utilities": to_plain(list(report.expected_utilities))})
    if report.radius is not None:
        out["radius"] = to_plain(report.radius)
    _emit(args, out)
    return EXIT_OK if verdict.holds else EXIT_FAILS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bobw", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run an allocation algorithm")
    p.add_argument("--instance", required=True)
    p.add_argument("--algo", required=True, choices=ALGOS)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--perm", help="agent order, comma-separated 0-based indices")
    p.add_argument("--enumerate", action="store_true", help="emit the outcome for every order")
    p.add_argument("--certificate", action="store_true", help="attach Fisher-market prices")
    p.add_argument("--trace", action="store_true", help="per-round events as JSON lines on stderr")
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("check", help="check a fairness or efficiency property")
    p.add_argument("--instance", required=True)
    p.add_argument("--allocation", required=True)
    p.add_argument("--property", required=True, choices=sorted(CHECKERS))
    p.add_argument("--out")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("gen", help="generate a random instance")
    p.add_argument("--family", required=True, choices=("bi_valued", "binary", "uniform", "mixed"))
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--a", type=_fraction, default=Fraction(1))
    p.add_argument("--b", type=_fraction, default=Fraction(2))
    p.add_argument("--density", type=_fraction, default=Fraction(1, 2))
    p.add_argument("--max", type=int, default=10)
    p.add_argument("--divisible-count", type=int, default=1)
    p.add_argument("--divisible-mass", type=int, default=10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("verify", help="check an ex-ante property of an algorithm's lottery")
    p.add_argument("--instance", required=True)
    p.add_argument("--algo", required=True, choices=ALGOS)
    p.add_argument("--property", required=True, choices=("ef", "prop"))
    p.add_argument("--mode", choices=("exact", "sample"), default="exact")
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=_seed, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify, certificate=False, trace=False)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"bobw: {exc}\n")
        return EXIT_INPUT
    except PreconditionError as exc:
        sys.stderr.write(f"bobw: precondition violated: {type(exc).__name__}: {exc}\n")
        return EXIT_PRECONDITION
    except FairDivisionError as exc:
        sys.stderr.write(f"bobw: internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
