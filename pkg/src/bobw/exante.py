"""Ex-ante verification: build the exact lottery over agent orders, or sample it."""
from __future__ import annotations

import itertools
import math
import random
from collections.abc import Callable, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .checkers import PropertyReport, check_ef, check_prop
from .core import (
    ZERO, FractionalAllocation, Instance, IntegralAllocation, RandomizedAllocation,
    expected_allocation,
)
from .errors import BudgetExceeded, PreconditionError

OrderSolver = Callable[[Instance, Sequence[int]], IntegralAllocation]

DEFAULT_MAX_AGENTS = 6
EXANTE_CHECKS = {"ef": check_ef, "prop": check_prop}


def _run_one(args):
    solver, inst, perm = args
    return solver(inst, perm)


def enumerate_outcomes(solver: OrderSolver, inst: Instance, max_agents: int = DEFAULT_MAX_AGENTS,
                       workers: Optional[int] = None) -> list[tuple[tuple[int, ...], IntegralAllocation]]:
    """Run ``solver`` under every agent order, in lexicographic order of the orders."""
    if inst.n > max_agents:
        raise BudgetExceeded(f"{inst.n}! orders exceed the budget of {max_agents}! runs")
    perms = list(itertools.permutations(range(inst.n)))
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            allocs = list(pool.map(_run_one, [(solver, inst, p) for p in perms]))
    else:
        allocs = [solver(inst, p) for p in perms]
    return list(zip(perms, allocs))


def lottery_from_outcomes(outcomes: Sequence[IntegralAllocation],
                          dedupe: bool = True) -> RandomizedAllocation:
    """Uniform lottery over ``outcomes``; equal allocations are merged when ``dedupe``."""
    p = Fraction(1, len(outcomes))
    if not dedupe:
        return RandomizedAllocation(tuple((p, a) for a in outcomes))
    weights: dict[tuple, Fraction] = {}
    first: dict[tuple, IntegralAllocation] = {}
    for a in outcomes:
        key = a.sort_key()
        weights[key] = weights.get(key, ZERO) + p
        first.setdefault(key, a)
    return RandomizedAllocation(tuple((weights[k], first[k]) for k in sorted(weights)))


def enumerate_lottery(solver: OrderSolver, inst: Instance, max_agents: int = DEFAULT_MAX_AGENTS,
                      dedupe: bool = True, workers: Optional[int] = None) -> RandomizedAllocation:
    """The exact lottery induced by a uniformly random agent order."""
    outcomes = enumerate_outcomes(solver, inst, max_agents, workers)
    return lottery_from_outcomes([a for _, a in outcomes], dedupe)


@dataclass(frozen=True)
class ExAnteReport:
    property: str
    exante: PropertyReport
    expost: tuple[PropertyReport, ...]

    @property
    def holds(self) -> bool:
        return self.exante.holds

    @property
    def expost_holds(self) -> bool:
        return all(r.holds for r in self.expost)


def verify_exante(lottery: RandomizedAllocation, inst: Instance, prop: str) -> ExAnteReport:
    """Check ``prop`` on the expected allocation and on every outcome."""
    try:
        check = EXANTE_CHECKS[prop.lower()]
    except KeyError:
        raise PreconditionError(f"ex-ante checks support {sorted(EXANTE_CHECKS)}, not {prop!r}")
    exante = check(inst, expected_allocation(lottery))
    expost = tuple(check(inst, a) for a in lottery.allocations())
    return ExAnteReport(prop.lower(), exante, expost)


@dataclass
class MixtureReport:
    mode: str
    trials: int
    expected: FractionalAllocation
    expected_utilities: tuple[Fraction, ...]
    support_size: int
    verdicts: dict[str, PropertyReport] = field(default_factory=dict)
    expost: dict[str, tuple[bool, ...]] = field(default_factory=dict)
    radius: Optional[Fraction] = None
    """Half-width of a 99% Hoeffding interval on each agent's normalised expected utility."""


def _hoeffding_radius(trials: int) -> Fraction:
    """An upper bound on sqrt(ln(200) / (2 trials)) with denominator 10^6.

    ln(200) < 53/10, and the square root is taken on integers so the bound is exact.
    """
    scale = 10 ** 12
    num = 53 * scale
    den = 20 * trials
    root = math.isqrt(-(-num // den))
    if root * root * den < num:
        root += 1
    return Fraction(root, 10 ** 6)


def sample_lottery(solver: OrderSolver, inst: Instance, seed, trials: int,
                   properties: Sequence[str] = ("ef", "prop")) -> MixtureReport:
    """Monte-Carlo estimate of the expected allocation under uniformly random orders.

    Trial ``k`` draws its order from its own generator seeded by ``(seed, k)``, so
    every trial is reproducible on its own.
    """
    if trials < 1:
        raise PreconditionError("trials must be at least 1")
    outcomes = []
    for k in range(trials):
        perm = list(range(inst.n))
        random.Random(f"{seed}/{k}").shuffle(perm)
        outcomes.append(solver(inst, tuple(perm)))
    lottery = lottery_from_outcomes(outcomes)
    expected = expected_allocation(lottery)
    report = MixtureReport(
        mode="sample", trials=trials, expected=expected,
        expected_utilities=tuple(expected.value(inst, i, i) for i in range(inst.n)),
        support_size=len(lottery), radius=_hoeffding_radius(trials))
    for prop in properties:
        check = EXANTE_CHECKS[prop]
        report.verdicts[prop] = check(inst, expected)
        report.expost[prop] = tuple(check(inst, a).holds for a in lottery.allocations())
    return report


def exact_report(solver: OrderSolver, inst: Instance, properties: Sequence[str] = ("ef", "prop"),
                 max_agents: int = DEFAULT_MAX_AGENTS) -> MixtureReport:
    lottery = enumerate_lottery(solver, inst, max_agents)
    expected = expected_allocation(lottery)
    report = MixtureReport(
        mode="exact", trials=math.factorial(inst.n), expected=expected,
        expected_utilities=tuple(expected.value(inst, i, i) for i in range(inst.n)),
        support_size=len(lottery))
    for prop in properties:
        check = EXANTE_CHECKS[prop]
        report.verdicts[prop] = check(inst, expected)
        report.expost[prop] = tuple(check(inst, a).holds for a in lottery.allocations())
    return report
