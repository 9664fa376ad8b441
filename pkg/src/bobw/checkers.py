"""Definition-level fairness predicates.

Each checker returns a :class:`PropertyReport`. Agents and goods in witnesses are
0-based indices. These functions double as test oracles, so they evaluate the
definitions directly instead of reusing anything from the solvers.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Optional

from .core import (
    ONE, ZERO, Allocation, Bundle, Instance, IntegralAllocation,
)
from .errors import BudgetExceeded, DivisiblePresent, IncompleteAllocation, PreconditionError


@dataclass(frozen=True)
class PropertyReport:
    holds: bool
    witness: Optional[dict[str, Any]] = None
    name: str = ""

    def __bool__(self) -> bool:
        return self.holds


def _ok(name: str) -> PropertyReport:
    return PropertyReport(True, None, name)


def _require_complete(alloc: Allocation) -> None:
    if not alloc.is_complete():
        raise IncompleteAllocation("allocation does not hand out every good exactly once")


def _value_table(inst: Instance, alloc: Allocation) -> list[list[Fraction]]:
    return [[alloc.value(inst, i, j) for j in range(alloc.n)] for i in range(alloc.n)]


def check_ef(inst: Instance, alloc: Allocation, require_complete: bool = True) -> PropertyReport:
    """u_i(X_i) >= u_i(X_j) for every ordered pair."""
    if require_complete:
        _require_complete(alloc)
    values = _value_table(inst, alloc)
    for i, j in itertools.permutations(range(alloc.n), 2):
        if values[i][i] < values[i][j]:
            return PropertyReport(False, {"envier": i, "envied": j,
                                          "own": values[i][i], "other": values[i][j]}, "ef")
    return _ok("ef")


def check_prop(inst: Instance, alloc: Allocation, require_complete: bool = True) -> PropertyReport:
    if require_complete:
        _require_complete(alloc)
    n = alloc.n
    for i in range(n):
        share = inst.total(i) / n
        own = alloc.value(inst, i, i)
        if own < share:
            return PropertyReport(False, {"agent": i, "own": own, "share": share,
                                          "shortfall": share - own}, "prop")
    return _ok("prop")


def _indivisible_only(alloc: IntegralAllocation) -> None:
    if any(b.has_divisible for b in alloc.bundles):
        raise DivisiblePresent("EF1/EFX are defined for indivisible goods only")


def _up_to_one(inst: Instance, alloc: IntegralAllocation, i: int, j: int,
               values: list[list[Fraction]], any_good: bool) -> Optional[int]:
    """Return the good whose removal fails to kill i's envy towards j, if any.

    ``any_good`` selects EFX (every removal must work); otherwise EF1 (some removal).
    """
    goods = sorted(alloc.bundles[j].goods)
    if not goods:
        return None
    row = inst.utilities[i]
    own, other = values[i][i], values[i][j]
    if any_good:
        g = min(goods, key=lambda h: (row[h], h))
    else:
        g = max(goods, key=lambda h: (row[h], -h))
    if own < other - row[g]:
        return g
    return None


def _relaxed_ef(inst: Instance, alloc: IntegralAllocation, any_good: bool, mixed: bool,
                name: str) -> PropertyReport:
    values = _value_table(inst, alloc)
    for i, j in itertools.permutations(range(alloc.n), 2):
        b = alloc.bundles[j]
        if mixed and (b.has_divisible or not b.goods):
            if values[i][i] < values[i][j]:
                return PropertyReport(False, {"envier": i, "envied": j, "own": values[i][i],
                                              "other": values[i][j]}, name)
            continue
        g = _up_to_one(inst, alloc, i, j, values, any_good)
        if g is not None:
            return PropertyReport(False, {"envier": i, "envied": j, "good": g,
                                          "own": values[i][i], "other": values[i][j]}, name)
    return _ok(name)


def check_ef1(inst: Instance, alloc: IntegralAllocation,
              require_complete: bool = True) -> PropertyReport:
    """Some good can be removed from every envied bundle to kill the envy."""
    _indivisible_only(alloc)
    if require_complete and sum(len(b.goods) for b in alloc.bundles) != alloc.m:
        raise IncompleteAllocation("not every indivisible good is allocated")
    return _relaxed_ef(inst, alloc, any_good=False, mixed=False, name="ef1")


def check_efx(inst: Instance, alloc: IntegralAllocation,
              require_complete: bool = True) -> PropertyReport:
    """Removing any single good (zero-valued ones included) kills the envy."""
    _indivisible_only(alloc)
    if require_complete and sum(len(b.goods) for b in alloc.bundles) != alloc.m:
        raise IncompleteAllocation("not every indivisible good is allocated")
    return _relaxed_ef(inst, alloc, any_good=True, mixed=False, name="efx")


def check_efm(inst: Instance, alloc: IntegralAllocation) -> PropertyReport:
    """EF towards bundles holding any divisible share, EF1 towards the rest."""
    _require_complete(alloc)
    return _relaxed_ef(inst, alloc, any_good=False, mixed=True, name="efm")


def check_efxm(inst: Instance, alloc: IntegralAllocation) -> PropertyReport:
    """As :func:`check_efm` with the EF1 branch strengthened to EFX."""
    _require_complete(alloc)
    return _relaxed_ef(inst, alloc, any_good=True, mixed=True, name="efxm")


def _check_fpo(inst: Instance, alloc: IntegralAllocation) -> PropertyReport:
    from .fisher import check_fpo_lp
    return check_fpo_lp(inst, alloc)


CHECKERS: dict[str, Callable[[Instance, IntegralAllocation], PropertyReport]] = {
    "ef": check_ef,
    "prop": check_prop,
    "ef1": check_ef1,
    "efx": check_efx,
    "efm": check_efm,
    "efxm": check_efxm,
    "fpo": _check_fpo,
}


def check_property(inst: Instance, alloc: IntegralAllocation, prop: str) -> PropertyReport:
    try:
        checker = CHECKERS[prop.lower()]
    except KeyError:
        raise PreconditionError(f"unknown property {prop!r}; choose from {sorted(CHECKERS)}")
    return checker(inst, alloc)


DEFAULT_BUDGET = 10 ** 7


def all_assignments(inst: Instance, budget: int = DEFAULT_BUDGET):
    """Yield every integral allocation, lexicographically by owner tuple.

    Divisible goods travel as one atomic block: all of them go wholly to one agent.
    """
    n, m, m_bar = inst.n, inst.m, inst.m_bar
    slots = m + (1 if m_bar else 0)
    if n ** slots > budget:
        raise BudgetExceeded(f"{n}^{slots} assignments exceed the budget of {budget}")
    for owners in itertools.product(range(n), repeat=slots):
        goods: list[set[int]] = [set() for _ in range(n)]
        for g in range(m):
            goods[owners[g]].add(g)
        bundles = []
        for i in range(n):
            shares = tuple(ONE if m_bar and owners[m] == i else ZERO for _ in range(m_bar))
            bundles.append(Bundle(frozenset(goods[i]), shares))
        yield IntegralAllocation(tuple(bundles), m, m_bar)


def brute_force_property(inst: Instance, prop: str,
                         budget: int = DEFAULT_BUDGET) -> list[IntegralAllocation]:
    """Every integral allocation (divisibles atomic) satisfying ``prop``."""
    return [a for a in all_assignments(inst, budget) if check_property(inst, a, prop).holds]


def witness_is_violation(inst: Instance, alloc: Allocation, report: PropertyReport) -> bool:
    """Independently confirm that a failing report's witness really violates its property."""
    if report.holds or report.witness is None:
        return False
    w = report.witness
    if report.name == "prop":
        i = w["agent"]
        return alloc.value(inst, i, i) * alloc.n < inst.total(i)
    if report.name == "fpo":
        y = w["dominating"]
        width = inst.m + inst.m_bar
        if any(v < 0 for row in y for v in row):
            return False
        if any(sum((row[g] for row in y), ZERO) != 1 for g in range(width)):
            return False
        gains = [sum((inst.utilities[i][g] * y[i][g] for g in range(width)), ZERO)
                 - alloc.value(inst, i, i) for i in range(alloc.n)]
        return all(x >= 0 for x in gains) and any(x > 0 for x in gains)
    i, j = w["envier"], w["envied"]
    own = alloc.value(inst, i, i)
    other = alloc.value(inst, i, j)
    if "good" not in w:
        return own < other
    bundle = alloc.bundles[j]
    row = inst.utilities[i]
    if report.name in ("efx", "efxm"):
        return own < other - row[w["good"]]
    return all(own < other - row[g] for g in bundle.goods)
