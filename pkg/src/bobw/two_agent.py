"""Two-agent solvers: LocalSearch, the EF/EFX lottery and its mixed-goods extension.

Goods are integer ids; a utility function is any sequence indexed by good id.
Agents are 0 and 1, so "the other agent" of ``i`` is ``1 - i``.
"""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from fractions import Fraction

from .core import (
    ONE, ZERO, Bundle, Instance, IntegralAllocation, RandomizedAllocation, merge_divisibles,
)
from .errors import DivisiblePresent, InvariantViolation, WrongAgentCount

HALF = Fraction(1, 2)


def _value(goods: Iterable[int], u: Sequence[Fraction]) -> Fraction:
    return sum((u[g] for g in goods), ZERO)


@dataclass(frozen=True)
class TwoBundleSplit:
    """A partition ``(low, high)`` of the goods with ``u(low) <= u(high)`` under the search utility."""

    low: frozenset[int]
    high: frozenset[int]
    moves: int = 0

    def difference(self, u: Sequence[Fraction]) -> Fraction:
        return _value(self.high, u) - _value(self.low, u)


def local_search(a: Iterable[int], b: Iterable[int], u: Sequence[Fraction]) -> TwoBundleSplit:
    """Move the most valuable movable good from the richer to the poorer bundle until EFX.

    A good is movable when adding it keeps the poorer bundle strictly below the
    richer one. Ties between equally valuable goods go to the lowest id.
    """
    low, high = set(a), set(b)
    v_low, v_high = _value(low, u), _value(high, u)
    if v_low > v_high:
        low, high, v_low, v_high = high, low, v_high, v_low
    moves = 0
    while True:
        movable = [g for g in high if v_low + u[g] < v_high]
        if not movable:
            break
        g = max(movable, key=lambda h: (u[h], -h))
        high.remove(g)
        low.add(g)
        v_low += u[g]
        v_high -= u[g]
        moves += 1
        if v_low > v_high:
            low, high, v_low, v_high = high, low, v_high, v_low
    return TwoBundleSplit(frozenset(low), frozenset(high), moves)


def efx_partition(x: frozenset[int], y: frozenset[int], u: Sequence[Fraction]) -> bool:
    """Whether an agent with utility ``u`` is EFX whichever of the two bundles she holds."""
    vx, vy = _value(x, u), _value(y, u)
    if vx > vy:
        x, y, vx, vy = y, x, vy, vx
    return all(vx >= vy - u[g] for g in y)


def _ef_condition(split: TwoBundleSplit, owner_u: Sequence[Fraction],
                  other_u: Sequence[Fraction]) -> bool:
    return (_value(split.low, owner_u) == _value(split.high, owner_u)
            or _value(split.low, other_u) >= _value(split.high, other_u))


@dataclass(frozen=True)
class Realization:
    """A partition plus the agent who picks her preferred bundle first.

    When the chooser is indifferent she takes the bundle the other agent values less.
    """

    bundles: tuple[frozenset[int], frozenset[int]]
    chooser: int

    def assign(self, utils: Sequence[Sequence[Fraction]]) -> tuple[frozenset[int], frozenset[int]]:
        """Return (bundle of agent 0, bundle of agent 1)."""
        c = self.chooser
        other = 1 - c
        first, second = self.bundles
        # default pick is the bundle the non-chooser values less, so she keeps the better one
        if _value(first, utils[other]) > _value(second, utils[other]):
            first, second = second, first
        pick, rest = first, second
        if _value(second, utils[c]) > _value(first, utils[c]):
            pick, rest = second, first
        return (pick, rest) if c == 0 else (rest, pick)


@dataclass
class TwoAgentRun:
    """Outcome of the two-agent procedure together with bookkeeping used by tests."""

    realizations: list[Realization]
    splits: list[TwoBundleSplit] = field(default_factory=list)
    moves: int = 0
    ls_calls: list[tuple[int, TwoBundleSplit, Fraction, Fraction]] = field(default_factory=list)

    @property
    def singleton(self) -> bool:
        return len(self.realizations) == 1


def run_two_agent(utils: Sequence[Sequence[Fraction]], goods: Sequence[int]) -> TwoAgentRun:
    """Both agents' EFX splits refined against each other until one is EF or they balance.

    ``ls_calls`` records ``(agent, split, difference before, difference after)`` for
    every LocalSearch call, differences measured under that agent's utility.
    """
    run = TwoAgentRun([])
    splits: list[TwoBundleSplit] = []
    for i in (0, 1):
        s = local_search((), goods, utils[i])
        run.ls_calls.append((i, s, _value(goods, utils[i]), s.difference(utils[i])))
        run.moves += s.moves
        splits.append(s)
    run.splits = splits

    def ef_return() -> bool:
        for i in (0, 1):
            if _ef_condition(splits[i], utils[i], utils[1 - i]):
                run.realizations = [Realization((splits[i].low, splits[i].high), 1 - i)]
                return True
        return False

    if ef_return():
        return run

    limit = 4 * len(goods) + 8
    for _ in range(limit):
        updater = None
        for i in (0, 1):
            k = 1 - i
            if splits[i].difference(utils[k]) < splits[k].difference(utils[k]):
                updater = i
                break
        if updater is None:
            break
        i, k = updater, 1 - updater
        before = splits[i].difference(utils[k])
        s = local_search(splits[i].low, splits[i].high, utils[k])
        run.ls_calls.append((k, s, before, s.difference(utils[k])))
        run.moves += s.moves
        splits[k] = s
        if ef_return():
            return run
        if efx_partition(s.low, s.high, utils[i]):
            splits[i] = s
            run.realizations = [Realization((s.low, s.high), 1 - j) for j in (0, 1)]
            return run
    else:
        raise InvariantViolation("two-agent refinement did not terminate")

    run.realizations = [Realization((splits[j].low, splits[j].high), 1 - j) for j in (0, 1)]
    return run


def _check_two(inst: Instance) -> None:
    if inst.n != 2:
        raise WrongAgentCount(f"two-agent solver needs exactly 2 agents, got {inst.n}")


def solve_two_agent_efx(inst: Instance) -> RandomizedAllocation:
    """Lottery that is envy-free in expectation with every outcome EFX (indivisible goods)."""
    _check_two(inst)
    if inst.m_bar:
        raise DivisiblePresent("use solve_two_agent_efm for mixed goods")
    utils = [row[: inst.m] for row in inst.utilities]
    run = run_two_agent(utils, list(range(inst.m)))
    p = ONE / len(run.realizations)
    support = []
    for r in run.realizations:
        b0, b1 = r.assign(utils)
        alloc = IntegralAllocation((Bundle(b0), Bundle(b1)), inst.m)
        support.append((p, alloc))
    return RandomizedAllocation(tuple(support))


def solve_two_agent_efm(inst: Instance) -> RandomizedAllocation:
    """Ex-ante EF lottery whose outcomes are EFM (indeed EFXM) for mixed goods.

    All divisible goods are merged into one good ``d`` and treated as indivisible;
    when ``d`` ends up in some agent's richer bundle, a fraction of it is moved
    to equalise that agent's two bundles and a single EF allocation is returned.
    """
    _check_two(inst)
    merged, expansion = merge_divisibles(inst)
    m = inst.m
    d = m
    utils = [row[: m + 1] for row in merged.utilities]
    run = run_two_agent(utils, list(range(m + 1)))

    def build(goods0: frozenset[int], share0: Fraction, goods1: frozenset[int],
              share1: Fraction) -> IntegralAllocation:
        b0 = Bundle(frozenset(goods0 - {d}), expansion.expand(share0))
        b1 = Bundle(frozenset(goods1 - {d}), expansion.expand(share1))
        return IntegralAllocation((b0, b1), m, inst.m_bar)

    def whole(goods0: frozenset[int], goods1: frozenset[int]) -> IntegralAllocation:
        return build(goods0, ONE if d in goods0 else ZERO, goods1, ONE if d in goods1 else ZERO)

    if run.singleton:
        b0, b1 = run.realizations[0].assign(utils)
        return RandomizedAllocation.singleton(whole(b0, b1))

    for r in run.realizations:
        i = 1 - r.chooser
        u = utils[i]
        x, y = r.bundles
        if _value(x, u) > _value(y, u):
            x, y = y, x
        vx, vy = _value(x, u), _value(y, u)
        if d in y and u[d] > 0:
            alpha = (vy - vx) / (2 * u[d])
        elif vx == vy:
            alpha = ZERO
        elif d in y:
            raise InvariantViolation("zero-valued divisible good in the richer EFX bundle")
        else:
            continue
        if not ZERO <= alpha <= HALF:
            raise InvariantViolation(f"transfer fraction {alpha} outside [0, 1/2]")
        if d in y:
            sides = [(x - {d}, alpha), (y - {d}, ONE - alpha)]
        else:
            sides = [(x - {d}, ONE if d in x else ZERO), (y - {d}, ZERO)]
        # agent i is now indifferent; the chooser takes what she strictly prefers
        cu = utils[r.chooser]
        worth = [_value(g, cu) + s * cu[d] for g, s in sides]
        pick = 1 if worth[1] > worth[0] else 0
        ordered = (sides[pick], sides[1 - pick])
        if r.chooser == 1:
            ordered = ordered[::-1]
        (g0, s0), (g1, s1) = ordered
        return RandomizedAllocation.singleton(build(g0, s0, g1, s1))

    support = []
    for r in run.realizations:
        b0, b1 = r.assign(utils)
        support.append((HALF, whole(b0, b1)))
    return RandomizedAllocation(tuple(support))
