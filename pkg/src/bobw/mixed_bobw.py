"""n agents, mixed goods: EFM in every outcome and PROP in expectation over agent orders.

Indivisible goods are handed out first (Round-Robin when there are at most n of
them, otherwise an envy-free partial allocation followed by a matching-based
pass over at most 2n - 2 leftovers), then the divisible goods are poured on top
by :func:`water_fill`. Every solver is a deterministic function of the instance
and the agent order ``perm``.
"""
from __future__ import annotations

import random
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .checkers import check_ef1
from .core import (
    ONE, ZERO, Bundle, DivisibleMerge, Instance, IntegralAllocation, merge_divisibles,
)
from .errors import (
    InvariantViolation, NotBiValued, NotEF1, PreconditionError, TooManyGoods, WrongRange,
)
from .matching import (
    BipartiteState, augment_to_good, find_unmatchable_group, perfect_matching_between,
)

MAX_EVENTS = 100_000


def _check_perm(perm: Sequence[int], n: int) -> tuple[int, ...]:
    perm = tuple(perm)
    if sorted(perm) != list(range(n)):
        raise PreconditionError(f"{perm} is not a permutation of 0..{n - 1}")
    return perm


def random_permutation(n: int, seed) -> tuple[int, ...]:
    perm = list(range(n))
    random.Random(seed).shuffle(perm)
    return tuple(perm)


# ---------------------------------------------------------------- water-filling

@dataclass(frozen=True)
class FillResult:
    holder: tuple[int, ...]
    """``holder[i]`` is the index of the input bundle agent ``i`` ends up with."""
    shares: tuple[Fraction, ...]
    """Fraction of the divisible good given to each agent."""
    events: int


def _fill(base: Sequence[Sequence[Fraction]], w: Sequence[Fraction]) -> FillResult:
    """Pour one unit of a divisible good on top of fixed indivisible bundles.

    ``base[i][k]`` is agent i's value for bundle k and ``w[i]`` her value for the
    whole divisible good. Agent i starts with bundle i. Recipients are agents that
    nobody envies and that are not tied with an envied agent, so pouring never
    creates envy towards a bundle that holds some of the good; when no such agent
    exists an envy cycle is rotated.
    """
    n = len(base)
    holder = list(range(n))
    share = [ZERO] * n  # indexed by bundle
    rest = ONE
    events = 0
    while rest > 0:
        events += 1
        if events > MAX_EVENTS:
            raise InvariantViolation("water-filling did not terminate")
        view = [[base[i][holder[j]] + share[holder[j]] * w[i] for j in range(n)]
                for i in range(n)]
        own = [view[i][i] for i in range(n)]
        bad = [any(own[i] < view[i][j] for i in range(n)) for j in range(n)]
        # if a blocked agent i is tied with bundle j, filling j would make i envious
        queue = deque(j for j in range(n) if bad[j])
        while queue:
            i = queue.popleft()
            if w[i] <= 0:
                continue
            for j in range(n):
                if not bad[j] and own[i] == view[i][j]:
                    bad[j] = True
                    queue.append(j)
        fill = [j for j in range(n) if not bad[j]]
        if not fill:
            _rotate(holder, view, own)
            continue
        step = rest / len(fill)
        in_fill = set(fill)
        for i in range(n):
            if w[i] <= 0:
                continue
            if i in in_fill:
                for k in range(n):
                    if k not in in_fill and own[i] < view[i][k]:
                        step = min(step, (view[i][k] - own[i]) / w[i])
            else:
                for j in fill:
                    if own[i] > view[i][j]:
                        step = min(step, (own[i] - view[i][j]) / w[i])
        for j in fill:
            share[holder[j]] += step
        rest -= step * len(fill)
    return FillResult(tuple(holder), tuple(share[holder[i]] for i in range(n)), events)


def _rotate(holder: list[int], view: list[list[Fraction]], own: list[Fraction]) -> None:
    """Rotate bundles along a weak-envy cycle that contains a strict envy edge."""
    n = len(holder)
    for z in range(n):
        for y in range(n):
            if z == y or not own[z] < view[z][y]:
                continue
            parent = {y: None}
            queue = deque([y])
            while queue and z not in parent:
                x = queue.popleft()
                for v in range(n):
                    if v != x and v not in parent and own[x] <= view[x][v]:
                        parent[v] = x
                        queue.append(v)
            if z not in parent:
                continue
            cycle = [z]
            while cycle[-1] != y:
                cycle.append(parent[cycle[-1]])
            cycle.reverse()  # y -> ... -> z, each agent envies the next
            cycle = cycle[-1:] + cycle[:-1]  # z, y, ..., predecessor of z
            taken = [holder[cycle[(k + 1) % len(cycle)]] for k in range(len(cycle))]
            for agent, bundle in zip(cycle, taken):
                holder[agent] = bundle
            return
    raise InvariantViolation("no recipient for the divisible good and no envy cycle")


def _fill_bundles(u: Sequence[Sequence[Fraction]], w: Sequence[Fraction],
                  bundles: Sequence[Iterable[int]]) -> tuple[list[frozenset[int]], list[Fraction]]:
    bundles = [frozenset(b) for b in bundles]
    n = len(bundles)
    base = [[sum((u[i][g] for g in bundles[k]), ZERO) for k in range(n)] for i in range(n)]
    res = _fill(base, w)
    return [bundles[res.holder[i]] for i in range(n)], list(res.shares)


def water_fill(inst: Instance, alloc: IntegralAllocation) -> IntegralAllocation:
    """Allocate all divisible goods on top of an EF1 allocation of the indivisible ones.

    Indivisible bundles may change hands whole but are never split. Every
    divisible good is split in the same proportions (they act as one merged good).
    """
    goods_only = IntegralAllocation(tuple(Bundle(b.goods, (ZERO,) * inst.m_bar)
                                          for b in alloc.bundles), inst.m, inst.m_bar)
    if sum(len(b.goods) for b in goods_only.bundles) != inst.m:
        raise PreconditionError("every indivisible good must be allocated before water-filling")
    stripped = Instance(tuple(row[: inst.m] for row in inst.utilities), inst.indivisible)
    plain = IntegralAllocation(tuple(Bundle(b.goods) for b in alloc.bundles), inst.m)
    report = check_ef1(stripped, plain)
    if not report.holds:
        raise NotEF1(f"indivisible allocation is not EF1: {report.witness}")
    if not inst.m_bar:
        return goods_only
    merged, expansion = merge_divisibles(inst)
    w = [row[inst.m] for row in merged.utilities]
    bundles, shares = _fill_bundles(merged.utilities, w, [b.goods for b in alloc.bundles])
    return _assemble(inst.m, expansion, bundles, shares)


def _assemble(m: int, expansion: DivisibleMerge, bundles: Sequence[Iterable[int]],
              shares: Optional[Sequence[Fraction]]) -> IntegralAllocation:
    if shares is None:
        shares = [ZERO] * len(bundles)
    return IntegralAllocation(
        tuple(Bundle(frozenset(b), expansion.expand(s) if expansion.m_bar else ())
              for b, s in zip(bundles, shares)),
        m, expansion.m_bar)


# ---------------------------------------------------------------- few goods

def round_robin(u: Sequence[Sequence[Fraction]], perm: Sequence[int],
                goods: Iterable[int]) -> list[set[int]]:
    """One pass: each agent in ``perm`` takes her favourite remaining good (lowest id on ties)."""
    left = sorted(goods)
    bundles: list[set[int]] = [set() for _ in perm]
    for i in perm:
        if not left:
            break
        g = max(left, key=lambda h: (u[i][h], -h))
        left.remove(g)
        bundles[i].add(g)
    if left:
        raise TooManyGoods("a single Round-Robin pass needs at most one good per agent")
    return bundles


def solve_small_m(inst: Instance, perm: Sequence[int]) -> IntegralAllocation:
    """Round-Robin over ``perm`` followed by water-filling; needs m <= n."""
    if inst.m > inst.n:
        raise TooManyGoods(f"m = {inst.m} exceeds n = {inst.n}")
    return PropEfmPlan(inst).run(perm)


# ---------------------------------------------------------------- many goods

@dataclass(frozen=True)
class PartialAllocation:
    """Envy-free allocation of all but at most 2n - 2 indivisible goods, t goods each."""

    bundles: tuple[frozenset[int], ...]
    removed_agents: frozenset[int]
    removed_goods: frozenset[int]
    leftover: frozenset[int]
    cnt: int
    rounds: int

    @property
    def residual(self) -> tuple[int, ...]:
        return tuple(sorted(self.removed_goods | self.leftover))

    def allocation(self, m: int) -> IntegralAllocation:
        return IntegralAllocation(tuple(Bundle(b) for b in self.bundles), m)


def _high_value(inst: Instance, high: Optional[Fraction]) -> Fraction:
    if high is not None:
        return Fraction(high)
    tag = inst.indivisible_value_tag
    if tag is None:
        raise NotBiValued("indivisible utilities take more than two distinct values")
    return tag.high


def _reduce(inst: Instance, b: Fraction) -> PartialAllocation:
    n = inst.n
    agents = set(range(n))
    removed: set[int] = set()
    removed_goods: set[int] = set()
    pool = set(range(inst.m))
    bundles: list[set[int]] = [set() for _ in range(n)]
    cnt, t = 0, 1
    while len(pool) >= cnt + n:
        group, state = find_unmatchable_group(inst, agents - removed, pool, b)
        removed |= group.agents
        removed_goods |= group.neighbors
        pool -= group.neighbors
        if len(pool) < cnt + n:
            break
        pm = perfect_matching_between(state, agents - removed, pool)
        for i, g in pm.items():
            bundles[i].add(g)
            pool.discard(g)
        cnt += len(removed)
        t += 1
    t -= 1
    for i in range(n):
        while len(bundles[i]) < t:
            if not pool:
                raise InvariantViolation("ran out of goods while equalising bundle sizes")
            g = min(pool)
            pool.discard(g)
            bundles[i].add(g)
    return PartialAllocation(tuple(frozenset(x) for x in bundles), frozenset(removed),
                             frozenset(removed_goods), frozenset(pool), cnt, t)


def reduce_instance(inst: Instance, high: Optional[Fraction] = None
                    ) -> tuple[PartialAllocation, Instance]:
    """Allocate indivisible goods in matched rounds until at most 2n - 2 remain.

    Returns the partial allocation and the residual instance: the unallocated
    indivisible goods (in their original order) plus all divisible goods.
    """
    b = _high_value(inst, high)
    partial = _reduce(inst, b)
    return partial, restrict_goods(inst, partial.residual)


def restrict_goods(inst: Instance, goods: Sequence[int]) -> Instance:
    cols = list(goods) + [inst.m + j for j in range(inst.m_bar)]
    rows = tuple(tuple(row[c] for c in cols) for row in inst.utilities)
    return Instance(rows, tuple(inst.indivisible[g] for g in goods), inst.divisible)


@dataclass(frozen=True)
class _MidPlan:
    """The order-independent part of the n < m <= 2n - 2 procedure."""

    goods: tuple[int, ...]
    group: frozenset[int]
    group_goods: frozenset[int]
    fixed: dict[int, int]
    inner: BipartiteState


def _plan_mid(inst: Instance, goods: Sequence[int], b: Fraction) -> _MidPlan:
    n = inst.n
    group, state = find_unmatchable_group(inst, range(n), goods, b)
    fixed = perfect_matching_between(state, set(range(n)) - group.agents,
                                     set(goods) - group.neighbors)
    inner = BipartiteState(tuple(group.agents), tuple(group.neighbors),
                           {i: state.adj[i] for i in group.agents})
    return _MidPlan(tuple(sorted(goods)), group.agents, group.neighbors, fixed, inner)


def _run_mid(u: Sequence[Sequence[Fraction]], plan: _MidPlan, perm: Sequence[int]) -> list[set[int]]:
    n = len(perm)
    extra = len(plan.goods) - n
    first = perm[:extra]
    bundles: list[set[int]] = [set() for _ in range(n)]
    taken: set[int] = set()
    for i, g in plan.fixed.items():
        bundles[i].add(g)
        taken.add(g)
    # second pass for outside agents stays clear of the group's large goods
    outside = [g for g in plan.goods if g not in plan.group_goods]
    for i in first:
        if i in plan.group:
            continue
        free = [g for g in outside if g not in taken]
        g = max(free, key=lambda h: (u[i][h], -h))
        bundles[i].add(g)
        taken.add(g)

    inner = plan.inner
    skipped = []
    for i in perm:
        if i not in plan.group:
            continue
        nxt = augment_to_good(inner, i, plan.group_goods)
        if nxt is None:
            skipped.append(i)
        else:
            inner = nxt
    if set(inner.match.values()) != plan.group_goods:
        raise InvariantViolation("some large good of the group stayed unallocated")
    for i, g in inner.match.items():
        bundles[i].add(g)
        taken.add(g)

    def lowest_free() -> int:
        g = next((h for h in plan.goods if h not in taken), None)
        if g is None:
            raise InvariantViolation("ran out of goods in the second pass")
        taken.add(g)
        return g

    for i in skipped:
        bundles[i].add(lowest_free())
    for i in first:
        if i in plan.group:
            bundles[i].add(lowest_free())
    if len(taken) != len(plan.goods):
        raise InvariantViolation("not every remaining good was allocated")
    return bundles


def solve_mid_m(inst: Instance, perm: Sequence[int],
                high: Optional[Fraction] = None) -> IntegralAllocation:
    """Matching-based allocation for n < m <= 2n - 2, then water-filling.

    The instance is taken as a residual one: no goods are set aside in rounds first.
    """
    if not inst.n < inst.m <= 2 * inst.n - 2:
        raise WrongRange(f"need n < m <= 2n - 2, got n = {inst.n}, m = {inst.m}")
    return PropEfmPlan(inst, high=high, reduce=False).run(perm)


# ---------------------------------------------------------------- full pipeline

class PropEfmPlan:
    """Everything about an instance that does not depend on the agent order.

    ``run(perm)`` then produces the outcome for one order. Water-filling results
    are memoised on the indivisible bundles they start from.
    """

    def __init__(self, inst: Instance, high: Optional[Fraction] = None, reduce: bool = True):
        self.inst = inst
        self.merged, self.expansion = merge_divisibles(inst)
        self.u = self.merged.utilities
        self.w = [row[inst.m] for row in self.u]
        n, m = inst.n, inst.m
        self.partial: Optional[PartialAllocation] = None
        self.mid: Optional[_MidPlan] = None
        if m <= n:
            self.residual = tuple(range(m))
        elif not reduce:
            b = _high_value(inst, high)
            self.residual = tuple(range(m))
            self.mid = _plan_mid(self.merged, self.residual, b)
        else:
            b = _high_value(inst, high)
            self.partial = _reduce(self.merged, b)
            self.residual = self.partial.residual
            if len(self.residual) > n:
                self.mid = _plan_mid(self.merged, self.residual, b)
        self._fills: dict[tuple, tuple[list[frozenset[int]], list[Fraction]]] = {}

    def residual_bundles(self, perm: Sequence[int]) -> list[set[int]]:
        """Indivisible allocation of the residual goods before any divisible good is poured."""
        perm = _check_perm(perm, self.inst.n)
        if self.mid is not None:
            return _run_mid(self.u, self.mid, perm)
        return round_robin(self.u, perm, self.residual)

    def indivisible_bundles(self, perm: Sequence[int]) -> list[set[int]]:
        bundles = self.residual_bundles(perm)
        if self.partial is not None:
            bundles = [b | self.partial.bundles[i] for i, b in enumerate(bundles)]
        return bundles

    def run(self, perm: Sequence[int]) -> IntegralAllocation:
        residual = self.residual_bundles(perm)
        if self.inst.m_bar:
            key = tuple(frozenset(b) for b in residual)
            if key not in self._fills:
                self._fills[key] = _fill_bundles(self.u, self.w, key)
            filled, shares = self._fills[key]
        else:
            filled, shares = [frozenset(b) for b in residual], None
        if self.partial is not None:
            filled = [b | self.partial.bundles[i] for i, b in enumerate(filled)]
        return _assemble(self.inst.m, self.expansion, filled, shares)


def solve_prop_efm(inst: Instance, seed=None, perm: Optional[Sequence[int]] = None,
                   high: Optional[Fraction] = None) -> IntegralAllocation:
    """One outcome of the ex-ante PROP / ex-post EFM lottery.

    The agent order is ``perm`` when given, otherwise drawn uniformly from ``seed``.
    """
    if perm is None:
        perm = random_permutation(inst.n, seed)
    return PropEfmPlan(inst, high=high).run(perm)
