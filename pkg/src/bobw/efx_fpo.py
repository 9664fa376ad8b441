"""Bi-valued indivisible goods: EFX and fPO in every outcome, EF in expectation over orders.

A run is a deterministic function of the instance and an agent order ``perm``;
the lottery is the uniform mixture over all orders. Agents pass through three
states: active while still matchable, frozen for a few rounds after taking a
large good out of turn, and quiet afterwards, when they only collect reserved
small goods (their count is ``c_i``).
"""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Optional

from .core import Bundle, Instance, IntegralAllocation, ValueTag
from .errors import DivisiblePresent, InvariantViolation, NotBiValued, PreconditionError, ZeroLowValue
from .fisher import FisherCertificate, build_fisher_certificate
from .matching import (
    BipartiteState, _augment, _flip, augment_to_good, find_unmatchable_group,
    perfect_matching_between,
)


@dataclass
class AgentState:
    status: str = "active"
    frozen_until: int = 0
    reserved: int = 0


@dataclass
class EfxFpoRun:
    allocation: IntegralAllocation
    perm: tuple[int, ...]
    grouped: frozenset[int]
    ever_frozen: frozenset[int]
    reserved: tuple[int, ...]
    rounds: int
    max_swaps: int
    values: ValueTag
    events: list[dict[str, Any]] = field(default_factory=list)


def _resolve_values(inst: Instance, values: Optional[tuple[Any, Any]]) -> ValueTag:
    if inst.m_bar:
        raise DivisiblePresent("the EFX+fPO solver handles indivisible goods only")
    if not inst.m and values is None:
        # nothing to allocate; any valid pair will do
        return ValueTag(Fraction(1), Fraction(2))
    if values is not None:
        a, b = (Fraction(v) for v in values)
        if not 0 <= a < b:
            raise PreconditionError(f"need 0 <= a < b, got a={a}, b={b}")
        if any(v not in (a, b) for row in inst.utilities for v in row):
            raise NotBiValued(f"some utility is neither {a} nor {b}")
        tag = ValueTag(a, b)
    else:
        tag = inst.value_tag
        if tag is None:
            raise NotBiValued("utilities take more than two distinct values")
    if tag.low == 0:
        raise ZeroLowValue("the low value must be positive (a = 0 is the binary case)")
    return tag


def _check_perm(perm: Sequence[int], n: int) -> tuple[int, ...]:
    perm = tuple(perm)
    if sorted(perm) != list(range(n)):
        raise PreconditionError(f"{perm} is not a permutation of 0..{n - 1}")
    return perm


def run_efx_fpo(inst: Instance, perm: Sequence[int], values: Optional[tuple[Any, Any]] = None,
                check_invariants: bool = True) -> EfxFpoRun:
    """Execute the round-based matching procedure and return the full run record."""
    tag = _resolve_values(inst, values)
    a, b = tag.low, tag.high
    n, m = inst.n, inst.m
    perm = _check_perm(perm, n)
    u = inst.utilities
    freeze = int(b // a) - 1
    events: list[dict[str, Any]] = []

    remaining_agents = set(range(n))
    pool = set(range(m))
    bundles: list[set[int]] = [set() for _ in range(n)]
    states = [AgentState() for _ in range(n)]
    grouped: set[int] = set()
    ever_frozen: set[int] = set()
    group_of: dict[int, int] = {}
    cnt = 0
    max_swaps = 0
    swap_bound = n * n + n

    def is_frozen(i: int, r: int) -> bool:
        return i in ever_frozen and r <= states[i].frozen_until

    def quiet_now(r: int) -> list[int]:
        return [i for i in sorted(grouped) if not is_frozen(i, r)]

    r = 1
    round_cap = (m + n + 2) * (freeze + 2)
    while len(pool) >= len(remaining_agents) + len(quiet_now(r)) + cnt:
        if r > round_cap:
            raise InvariantViolation("main loop did not terminate")
        unfrozen = sorted(remaining_agents) + quiet_now(r)
        received = {i: 0 for i in range(n)}
        group, state = find_unmatchable_group(inst, remaining_agents, pool, b)

        swaps = 0
        while group:
            hit = None
            for i in sorted(remaining_agents - group.agents):
                for g in sorted(bundles[i]):
                    if any(u[j][g] == b for j in group.agents):
                        hit = (i, g)
                        break
                if hit:
                    break
            if hit is None:
                break
            i, g = hit
            pm = perfect_matching_between(state, remaining_agents - group.agents,
                                          pool - group.neighbors)
            g_new = pm[i]
            pool.add(g)
            pool.discard(g_new)
            bundles[i].discard(g)
            bundles[i].add(g_new)
            events.append({"round": r, "event": "swap", "agent": i, "returned": g, "taken": g_new})
            swaps += 1
            if swaps > swap_bound:
                raise InvariantViolation(f"swap loop exceeded {swap_bound} iterations")
            group, state = find_unmatchable_group(inst, remaining_agents, pool, b)
        max_swaps = max(max_swaps, swaps)

        if not group:
            pm = perfect_matching_between(state, remaining_agents, pool)
            for i, g in pm.items():
                bundles[i].add(g)
                pool.discard(g)
                received[i] += 1
            events.append({"round": r, "event": "match", "pairs": sorted(pm.items())})
        else:
            z, gamma = group.agents, group.neighbors
            events.append({"round": r, "event": "group", "agents": sorted(z),
                           "goods": sorted(gamma)})
            if check_invariants:
                _check_group_structure(u, a, b, z, gamma, remaining_agents, pool, bundles)
            inner = BipartiteState(tuple(z), tuple(gamma), {i: state.adj[i] for i in z})
            for i in reversed(perm):
                if i not in z:
                    continue
                nxt = augment_to_good(inner, i, gamma)
                if nxt is not None:
                    inner = nxt
                    ever_frozen.add(i)
                    states[i].status = "frozen"
                    states[i].frozen_until = r + freeze
                    events.append({"round": r, "event": "freeze", "agent": i,
                                   "until": r + freeze})
                else:
                    states[i].status = "quiet"
                    events.append({"round": r, "event": "quiet", "agent": i})
            if check_invariants and len(inner.match) != len(gamma):
                raise InvariantViolation("a large good of the group was left unallocated")
            for i, g in inner.match.items():
                bundles[i].add(g)
                received[i] += 1
            pm = perfect_matching_between(state, remaining_agents - z, pool - gamma)
            for i, g in pm.items():
                bundles[i].add(g)
                received[i] += 1
            events.append({"round": r, "event": "match", "pairs": sorted(pm.items())})
            remaining_agents -= z
            pool -= gamma
            pool -= set(pm.values())
            for i in z:
                group_of[i] = r
            grouped |= z

        quiet = quiet_now(r)
        for i in quiet:
            states[i].reserved += 1
            received[i] += 1
        cnt += len(quiet)
        if check_invariants:
            for i in range(n):
                want = 1 if i in unfrozen else 0
                if received[i] != want:
                    raise InvariantViolation(
                        f"agent {i} got {received[i]} goods in round {r}, expected {want}")
            _check_round_envy(u, a, bundles, states, group_of, ever_frozen)
        r += 1

    rounds = r - 1
    if check_invariants:
        for i in remaining_agents:
            if any(u[i][g] != b for g in bundles[i]):
                raise InvariantViolation(f"never-grouped agent {i} holds a small good")

    # final stage: agents still in play may trade large goods along augmenting paths
    adj: dict[Any, tuple[int, ...]] = {}
    owner: dict[int, Any] = {}
    match: dict[Any, int] = {}
    final_goods = sorted(pool | {g for i in remaining_agents for g in bundles[i]})
    for i in sorted(remaining_agents):
        row = tuple(g for g in final_goods if u[i][g] == b)
        for g in sorted(bundles[i]):
            node = ("copy", i, g)
            adj[node] = row
            match[node] = g
            owner[g] = node
    budget = len(pool) - cnt
    candidates = [i for i in perm if not is_frozen(i, r)][:max(budget, 0)]
    winners: dict[int, int] = {}
    for i in candidates:
        node = ("agent", i)
        adj[node] = tuple(g for g in final_goods if u[i][g] == b)
        path = _augment(adj, owner, node, set(), frozenset(pool))
        if path is None:
            states[i].reserved += 1
            events.append({"round": r, "event": "reserve", "agent": i})
        else:
            _flip(match, owner, node, path)
            events.append({"round": r, "event": "augment", "agent": i, "path": path})
    for i in remaining_agents:
        bundles[i] = set()
    for node, g in match.items():
        if node[0] == "copy":
            bundles[node[1]].add(g)
        else:
            winners[node[1]] = g
    for i, g in winners.items():
        bundles[i].add(g)
    pool -= set(match.values())

    leftovers = sorted(pool)
    total_reserved = sum(s.reserved for s in states)
    if len(leftovers) != total_reserved:
        raise InvariantViolation(
            f"{len(leftovers)} goods remain but {total_reserved} are reserved")
    it = iter(leftovers)
    for i in perm:
        for _ in range(states[i].reserved):
            g = next(it)
            if u[i][g] != a:
                raise InvariantViolation(f"reserved good {g} is large for agent {i}")
            bundles[i].add(g)
    events.append({"round": r, "event": "clean",
                   "reserved": [states[i].reserved for i in range(n)]})

    alloc = IntegralAllocation(tuple(Bundle(frozenset(bd)) for bd in bundles), m)
    return EfxFpoRun(alloc, perm, frozenset(grouped), frozenset(ever_frozen),
                     tuple(s.reserved for s in states), rounds, max_swaps, tag, events)


def _check_group_structure(u, a, b, z, gamma, remaining_agents, pool, bundles) -> None:
    for i in z:
        if any(u[i][g] != b for g in bundles[i]):
            raise InvariantViolation(f"group agent {i} holds a good she values low")
        for j in remaining_agents - z:
            if any(u[i][g] != a for g in bundles[j]):
                raise InvariantViolation(f"group agent {i} values a good of agent {j} high")
        if any(u[i][g] != a for g in pool - gamma):
            raise InvariantViolation(f"group agent {i} values an outside good high")


def _check_round_envy(u, a, bundles, states, group_of, ever_frozen) -> None:
    """EFX between partial bundles, reserved goods counted as small for everyone.

    Envy is tolerated only from a never-frozen agent towards a frozen member of
    the same group, where it is resolved at the end.
    """
    n = len(bundles)
    for i in range(n):
        own = sum((u[i][g] for g in bundles[i]), Fraction(0)) + states[i].reserved * a
        for j in range(n):
            if i == j:
                continue
            if (i in group_of and group_of.get(j) == group_of[i]
                    and i not in ever_frozen and j in ever_frozen):
                continue
            items = [u[i][g] for g in bundles[j]] + [a] * states[j].reserved
            if not items:
                continue
            if own < sum(items, Fraction(0)) - min(items):
                raise InvariantViolation(f"agent {i} envies agent {j} beyond one good")


def solve_efx_fpo(inst: Instance, perm: Sequence[int], values: Optional[tuple[Any, Any]] = None,
                  check_invariants: bool = True) -> IntegralAllocation:
    """The allocation realised under agent order ``perm``."""
    return run_efx_fpo(inst, perm, values, check_invariants).allocation


def certify_run(inst: Instance, run: EfxFpoRun) -> FisherCertificate:
    return build_fisher_certificate(inst, run.allocation, run.grouped, run.values)
