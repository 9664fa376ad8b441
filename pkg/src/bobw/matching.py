"""Matching machinery on the bipartite "large value" graph.

Agents are joined to the goods they value at the high value ``b``. All searches
visit agents in ascending index and goods in ascending index, and try a free
neighbour before recursing, so every result is a deterministic function of the
input graph and matching.
"""
from __future__ import annotations

from collections import deque
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .core import Instance
from .errors import AgentAlreadyMatched, MatchingNotMaximum, NoPerfectMatching


@dataclass
class BipartiteState:
    agents: tuple[int, ...]
    goods: tuple[int, ...]
    adj: dict[int, tuple[int, ...]]
    match: dict[int, int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        self.agents = tuple(sorted(self.agents))
        self.goods = tuple(sorted(self.goods))
        goods = set(self.goods)
        self.adj = {i: tuple(sorted(g for g in self.adj.get(i, ()) if g in goods))
                    for i in self.agents}
        owners: set[int] = set()
        for i, g in self.match.items():
            if g not in self.adj.get(i, ()):
                raise ValueError(f"matched pair ({i}, {g}) is not an edge")
            if g in owners:
                raise ValueError(f"good {g} matched twice")
            owners.add(g)

    def copy(self) -> "BipartiteState":
        return BipartiteState(self.agents, self.goods, dict(self.adj), dict(self.match))

    @property
    def size(self) -> int:
        return len(self.match)

    def owner_of(self) -> dict[int, int]:
        return {g: i for i, g in self.match.items()}

    def unmatched_agents(self) -> list[int]:
        return [i for i in self.agents if i not in self.match]

    def neighbors(self, agents: Iterable[int]) -> frozenset[int]:
        return frozenset(g for i in agents for g in self.adj[i])

    def to_dot(self) -> str:
        lines = ["graph large_values {"]
        for i in self.agents:
            for g in self.adj[i]:
                style = " [style=bold]" if self.match.get(i) == g else ""
                lines.append(f'  "a{i}" -- "g{g}"{style};')
        lines.append("}")
        return "\n".join(lines) + "\n"


def large_value_graph(inst: Instance, agents: Iterable[int], goods: Iterable[int],
                      high: Fraction) -> BipartiteState:
    """Edges ``(i, g)`` for every agent/good pair with ``u_i(g) == high``."""
    goods = sorted(goods)
    rows = inst.utilities
    adj = {i: tuple(g for g in goods if rows[i][g] == high) for i in agents}
    return BipartiteState(tuple(agents), tuple(goods), adj)


def _augment(adj: Mapping[int, tuple[int, ...]], owner: dict[int, int], agent: int,
             visited: set[int], targets: Optional[frozenset[int]] = None) -> Optional[list[int]]:
    """Alternating path from ``agent`` to a free good (in ``targets`` if given).

    Returns the goods along the path, ending with the free one, or None.
    """
    nbrs = adj[agent]
    for g in nbrs:
        if g not in owner and g not in visited and (targets is None or g in targets):
            visited.add(g)
            return [g]
    for g in nbrs:
        if g in visited or g not in owner:
            continue
        visited.add(g)
        rest = _augment(adj, owner, owner[g], visited, targets)
        if rest is not None:
            return [g] + rest
    return None


def _flip(match: dict[int, int], owner: dict[int, int], agent: int, path: list[int]) -> None:
    current = agent
    for g in path:
        previous = owner.get(g)
        match[current] = g
        owner[g] = current
        if previous is None:
            break
        current = previous


def max_matching(state: BipartiteState) -> BipartiteState:
    """Extend the state's matching to a maximum one (Kuhn's augmenting paths)."""
    out = state.copy()
    owner = out.owner_of()
    for i in out.agents:
        if i in out.match:
            continue
        path = _augment(out.adj, owner, i, set())
        if path is not None:
            _flip(out.match, owner, i, path)
    return out


def has_augmenting_path(state: BipartiteState) -> bool:
    owner = state.owner_of()
    return any(_augment(state.adj, owner, i, set()) is not None
               for i in state.unmatched_agents())


@dataclass(frozen=True)
class UnmatchableGroup:
    agents: frozenset[int]
    neighbors: frozenset[int]

    def __bool__(self) -> bool:
        return bool(self.agents)


def minimal_unmatchable_group(state: BipartiteState) -> UnmatchableGroup:
    """Agents reachable from unmatched agents along alternating paths, with their neighbours.

    Needs a maximum matching. Empty exactly when every agent is matched.
    """
    if has_augmenting_path(state):
        raise MatchingNotMaximum("the matching admits an augmenting path")
    owner = state.owner_of()
    reached = set(state.unmatched_agents())
    queue = deque(sorted(reached))
    while queue:
        i = queue.popleft()
        for g in state.adj[i]:
            j = owner.get(g)
            if j is not None and j not in reached:
                reached.add(j)
                queue.append(j)
    return UnmatchableGroup(frozenset(reached), state.neighbors(reached))


def find_unmatchable_group(inst: Instance, agents: Iterable[int], goods: Iterable[int],
                           high: Fraction) -> tuple[UnmatchableGroup, BipartiteState]:
    """Build the large-value graph, maximise a matching and extract the group."""
    state = max_matching(large_value_graph(inst, agents, goods, high))
    return minimal_unmatchable_group(state), state


def augment_to_good(state: BipartiteState, agent: int,
                    targets: Iterable[int]) -> Optional[BipartiteState]:
    """Match the unmatched ``agent`` through an augmenting path ending in ``targets``.

    A direct edge to a free target is preferred; otherwise depth-first search.
    Returns the updated state, or None (input untouched) when no path exists.
    """
    if agent in state.match:
        raise AgentAlreadyMatched(f"agent {agent} is already matched")
    owner = state.owner_of()
    path = _augment(state.adj, owner, agent, set(), frozenset(targets))
    if path is None:
        return None
    out = state.copy()
    _flip(out.match, owner, agent, path)
    return out


def perfect_matching_between(state: BipartiteState, agents: Iterable[int],
                             goods: Iterable[int]) -> dict[int, int]:
    """A matching covering every agent in ``agents`` with goods from ``goods``."""
    agents = sorted(agents)
    goods_set = frozenset(goods)
    adj = {i: tuple(g for g in state.adj[i] if g in goods_set) for i in agents}
    match: dict[int, int] = {}
    owner: dict[int, int] = {}
    for i in agents:
        path = _augment(adj, owner, i, set())
        if path is None:
            raise NoPerfectMatching(f"agent {i} cannot be matched (Hall's condition fails)")
        _flip(match, owner, i, path)
    return match
