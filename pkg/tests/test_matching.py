import random
from fractions import Fraction

import pytest

from bobw.core import Instance
from bobw.errors import AgentAlreadyMatched, MatchingNotMaximum, NoPerfectMatching
from bobw.matching import (
    BipartiteState, augment_to_good, find_unmatchable_group, has_augmenting_path,
    large_value_graph, max_matching, minimal_unmatchable_group, perfect_matching_between,
)

import oracles


def state(adj, agents=None, goods=None, match=None):
    agents = sorted(adj) if agents is None else agents
    goods = sorted({g for gs in adj.values() for g in gs}) if goods is None else goods
    return BipartiteState(tuple(agents), tuple(goods), dict(adj), dict(match or {}))


def test_complete_graph_perfect():
    s = max_matching(state({i: (0, 1, 2) for i in range(3)}))
    assert s.size == 3


def test_shared_single_good():
    assert max_matching(state({0: (0,), 1: (0,)})).size == 1


def test_empty_graph():
    assert max_matching(state({0: (), 1: ()}, goods=[0, 1])).size == 0


def test_group_empty_when_perfect():
    s = max_matching(state({0: (0, 1), 1: (1,)}))
    assert not minimal_unmatchable_group(s)


def test_group_all_agents_without_edges():
    g = minimal_unmatchable_group(max_matching(state({0: (), 1: ()}, goods=[0])))
    assert g.agents == {0, 1} and g.neighbors == frozenset()


def test_group_two_agents_one_good():
    g = minimal_unmatchable_group(max_matching(state({0: (0,), 1: (0,)}, goods=[0, 1])))
    assert g.agents == {0, 1} and g.neighbors == {0}


def test_group_needs_maximum_matching():
    with pytest.raises(MatchingNotMaximum):
        minimal_unmatchable_group(state({0: (0,)}))


def test_direct_augmentation():
    out = augment_to_good(state({0: (0, 1), 1: (1,)}, match={1: 1}), 0, [0])
    assert out.match == {0: 0, 1: 1}


def test_length_three_path():
    s = state({0: (0,), 1: (0, 1)}, match={1: 0})
    out = augment_to_good(s, 0, [0, 1])
    assert out.match == {0: 0, 1: 1}
    assert s.match == {1: 0}


def test_no_path_leaves_state():
    s = state({0: (0,), 1: (0,)}, match={1: 0})
    assert augment_to_good(s, 0, [0]) is None
    assert s.match == {1: 0}


def test_target_restriction():
    s = state({0: (0, 1)})
    assert augment_to_good(s, 0, [1]).match == {0: 1}


def test_augment_matched_agent_rejected():
    with pytest.raises(AgentAlreadyMatched):
        augment_to_good(state({0: (0,)}, match={0: 0}), 0, [0])


def test_perfect_matching_empty_side():
    assert perfect_matching_between(state({0: (0,)}), [], [0]) == {}


def test_perfect_matching_fails_on_hall_violation():
    with pytest.raises(NoPerfectMatching):
        perfect_matching_between(state({0: (0,), 1: (0,)}), [0, 1], [0])


def _random_adj(rng, n, m, p):
    return {i: tuple(g for g in range(m) if rng.random() < p) for i in range(n)}


def test_max_matching_against_exhaustive_search():
    rng = random.Random(11)
    for _ in range(400):
        n, m = rng.randint(1, 8), rng.randint(0, 8)
        adj = _random_adj(rng, n, m, rng.choice([0.15, 0.3, 0.5]))
        s = max_matching(state(adj, goods=list(range(m))))
        assert s.size == oracles.all_matchings_size(adj, range(n))
        assert not has_augmenting_path(s)


def test_group_is_minimal_and_leaves_perfect_remainder():
    rng = random.Random(12)
    for _ in range(300):
        n, m = rng.randint(1, 7), rng.randint(0, 7)
        adj = _random_adj(rng, n, m, rng.choice([0.15, 0.3, 0.5]))
        s = max_matching(state(adj, goods=list(range(m))))
        g = minimal_unmatchable_group(s)
        if s.size == n:
            assert not g
            continue
        z, gamma = g.agents, g.neighbors
        assert gamma == {h for i in z for h in adj[i]}
        # Hall deficiency equals the number of unmatched agents
        assert len(z) - len(gamma) == n - s.size
        # no proper subset of Z has the same deficiency (tight deficiency, minimal set)
        for sub in oracles.hall_violators(adj, z):
            if sub != z:
                nb = {h for i in sub for h in adj[i]}
                assert len(sub) - len(nb) < len(z) - len(gamma)
        # the remainder is perfectly matchable avoiding Gamma(Z)
        rest = set(range(n)) - z
        pm = perfect_matching_between(s, rest, set(range(m)) - gamma)
        assert set(pm) == rest


def test_large_value_graph_from_instance():
    inst = Instance.from_matrix([[2, 1, 2], [1, 1, 2]])
    s = large_value_graph(inst, [0, 1], [0, 1, 2], Fraction(2))
    assert s.adj == {0: (0, 2), 1: (2,)}
    g, st = find_unmatchable_group(inst, [0, 1], [0, 1, 2], Fraction(2))
    assert not g and st.size == 2


def test_to_dot_marks_matched_edges():
    s = state({0: (0,)}, match={0: 0})
    assert "style=bold" in s.to_dot()
