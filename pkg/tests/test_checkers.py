import itertools
import random
from fractions import Fraction

import pytest

from bobw.checkers import (
    all_assignments, brute_force_property, check_ef, check_ef1, check_efm, check_efx, check_efxm,
    check_property, check_prop, witness_is_violation,
)
from bobw.core import Instance, IntegralAllocation
from bobw.errors import BudgetExceeded, DivisiblePresent, PreconditionError

import corpus
import oracles

F = Fraction


def alloc(goods, m, shares=None, m_bar=0):
    return IntegralAllocation.from_lists(goods, m, shares=shares, m_bar=m_bar)


def test_ef_symmetric_divisible_split():
    inst = Instance.from_matrix([[4], [4]], m=0)
    a = alloc([[], []], 0, shares=[[F(1, 2)], [F(1, 2)]], m_bar=1)
    assert check_ef(inst, a)


def test_ef_empty_bundle_envies():
    inst = Instance.from_matrix([[1], [1]])
    r = check_ef(inst, alloc([[0], []], 1))
    assert not r.holds and (r.witness["envier"], r.witness["envied"]) == (1, 0)
    assert witness_is_violation(inst, alloc([[0], []], 1), r)


def test_ef_opposed_preferences():
    inst = Instance.from_matrix([[3, 1], [1, 3]])
    assert check_ef(inst, alloc([[0], [1]], 2))


def test_prop_single_agent():
    inst = Instance.from_matrix([[5, 7]])
    assert check_prop(inst, alloc([[0, 1]], 2))


def test_prop_shortfall():
    inst = Instance.from_matrix([[1, 1], [1, 1]])
    r = check_prop(inst, alloc([[], [0, 1]], 2))
    assert not r.holds and r.witness["agent"] == 0 and r.witness["shortfall"] == 1


def test_prop_holds_for_both():
    inst = Instance.from_matrix([[3, 1], [1, 3]])
    assert check_prop(inst, alloc([[0], [1]], 2))


def test_ef1_single_good():
    assert check_ef1(Instance.from_matrix([[1], [1]]), alloc([[0], []], 1))


def test_ef1_both_goods_to_one_agent():
    assert not check_ef1(Instance.from_matrix([[1, 1], [1, 1]]), alloc([[0, 1], []], 2))


def test_ef1_one_each():
    assert check_ef1(Instance.from_matrix([[1, 1], [1, 1]]), alloc([[0], [1]], 2))


def test_efx_witness_names_the_cheap_good():
    inst = Instance.from_matrix([[1, 1, 1], [2, 1, 1]])
    a = alloc([[0, 1], [2]], 3)
    r = check_efx(inst, a)
    assert not r.holds
    assert (r.witness["envier"], r.witness["envied"], r.witness["good"]) == (1, 0, 1)
    assert witness_is_violation(inst, a, r)
    assert check_ef1(inst, a)


def test_efx_singletons():
    inst = Instance.from_matrix([[9, 1, 5], [1, 9, 5], [5, 5, 5]])
    assert check_efx(inst, alloc([[1], [2], [0]], 3))


def test_efx_rejects_divisible_shares():
    inst = Instance.from_matrix([[1, 1], [1, 1]], m=1)
    with pytest.raises(DivisiblePresent):
        check_efx(inst, alloc([[0], []], 1, shares=[[0], [1]], m_bar=1))


def test_efm_good_against_divisible():
    inst = Instance.from_matrix([[1, 1], [1, 1]], m=1)
    assert check_efm(inst, alloc([[0], []], 1, shares=[[0], [1]], m_bar=1))


def test_efm_uses_ef1_towards_indivisible_bundle():
    inst = Instance.from_matrix([[1, 1, 1], [1, 1, 1]], m=2)
    a = alloc([[0, 1], []], 2, shares=[[0], [1]], m_bar=1)
    assert check_efm(inst, a)
    # EF towards the bundle holding d is still demanded
    b = alloc([[0], [1]], 2, shares=[[0], [1]], m_bar=1)
    r = check_efm(inst, b)
    assert not r.holds and r.witness["envied"] == 1 and "good" not in r.witness


def test_efxm_strengthens_the_indivisible_branch():
    inst = Instance.from_matrix([[1, 1, 1], [2, 1, 1]], m=2)
    a = alloc([[0, 1], []], 2, shares=[[0], [1]], m_bar=1)
    assert check_efm(inst, a)
    r = check_efxm(inst, a)
    assert not r.holds and r.witness["good"] == 1


def test_efxm_one_each():
    inst = Instance.from_matrix([[3, 1], [1, 3]])
    assert check_efxm(inst, alloc([[0], [1]], 2))


def test_ef_implies_mixed_notions():
    inst = Instance.from_matrix([[2, 2, 2], [1, 3, 2]], m=2)
    a = alloc([[0], [1]], 2, shares=[[F(1, 2)], [F(1, 2)]], m_bar=1)
    assert check_ef(inst, a) and check_efm(inst, a) and check_efxm(inst, a)


def test_unknown_property():
    with pytest.raises(PreconditionError):
        check_property(Instance.from_matrix([[1]]), alloc([[0]], 1), "envy")


def test_brute_force_single_good_efx():
    assert len(brute_force_property(Instance.from_matrix([[1], [1]]), "efx")) == 2


def test_brute_force_ef_identical():
    found = brute_force_property(Instance.from_matrix([[1, 1], [1, 1]]), "ef")
    assert sorted(a.goods_lists() for a in found) == [[[0], [1]], [[1], [0]]]


def test_brute_force_ef_impossible():
    assert brute_force_property(Instance.from_matrix([[3, 1], [3, 1]]), "ef") == []


def test_brute_force_budget():
    with pytest.raises(BudgetExceeded):
        list(all_assignments(Instance.from_matrix([[1] * 30, [1] * 30]), budget=1000))


@pytest.mark.parametrize("n, m", [(2, 4), (3, 3), (3, 5)])
def test_checkers_match_naive_definitions(n, m):
    rng = random.Random(n * 100 + m)
    for _ in range(4):
        inst = corpus.additive(rng, n, m, vmax=4)
        u = inst.utilities
        for a in all_assignments(inst):
            goods = a.goods_lists()
            assert check_ef(inst, a).holds == oracles.naive_ef(u, goods)
            assert check_ef1(inst, a).holds == oracles.naive_ef1(u, goods)
            r = check_efx(inst, a)
            assert r.holds == oracles.naive_efx(u, goods)
            if not r.holds:
                assert witness_is_violation(inst, a, r)


def test_mixed_checkers_match_naive_definitions():
    rng = random.Random(5)
    for _ in range(10):
        inst = corpus.additive(rng, 3, 3, vmax=4, m_bar=1, dmax=4)
        m = inst.m
        for goods in itertools.product(range(3), repeat=m):
            lists = [[g for g in range(m) if goods[g] == i] for i in range(3)]
            for split in ([1, 0, 0], [F(1, 2), F(1, 2), 0], [0, 0, 0], [F(1, 3)] * 3):
                if sum(split) != 1:
                    continue
                shares = [[s] for s in split]
                a = alloc(lists, m, shares=shares, m_bar=1)
                sh = [tuple(s) for s in shares]
                assert check_efm(inst, a).holds == oracles.naive_efm(inst.utilities, lists, sh, m)
                assert check_efxm(inst, a).holds == oracles.naive_efm(
                    inst.utilities, lists, sh, m, strong=True)
