"""Efficiency certificates: the exact LP test for fPO and Fisher-market price vectors."""
from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .checkers import PropertyReport
from .core import ZERO, Instance, IntegralAllocation, ValueTag
from .errors import CertificateFailed, IncompleteAllocation, PreconditionError
from .lp import maximize


def check_fpo_lp(inst: Instance, alloc: IntegralAllocation) -> PropertyReport:
    """Fractional Pareto optimality via an exact LP.

    Maximise total utility over fractional allocations ``Y`` that give every agent at
    least her current utility. The allocation is fPO iff the optimum equals the
    current total; otherwise the optimiser is returned as a dominating witness.
    """
    if not alloc.is_complete():
        raise IncompleteAllocation("fPO is only defined for complete allocations")
    n = alloc.n
    width = inst.m + inst.m_bar
    current = alloc.matrix().matrix
    own = [alloc.value(inst, i, i) for i in range(n)]

    def var(i: int, g: int) -> int:
        return i * width + g

    nvars = n * width + n
    cost = [ZERO] * nvars
    for i in range(n):
        for g in range(width):
            cost[var(i, g)] = inst.utilities[i][g]
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    for g in range(width):
        row = [ZERO] * nvars
        for i in range(n):
            row[var(i, g)] = Fraction(1)
        rows.append(row)
        rhs.append(Fraction(1))
    for i in range(n):
        row = [ZERO] * nvars
        for g in range(width):
            row[var(i, g)] = inst.utilities[i][g]
        row[n * width + i] = Fraction(-1)
        rows.append(row)
        rhs.append(own[i])

    basis = None
    if all(v in (0, 1) for r in current for v in r):
        # the allocation itself is a (degenerate) vertex: owners plus all surpluses
        owners = [next(i for i in range(n) if current[i][g] == 1) for g in range(width)]
        basis = [var(owners[g], g) for g in range(width)] + [n * width + i for i in range(n)]
    sol = maximize(cost, rows, rhs, basis)
    if sol.value == sum(own, ZERO):
        return PropertyReport(True, None, "fpo")
    y = [[sol.x[var(i, g)] for g in range(width)] for i in range(n)]
    gains = [sum((inst.utilities[i][g] * y[i][g] for g in range(width)), ZERO) - own[i]
             for i in range(n)]
    return PropertyReport(False, {"dominating": y, "gains": gains, "dominates": True}, "fpo")


@dataclass(frozen=True)
class FisherCertificate:
    """Prices under which the allocation is a Fisher-market equilibrium.

    Budgets are what each agent spends on her own bundle; ``ratios`` is every
    agent's maximum bang-per-buck.
    """

    prices: tuple[Fraction, ...]
    budgets: tuple[Fraction, ...]
    ratios: tuple[Fraction, ...]
    low_price_agents: frozenset[int] = frozenset()


def _mbb(inst: Instance, prices: tuple[Fraction, ...], i: int) -> Fraction:
    return max(inst.utilities[i][g] / p for g, p in enumerate(prices))


def verify_certificate(inst: Instance, alloc: IntegralAllocation,
                       cert: FisherCertificate) -> PropertyReport:
    """Market clearing, exhausted budgets and MBB-only purchases, checked exactly."""
    if not alloc.is_complete():
        return PropertyReport(False, {"reason": "market does not clear"}, "fisher")
    prices = cert.prices
    if len(prices) != inst.m or any(p <= 0 for p in prices):
        return PropertyReport(False, {"reason": "prices must be positive, one per good"}, "fisher")
    for i, b in enumerate(alloc.bundles):
        spent = sum((prices[g] for g in b.goods), ZERO)
        if spent != cert.budgets[i]:
            return PropertyReport(False, {"agent": i, "reason": "budget not spent",
                                          "budget": cert.budgets[i], "spent": spent}, "fisher")
        if not inst.m:
            continue
        alpha = _mbb(inst, prices, i)
        if alpha != cert.ratios[i]:
            return PropertyReport(False, {"agent": i, "reason": "wrong MBB ratio"}, "fisher")
        for g in sorted(b.goods):
            if inst.utilities[i][g] / prices[g] != alpha:
                return PropertyReport(False, {"agent": i, "good": g, "reason": "not MBB",
                                              "ratio": inst.utilities[i][g] / prices[g],
                                              "mbb": alpha}, "fisher")
    return PropertyReport(True, None, "fisher")


def build_fisher_certificate(inst: Instance, alloc: IntegralAllocation,
                             grouped: Iterable[int],
                             values: Optional[ValueTag] = None) -> FisherCertificate:
    """Price the output of the EFX+fPO solver and verify the equilibrium.

    ``grouped`` lists the agents that were ever removed as part of an unmatchable
    group. Raises :class:`CertificateFailed` if the prices do not certify fPO.
    """
    tag = values or inst.value_tag
    if tag is None or inst.m_bar:
        raise PreconditionError("Fisher certificates need bi-valued indivisible goods")
    a, b = tag.low, tag.high
    u = inst.utilities
    bundles = [sorted(bd.goods) for bd in alloc.bundles]
    n, m = alloc.n, inst.m
    prices: list[Fraction | None] = [None] * m
    priced: set[int] = set()

    def price_own(i: int) -> None:
        for g in bundles[i]:
            prices[g] = u[i][g]
        priced.add(i)

    if m >= n:
        grouped = set(grouped)
        for i in range(n):
            seen = {u[i][g] for g in bundles[i]}
            if i in grouped or (a in seen and b in seen):
                price_own(i)
        fill = price_own
    else:
        for i in range(n):
            if any(u[i][g] == a for g in bundles[i]):
                for g in bundles[i]:
                    prices[g] = a
                priced.add(i)

        def fill(i: int) -> None:
            for g in bundles[i]:
                prices[g] = b
            priced.add(i)

    changed = True
    while changed:
        changed = False
        for i in range(n):
            if i in priced:
                continue
            if any(u[k][g] == b for k in priced for g in bundles[i]):
                fill(i)
                changed = True
    low = frozenset(i for i in range(n) if i not in priced and bundles[i])
    # with nothing priced the vector is uniform, and any common price works; use b
    rest = a if priced else b
    final = tuple(rest if p is None else p for p in prices)
    budgets = tuple(sum((final[g] for g in bundles[i]), ZERO) for i in range(n))
    ratios = tuple(_mbb(inst, final, i) if m else ZERO for i in range(n))
    cert = FisherCertificate(final, budgets, ratios, low)
    report = verify_certificate(inst, alloc, cert)
    if not report.holds:
        raise CertificateFailed(f"price vector is not an equilibrium: {report.witness}")
    return cert
