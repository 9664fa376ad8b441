"""Exact-arithmetic data model: instances, integral/fractional allocations, lotteries.

Every number in the engine is a :class:`fractions.Fraction`. Goods are referred to
by their position in the instance's ordered lists; indivisible good ``g`` is column
``g`` of the utility matrix and divisible good ``j`` is column ``m + j``.
"""
from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Optional, Union

from .errors import EmptyAgentSet, NegativeUtility, NotBiValued, PreconditionError

Rational = Fraction
RationalLike = Union[int, str, Fraction]

ZERO = Fraction(0)
ONE = Fraction(1)


def to_rational(x: RationalLike) -> Fraction:
    """Convert an int, a ``"num/den"`` string or a Fraction to a Fraction.

    Floats are refused: they are the one input that can silently lose exactness.
    """
    if isinstance(x, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational: {x!r}") from exc
    raise TypeError(f"cannot convert {type(x).__name__} to a rational exactly")


def format_rational(q: Fraction) -> str:
    q = Fraction(q)
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class ValueTag:
    """The two values of a bi-valued utility matrix (``low < high``)."""

    low: Fraction
    high: Fraction

    @property
    def binary(self) -> bool:
        return self.low == 0 and self.high == 1


def _value_tag(values: Iterable[Fraction]) -> Optional[ValueTag]:
    distinct = sorted(set(values))
    if len(distinct) > 2:
        return None
    if not distinct or distinct == [ZERO]:
        return ValueTag(ZERO, ONE)
    if len(distinct) == 1:
        # every entry is "large"; the unused low value only has to sit in (0, high)
        v = distinct[0]
        return ValueTag(v / 2, v)
    return ValueTag(distinct[0], distinct[1])


@dataclass(frozen=True)
class Instance:
    """Agents with additive utilities over indivisible and homogeneous divisible goods.

    ``utilities[i]`` lists agent ``i``'s value for every indivisible good followed by
    every divisible good (the value of receiving the whole good).
    """

    utilities: tuple[tuple[Fraction, ...], ...]
    indivisible: tuple[str, ...]
    divisible: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        rows = tuple(tuple(to_rational(v) for v in row) for row in self.utilities)
        object.__setattr__(self, "utilities", rows)
        object.__setattr__(self, "indivisible", tuple(self.indivisible))
        object.__setattr__(self, "divisible", tuple(self.divisible))
        if not rows:
            raise EmptyAgentSet("an instance needs at least one agent")
        width = len(self.indivisible) + len(self.divisible)
        for i, row in enumerate(rows):
            if len(row) != width:
                raise PreconditionError(
                    f"agent {i} has {len(row)} utilities, expected {width}")
            for g, v in enumerate(row):
                if v < 0:
                    raise NegativeUtility(f"u_{i}({g}) = {v} is negative")
        names = self.indivisible + self.divisible
        if len(set(names)) != len(names):
            raise PreconditionError("good names must be unique")

    @classmethod
    def from_matrix(cls, utilities: Sequence[Sequence[RationalLike]], m: Optional[int] = None,
                    indivisible: Optional[Sequence[str]] = None,
                    divisible: Optional[Sequence[str]] = None) -> "Instance":
        """Build an instance from a raw matrix; the first ``m`` columns are indivisible."""
        width = len(utilities[0]) if utilities else 0
        if m is None:
            m = len(indivisible) if indivisible is not None else width
        if indivisible is None:
            indivisible = [f"g{k + 1}" for k in range(m)]
        if divisible is None:
            divisible = [f"d{k + 1}" for k in range(width - m)]
        return cls(tuple(tuple(row) for row in utilities), tuple(indivisible), tuple(divisible))

    @property
    def n(self) -> int:
        return len(self.utilities)

    @property
    def m(self) -> int:
        return len(self.indivisible)

    @property
    def m_bar(self) -> int:
        return len(self.divisible)

    def u(self, i: int, g: int) -> Fraction:
        return self.utilities[i][g]

    def u_div(self, i: int, j: int) -> Fraction:
        return self.utilities[i][self.m + j]

    def total(self, i: int) -> Fraction:
        return sum(self.utilities[i], ZERO)

    @cached_property
    def value_tag(self) -> Optional[ValueTag]:
        """Bi-valued tag of the whole matrix, or None when it has > 2 distinct values."""
        return _value_tag(v for row in self.utilities for v in row)

    @cached_property
    def indivisible_value_tag(self) -> Optional[ValueTag]:
        """Bi-valued tag restricted to indivisible goods (divisible values unconstrained)."""
        return _value_tag(v for row in self.utilities for v in row[: self.m])

    @property
    def bi_valued(self) -> bool:
        return self.value_tag is not None


def validate_instance(inst: Instance, require_bi_valued: bool = False) -> Instance:
    """Re-check an instance; with ``require_bi_valued`` demand at most two distinct values."""
    inst = Instance(inst.utilities, inst.indivisible, inst.divisible)
    if require_bi_valued and inst.value_tag is None:
        distinct = sorted({v for row in inst.utilities for v in row})
        raise NotBiValued(f"{len(distinct)} distinct utility values: {distinct}")
    return inst


@dataclass(frozen=True)
class Bundle:
    goods: frozenset[int]
    shares: tuple[Fraction, ...] = ()

    @property
    def has_divisible(self) -> bool:
        # a positive fraction counts even if the agent values it at zero
        return any(s > 0 for s in self.shares)


def bundle_value(inst: Instance, i: int, bundle: Bundle) -> Fraction:
    row = inst.utilities[i]
    total = sum((row[g] for g in bundle.goods), ZERO)
    m = inst.m
    for j, s in enumerate(bundle.shares):
        if s:
            total += s * row[m + j]
    return total


@dataclass(frozen=True)
class IntegralAllocation:
    """Per-agent indivisible sets plus per-agent fractions of each divisible good."""

    bundles: tuple[Bundle, ...]
    m: int
    m_bar: int = 0

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for i, b in enumerate(self.bundles):
            if len(b.shares) != self.m_bar:
                raise PreconditionError(f"bundle {i} has {len(b.shares)} shares, expected {self.m_bar}")
            for g in b.goods:
                if not 0 <= g < self.m:
                    raise PreconditionError(f"good index {g} out of range")
                if g in seen:
                    raise PreconditionError(f"good {g} assigned twice")
                seen.add(g)
            for s in b.shares:
                if not 0 <= s <= 1:
                    raise PreconditionError(f"share {s} outside [0, 1]")
        for j in range(self.m_bar):
            if sum((b.shares[j] for b in self.bundles), ZERO) > 1:
                raise PreconditionError(f"divisible good {j} over-allocated")

    @classmethod
    def from_lists(cls, goods: Sequence[Iterable[int]], m: int,
                   shares: Optional[Sequence[Sequence[RationalLike]]] = None,
                   m_bar: int = 0) -> "IntegralAllocation":
        if shares is None:
            shares = [[ZERO] * m_bar for _ in goods]
        bundles = tuple(Bundle(frozenset(gs), tuple(to_rational(s) for s in sh))
                        for gs, sh in zip(goods, shares))
        return cls(bundles, m, m_bar)

    @property
    def n(self) -> int:
        return len(self.bundles)

    def value(self, inst: Instance, i: int, j: int) -> Fraction:
        """u_i(A_j)."""
        return bundle_value(inst, i, self.bundles[j])

    def owner(self, g: int) -> Optional[int]:
        for i, b in enumerate(self.bundles):
            if g in b.goods:
                return i
        return None

    def is_complete(self) -> bool:
        if sum(len(b.goods) for b in self.bundles) != self.m:
            return False
        return all(sum((b.shares[j] for b in self.bundles), ZERO) == 1 for j in range(self.m_bar))

    def matrix(self) -> "FractionalAllocation":
        rows = []
        for b in self.bundles:
            row = [ZERO] * (self.m + self.m_bar)
            for g in b.goods:
                row[g] = ONE
            for j, s in enumerate(b.shares):
                row[self.m + j] = Fraction(s)
            rows.append(tuple(row))
        return FractionalAllocation(tuple(rows), self.m)

    def goods_lists(self) -> list[list[int]]:
        return [sorted(b.goods) for b in self.bundles]

    def sort_key(self) -> tuple:
        return tuple((tuple(sorted(b.goods)), b.shares) for b in self.bundles)


@dataclass(frozen=True)
class FractionalAllocation:
    """An ``n x (m + m_bar)`` matrix of fractions; column ``g`` sums to one when complete."""

    matrix: tuple[tuple[Fraction, ...], ...]
    m: int

    @property
    def n(self) -> int:
        return len(self.matrix)

    def value(self, inst: Instance, i: int, j: int) -> Fraction:
        row = inst.utilities[i]
        return sum((x * v for x, v in zip(self.matrix[j], row) if x), ZERO)

    def column_sums(self) -> list[Fraction]:
        width = len(self.matrix[0]) if self.matrix else 0
        return [sum((r[c] for r in self.matrix), ZERO) for c in range(width)]

    def is_complete(self) -> bool:
        return all(s == 1 for s in self.column_sums()) and all(
            0 <= x <= 1 for r in self.matrix for x in r)


Allocation = Union[IntegralAllocation, FractionalAllocation]


@dataclass(frozen=True)
class RandomizedAllocation:
    """A finite lottery ``{(p_j, A_j)}`` over integral allocations."""

    support: tuple[tuple[Fraction, IntegralAllocation], ...]

    def __post_init__(self) -> None:
        support = tuple((to_rational(p), a) for p, a in self.support)
        object.__setattr__(self, "support", support)
        if not support:
            raise PreconditionError("a lottery needs at least one outcome")
        for p, _ in support:
            if not 0 <= p <= 1:
                raise PreconditionError(f"probability {p} outside [0, 1]")
        if sum((p for p, _ in support), ZERO) != 1:
            raise PreconditionError("probabilities must sum to one")
        shapes = {(a.n, a.m, a.m_bar) for _, a in support}
        if len(shapes) != 1:
            raise PreconditionError("lottery outcomes must share one instance shape")

    @classmethod
    def singleton(cls, alloc: IntegralAllocation) -> "RandomizedAllocation":
        return cls(((ONE, alloc),))

    def __len__(self) -> int:
        return len(self.support)

    def allocations(self) -> list[IntegralAllocation]:
        return [a for _, a in self.support]


def expected_allocation(lottery: RandomizedAllocation) -> FractionalAllocation:
    """The fractional allocation ``sum_j p_j * A_j`` implemented by the lottery."""
    first = lottery.support[0][1]
    width = first.m + first.m_bar
    acc = [[ZERO] * width for _ in range(first.n)]
    for p, alloc in lottery.support:
        for i, b in enumerate(alloc.bundles):
            row = acc[i]
            for g in b.goods:
                row[g] += p
            for j, s in enumerate(b.shares):
                row[first.m + j] += p * s
    return FractionalAllocation(tuple(tuple(r) for r in acc), first.m)


@dataclass(frozen=True)
class DivisibleMerge:
    """Maps a share of the merged divisible good back onto the original ones."""

    m_bar: int

    def expand(self, share: RationalLike) -> tuple[Fraction, ...]:
        share = to_rational(share)
        return (share,) * self.m_bar

    def expand_allocation(self, alloc: IntegralAllocation) -> IntegralAllocation:
        """Turn an allocation of the merged instance into one of the original instance."""
        bundles = tuple(Bundle(b.goods, self.expand(b.shares[0] if b.shares else ZERO))
                        for b in alloc.bundles)
        return IntegralAllocation(bundles, alloc.m, self.m_bar)


def merge_divisibles(inst: Instance, name: str = "d") -> tuple[Instance, DivisibleMerge]:
    """Collapse all divisible goods into one good ``d`` with ``u_i(d) = sum_j u_i(d_j)``.

    With no divisible goods a synthetic ``d`` worth zero to everyone is created.
    """
    m = inst.m
    while name in inst.indivisible:
        name += "'"
    rows = tuple(row[:m] + (sum(row[m:], ZERO),) for row in inst.utilities)
    return Instance(rows, inst.indivisible, (name,)), DivisibleMerge(inst.m_bar)


Solver = Callable[[Instance, Sequence[int]], IntegralAllocation]
