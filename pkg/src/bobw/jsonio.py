"""JSON encoding of instances, allocations, lotteries and reports.

Rationals travel as ``"num/den"`` strings. On input, JSON integers are accepted
as well; floats are rejected because they cannot be read back exactly.
"""
from __future__ import annotations

import json
from collections.abc import Mapping, Sequence
from fractions import Fraction
from typing import Any

from .checkers import PropertyReport
from .core import (
    ZERO, Bundle, FractionalAllocation, Instance, IntegralAllocation, RandomizedAllocation,
    format_rational, to_rational,
)


class FormatError(ValueError):
    """The JSON document does not describe a valid object."""


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True) + "\n"


def _rational(x: Any, where: str) -> Fraction:
    if isinstance(x, float):
        raise FormatError(f"{where}: floats are not exact, write {x!r} as a \"num/den\" string")
    try:
        return to_rational(x)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"{where}: {exc}") from exc


def to_plain(obj: Any) -> Any:
    """Recursively replace Fractions by strings, tuples/sets by lists."""
    if isinstance(obj, Fraction):
        return format_rational(obj)
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, Mapping):
        return {str(k): to_plain(v) for k, v in obj.items()}
    if isinstance(obj, (set, frozenset)):
        return [to_plain(v) for v in sorted(obj)]
    if isinstance(obj, Sequence):
        return [to_plain(v) for v in obj]
    raise TypeError(f"cannot encode {type(obj).__name__}")


def instance_to_json(inst: Instance) -> dict:
    return {
        "agents": inst.n,
        "indivisible": list(inst.indivisible),
        "divisible": list(inst.divisible),
        "utilities": [[format_rational(v) for v in row] for row in inst.utilities],
    }


def instance_from_json(obj: Any) -> Instance:
    if not isinstance(obj, Mapping):
        raise FormatError("an instance must be a JSON object")
    try:
        n = obj["agents"]
        utilities = obj["utilities"]
    except KeyError as exc:
        raise FormatError(f"instance is missing {exc.args[0]!r}") from exc
    indivisible = obj.get("indivisible")
    divisible = obj.get("divisible", [])
    if not isinstance(n, int) or isinstance(n, bool) or n < 0:
        raise FormatError("'agents' must be a non-negative integer")
    if not isinstance(utilities, list) or len(utilities) != n:
        raise FormatError(f"'utilities' must list one row per agent ({n})")
    width = len(utilities[0]) if utilities else 0
    if indivisible is None:
        indivisible = [f"g{k + 1}" for k in range(width - len(divisible))]
    if not all(isinstance(x, str) for x in list(indivisible) + list(divisible)):
        raise FormatError("good names must be strings")
    rows = []
    for i, row in enumerate(utilities):
        if not isinstance(row, list):
            raise FormatError(f"utilities row {i} is not a list")
        rows.append(tuple(_rational(v, f"utilities[{i}][{g}]") for g, v in enumerate(row)))
    return Instance(tuple(rows), tuple(indivisible), tuple(divisible))


def allocation_to_json(inst: Instance, alloc: IntegralAllocation) -> dict:
    return {"bundles": [
        {"indivisible": [inst.indivisible[g] for g in sorted(b.goods)],
         "divisible": [format_rational(s) for s in b.shares]}
        for b in alloc.bundles]}


def allocation_from_json(obj: Any, inst: Instance) -> IntegralAllocation:
    if not isinstance(obj, Mapping) or not isinstance(obj.get("bundles"), list):
        raise FormatError("an allocation must be an object with a 'bundles' list")
    index = {name: g for g, name in enumerate(inst.indivisible)}
    bundles = []
    for i, b in enumerate(obj["bundles"]):
        if not isinstance(b, Mapping):
            raise FormatError(f"bundle {i} is not an object")
        goods = set()
        for name in b.get("indivisible", []):
            if name not in index:
                raise FormatError(f"bundle {i}: unknown indivisible good {name!r}")
            goods.add(index[name])
        shares = b.get("divisible")
        if shares is None:
            shares = [ZERO] * inst.m_bar
        if len(shares) != inst.m_bar:
            raise FormatError(f"bundle {i}: expected {inst.m_bar} divisible shares")
        bundles.append(Bundle(frozenset(goods),
                              tuple(_rational(s, f"bundle {i} share") for s in shares)))
    if len(bundles) != inst.n:
        raise FormatError(f"expected {inst.n} bundles, got {len(bundles)}")
    return IntegralAllocation(tuple(bundles), inst.m, inst.m_bar)


def lottery_to_json(inst: Instance, lottery: RandomizedAllocation) -> list:
    return [{"p": format_rational(p), "allocation": allocation_to_json(inst, a)}
            for p, a in lottery.support]


def fractional_to_json(alloc: FractionalAllocation) -> list:
    return [[format_rational(v) for v in row] for row in alloc.matrix]


def report_to_json(report: PropertyReport) -> dict:
    return {"property": report.name, "holds": report.holds,
            "witness": to_plain(report.witness) if report.witness is not None else None}
