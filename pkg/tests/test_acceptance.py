"""Acceptance criteria, one test per criterion.

Each criterion prints a single PASS/FAIL line (shown in the pytest terminal
summary, or directly when this file is run as a script).
"""
from __future__ import annotations

import itertools
import json
import random
import subprocess
import sys
import time
from fractions import Fraction
from pathlib import Path

from bobw.checkers import (
    all_assignments, brute_force_property, check_ef, check_ef1, check_efm, check_efx, check_efxm,
)
from bobw.core import Instance
from bobw.efx_fpo import certify_run, run_efx_fpo
from bobw.exante import lottery_from_outcomes, verify_exante
from bobw.fisher import check_fpo_lp, verify_certificate
from bobw.mixed_bobw import PropEfmPlan, reduce_instance
from bobw.two_agent import local_search, run_two_agent, solve_two_agent_efm, solve_two_agent_efx

sys.path.insert(0, str(Path(__file__).parent))
import corpus  # noqa: E402
import oracles  # noqa: E402

RESULTS: list[str] = []


class Tally:
    def __init__(self, label: str):
        self.label = label
        self.failures: list[str] = []
        self.checked = 0
        self.start = time.perf_counter()

    def expect(self, ok: bool, what: str) -> None:
        self.checked += 1
        if not ok and len(self.failures) < 10:
            self.failures.append(what)
        elif not ok:
            self.failures.append("")

    def finish(self, detail: str) -> bool:
        secs = time.perf_counter() - self.start
        ok = not self.failures
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {self.label}: {detail}; {self.checked} checks, {secs:.1f}s"
        if not ok:
            line += f"; {len(self.failures)} failures, first: {self.failures[0]}"
        RESULTS.append(line)
        print(line)
        return ok


def _two_agent_corpus():
    rng = random.Random("two-agent")
    return [corpus.additive(rng, 2, rng.randint(0, 10), vmax=100) for _ in range(1000)]


def criterion_1() -> bool:
    t = Tally("1 two-agent EFX, ex-ante EF")
    for k, inst in enumerate(_two_agent_corpus()):
        lot = solve_two_agent_efx(inst)
        efx_set = {a.sort_key() for a in brute_force_property(inst, "efx")}
        for a in lot.allocations():
            t.expect(a.is_complete(), f"instance {k}: incomplete outcome")
            t.expect(check_efx(inst, a).holds, f"instance {k}: outcome not EFX")
            t.expect(oracles.naive_efx(inst.utilities, a.goods_lists()),
                     f"instance {k}: naive EFX oracle disagrees")
            t.expect(a.sort_key() in efx_set, f"instance {k}: outcome not in brute-force EFX set")
        t.expect(verify_exante(lot, inst, "ef").holds, f"instance {k}: not ex-ante EF")
    return t.finish("1000 instances, m <= 10, utilities <= 100")


def criterion_2() -> bool:
    t = Tally("2 LocalSearch contract")
    for k, inst in enumerate(_two_agent_corpus()):
        m = inst.m
        run = run_two_agent(inst.utilities, list(range(m)))
        for agent, split, before, after in run.ls_calls:
            t.expect(after <= before, f"instance {k}: difference grew {before} -> {after}")
            t.expect(split.moves <= m, f"instance {k}: {split.moves} moves > m = {m}")
        t.expect(run.moves <= 2 * m, f"instance {k}: {run.moves} moves in a run > 2m")
        # same contract from an arbitrary starting partition, measured as |u(B) - u(A)|
        rng = random.Random(f"ls/{k}")
        for i in (0, 1):
            u = inst.utilities[i]
            a = {g for g in range(m) if rng.random() < 0.5}
            b = set(range(m)) - a
            before = abs(sum((u[g] for g in a), Fraction(0)) - sum((u[g] for g in b), Fraction(0)))
            s = local_search(a, b, u)
            t.expect(s.difference(u) <= before, f"instance {k}: random start difference grew")
            t.expect(s.moves <= m, f"instance {k}: random start used {s.moves} moves")
    return t.finish("same corpus as criterion 1")


def criterion_3() -> bool:
    t = Tally("3 two-agent EFM/EFXM, ex-ante EF")
    rng = random.Random("two-agent-mixed")
    for k in range(1000):
        inst = corpus.additive(rng, 2, rng.randint(0, 8), vmax=100, m_bar=rng.randint(0, 3),
                               dmax=100)
        lot = solve_two_agent_efm(inst)
        for a in lot.allocations():
            t.expect(a.is_complete(), f"instance {k}: incomplete outcome")
            t.expect(check_efxm(inst, a).holds, f"instance {k}: outcome not EFXM")
        t.expect(verify_exante(lot, inst, "ef").holds, f"instance {k}: not ex-ante EF")
    return t.finish("1000 mixed instances, m <= 8, divisible goods <= 3")


def _bi_valued_mixed(rng: random.Random, n: int, m: int) -> Instance:
    a = rng.randint(0, 3)
    b = a + rng.randint(1, 9)
    return corpus.bi_valued(rng, n, m, a, b, rng.choice([0.2, 0.5, 0.8]),
                            m_bar=rng.randint(0, 2), dmax=3 * b)


def _indivisible_part(inst: Instance) -> Instance:
    return Instance(tuple(r[: inst.m] for r in inst.utilities), inst.indivisible)


def criterion_4(per_pair: int = 200) -> bool:
    t = Tally("4 n-agent PROP + EFM")
    for n in range(1, 6):
        perms = list(itertools.permutations(range(n)))
        for m in range(0, 13):
            rng = random.Random(f"prop-efm/{n}/{m}")
            for k in range(per_pair):
                inst = _bi_valued_mixed(rng, n, m)
                tag = f"n={n} m={m} #{k}"
                plan = PropEfmPlan(inst)
                outcomes = [plan.run(p) for p in perms]
                lot = lottery_from_outcomes(outcomes)
                for a in lot.allocations():
                    t.expect(a.is_complete() and check_efm(inst, a).holds, f"{tag}: not EFM")
                t.expect(verify_exante(lot, inst, "prop").holds, f"{tag}: not ex-ante PROP")
                if m > n:
                    partial, residual = reduce_instance(inst)
                    sub = _indivisible_part(inst)
                    given = partial.allocation(m)
                    t.expect(check_ef(sub, given, require_complete=False).holds,
                             f"{tag}: partial allocation not EF")
                    t.expect(residual.m == len(partial.residual) <= 2 * n - 2,
                             f"{tag}: {len(partial.residual)} residual goods > 2n - 2")
    return t.finish(f"{per_pair} instances per (n, m), n <= 5, m <= 12")


def criterion_5(total: int = 200) -> bool:
    t = Tally("5 n-agent EFX + fPO")
    rng = random.Random("efx-fpo")
    for k in range(total):
        n, m = rng.randint(1, 5), rng.randint(0, 10)
        a = rng.choice([1, 2, 3])
        b = rng.randint(a + 1, 12)
        inst = corpus.bi_valued(rng, n, m, a, b, rng.choice([0.2, 0.5, 0.8]))
        tag = f"#{k} n={n} m={m} a={a} b={b}"
        outcomes = []
        lp_verdicts: dict[tuple, bool] = {}
        for perm in itertools.permutations(range(n)):
            try:
                run = run_efx_fpo(inst, perm, check_invariants=True)
            except Exception as exc:  # runtime assertion fired
                t.expect(False, f"{tag} perm {perm}: {type(exc).__name__}: {exc}")
                continue
            alloc = run.allocation
            outcomes.append(alloc)
            t.expect(run.max_swaps <= n * n + n, f"{tag}: {run.max_swaps} swaps > n^2 + n")
            t.expect(check_efx(inst, alloc).holds, f"{tag} perm {perm}: not EFX")
            key = alloc.sort_key()
            if key not in lp_verdicts:
                lp_verdicts[key] = check_fpo_lp(inst, alloc).holds
            try:
                cert_ok = verify_certificate(inst, alloc, certify_run(inst, run)).holds
            except Exception as exc:
                cert_ok = False
                t.expect(False, f"{tag} perm {perm}: certificate: {exc}")
            t.expect(lp_verdicts[key], f"{tag} perm {perm}: LP says not fPO")
            t.expect(cert_ok == lp_verdicts[key], f"{tag} perm {perm}: fPO verdicts disagree")
        if outcomes:
            t.expect(verify_exante(lottery_from_outcomes(outcomes), inst, "ef").holds,
                     f"{tag}: not ex-ante EF")
    return t.finish(f"{total} bi-valued instances, n <= 5, m <= 10, a in {{1,2,3}}, b <= 12")


def criterion_6(per_shape: int = 3) -> bool:
    t = Tally("6 checker soundness")
    for n in range(1, 4):
        for m in range(0, 6):
            rng = random.Random(f"sound/{n}/{m}")
            for _ in range(per_shape):
                inst = corpus.additive(rng, n, m, vmax=4)
                u = inst.utilities
                for a in all_assignments(inst):
                    g = a.goods_lists()
                    t.expect(check_efx(inst, a).holds == oracles.naive_efx(u, g), f"efx {u} {g}")
                    t.expect(check_ef1(inst, a).holds == oracles.naive_ef1(u, g), f"ef1 {u} {g}")
                    t.expect(check_efm(inst, a).holds == oracles.naive_ef1(u, g), f"efm {u} {g}")
                mixed = corpus.additive(rng, n, m, vmax=4, m_bar=1, dmax=4)
                um = mixed.utilities
                for a in all_assignments(mixed):
                    g = a.goods_lists()
                    sh = [b.shares for b in a.bundles]
                    t.expect(check_efm(mixed, a).holds == oracles.naive_efm(um, g, sh, m),
                             f"mixed efm {um} {g} {sh}")
    return t.finish("exhaustive allocations, n <= 3, m <= 5")


def criterion_7(tmp: Path) -> bool:
    t = Tally("7 CLI determinism")
    exe = [sys.executable, "-m", "bobw"]
    cases = [("bi_valued", 3, 7, "efx-fpo"), ("mixed", 4, 9, "prop-efm"),
             ("bi_valued", 2, 4, "two-efx"), ("mixed", 2, 5, "two-efm")]
    for family, n, m, algo in cases:
        for seed in (0, 1, 18446744073709551615):
            inst = tmp / f"{family}-{n}-{m}-{seed}.json"
            gen = exe + ["gen", "--family", family, "--n", str(n), "--m", str(m),
                         "--seed", str(seed)]
            g1 = subprocess.run(gen, capture_output=True).stdout
            g2 = subprocess.run(gen, capture_output=True).stdout
            t.expect(g1 == g2 and g1, f"gen {family} seed {seed} differs")
            inst.write_bytes(g1)
            extra = ["--certificate"] if algo == "efx-fpo" else []
            solve = exe + ["solve", "--instance", str(inst), "--algo", algo, "--seed",
                           str(seed)] + extra
            s1 = subprocess.run(solve, capture_output=True)
            s2 = subprocess.run(solve, capture_output=True)
            t.expect(s1.returncode == 0, f"solve {algo} exit {s1.returncode}: {s1.stderr[-200:]}")
            t.expect(s1.stdout == s2.stdout and s1.stdout.endswith(b"\n"),
                     f"solve {algo} seed {seed} output differs")
            json.loads(s1.stdout)
    return t.finish("gen + solve twice per (family, algo, seed)")


def test_criterion_1():
    assert criterion_1()


def test_criterion_2():
    assert criterion_2()


def test_criterion_3():
    assert criterion_3()


def test_criterion_4():
    assert criterion_4()


def test_criterion_5():
    assert criterion_5()


def test_criterion_6():
    assert criterion_6()


def test_criterion_7(tmp_path):
    assert criterion_7(tmp_path)


if __name__ == "__main__":
    import tempfile

    with tempfile.TemporaryDirectory() as d:
        checks = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6,
                  lambda: criterion_7(Path(d))]
        ok = all([c() for c in checks])
    sys.exit(0 if ok else 1)
