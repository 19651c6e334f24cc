"""Acceptance criteria 1-9, one pass/fail line each.

Run with pytest (lines appear in the terminal summary) or directly:
``python3 tests/test_acceptance.py``.
"""
import os
import random
import sys
import time
from functools import lru_cache

sys.path.insert(0, os.path.dirname(__file__))

from ekab2pddl import ecq as Q  # noqa: E402
from ekab2pddl.bench import random_ekab  # noqa: E402
from ekab2pddl.compiler import compile_task, validate_compilation  # noqa: E402
from ekab2pddl.datalog import check_stratification, evaluate, naive_evaluate  # noqa: E402
from ekab2pddl.ontology import parse_ontology  # noqa: E402
from ekab2pddl.pddl import emit_pddl, parse_pddl  # noqa: E402
from ekab2pddl.randgen import CHASE_SHAPES, random_program, random_triple  # noqa: E402
from ekab2pddl.report import scale_rows  # noqa: E402
from ekab2pddl.rewriter import (INCONCLUSIVE, certain_answers, oracle_answers,  # noqa: E402
                                restricted_chase_oracle)
from support import BENCH_SPECS, compiled_bench, fuzz_walk, state  # noqa: E402

RESULTS: dict[int, str] = {}

BENCH_DEPTH = 6
RANDOM_EKABS = 120
RANDOM_DEPTH = 3


def record(n: int, ok: bool, detail: str) -> None:
    RESULTS[n] = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[n])


def check(n, ok, detail):
    record(n, ok, detail)
    assert ok, RESULTS[n]


@lru_cache(maxsize=None)
def random_ekab_outputs():
    rng = random.Random(2)
    return tuple(compile_task(random_ekab(rng)) for _ in range(RANDOM_EKABS))


@lru_cache(maxsize=None)
def dual_search():
    """(label, report) for every bundled instance and every random eKAB."""
    out = [(s.label, validate_compilation(compiled_bench(s), BENCH_DEPTH)) for s in BENCH_SPECS]
    out += [(o.source.name, validate_compilation(o, RANDOM_DEPTH)) for o in random_ekab_outputs()]
    return tuple(out)


def test_criterion_1_ecq_anchor():
    t0 = time.perf_counter()
    tbox, s = parse_ontology("C <= B"), state("C(a)")
    open_ = Q.eval_ecq(s, tbox, Q.parse_ecq("(ucq (B ?x))"))
    closed = Q.eval_ecq(s, tbox, Q.parse_ecq("(B ?x)"))
    dt = time.perf_counter() - t0
    ok = open_ == {("a",)} and closed == set() and dt < 1.0
    check(1, ok, f"open={sorted(open_)} closed={sorted(closed)} in {dt:.3f}s")


def test_criterion_2_exponential_oracle():
    t0 = time.perf_counter()
    rng = random.Random(20)
    n, bad = 500, []
    for i in range(n):
        t, s, u = random_triple(rng)
        if certain_answers(t, s, u) != oracle_answers(t, s, u):
            bad.append(i)
    dt = time.perf_counter() - t0
    check(2, not bad and dt < 600, f"{n} triples, {len(bad)} mismatches, {dt:.1f}s")


def test_criterion_3_chase_oracle():
    rng = random.Random(30)
    n, conclusive, bad = 200, 0, []
    for i in range(n):
        t, s, u = random_triple(rng, CHASE_SHAPES)
        ch = restricted_chase_oracle(t, s, u, 4)
        if ch == INCONCLUSIVE:
            continue
        conclusive += 1
        if ch != certain_answers(t, s, u):
            bad.append(i)
    check(3, not bad and conclusive > 0,
          f"{n} triples, {conclusive} conclusive, {len(bad)} mismatches")


def test_criterion_4_dual_search():
    reps = dual_search()
    bad = [lab for lab, r in reps if not r.agree]
    planned = sum(r.ekab_plan is not None for _, r in reps)
    check(4, not bad, f"{len(BENCH_SPECS)} bundled + {RANDOM_EKABS} random, "
                      f"{planned} with plans, disagreements: {bad or 'none'}")


def test_criterion_5_plan_length():
    both = [(lab, r) for lab, r in dual_search() if r.ekab_plan is not None
            and r.pddl_plan is not None]
    bad = [lab for lab, r in both if len(r.pddl_plan) != len(r.ekab_plan) + 1]
    check(5, bool(both) and not bad, f"{len(both)} instances with plans, off by more "
                                     f"than one: {bad or 'none'}")


def test_criterion_6_rule_count():
    rows = scale_rows(range(2, 31))
    wrong = [r.axioms for r in rows if r.rules != r.predicted_rules]
    slopes = {r.max_arity - 2 * r.symbols for r in rows}
    ok = not wrong and len(slopes) == 1
    check(6, ok, f"|T|=2..30 rule counts exact: {not wrong}; "
                 f"max arity = 2*(|NC|+|NR|) + {sorted(slopes)}")


def test_criterion_7_guards():
    outs = [compiled_bench(s) for s in BENCH_SPECS] + list(random_ekab_outputs())
    for o in outs:
        check_stratification(o.task.program)
    rng = random.Random(70)
    totals = {"walks": 0, "steps": 0, "bot": 0, "n_bound": 0, "mismatch": 0}
    plan = [(o, 20) for o in outs[:len(BENCH_SPECS)]] + [(o, 6) for o in outs[len(BENCH_SPECS):]]
    while totals["walks"] < 1000:
        for o, reps in plan:
            for _ in range(reps):
                st = fuzz_walk(o, rng, 8)
                totals["walks"] += 1
                for k in ("steps", "bot", "n_bound", "mismatch"):
                    totals[k] += st[k]
    ok = totals["bot"] == totals["n_bound"] == totals["mismatch"] == 0
    check(7, ok, f"{len(outs)} tasks stratified; " + ", ".join(f"{k}={v}"
                                                              for k, v in totals.items()))


def test_criterion_8_round_trip():
    bad = []
    outs = [(s.label, compiled_bench(s)) for s in BENCH_SPECS]
    for lab, o in outs:
        d, p = emit_pddl(o.task)
        again = parse_pddl(d, p)
        if again != o.task or emit_pddl(again) != (d, p):
            bad.append(lab)
    check(8, not bad, f"{len(outs)} compiled benchmarks, failures: {bad or 'none'}")


def test_criterion_9_semi_naive():
    t0 = time.perf_counter()
    rng = random.Random(90)
    n, bad = 300, 0
    for _ in range(n):
        p, base = random_program(rng)
        bad += evaluate(p, base) != naive_evaluate(p, base)
    dt = time.perf_counter() - t0
    check(9, bad == 0 and dt < 120, f"{n} programs, {bad} mismatches, {dt:.2f}s")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
