"""Shared helpers for the test suite: benchmark lists and the guard fuzzer."""
from __future__ import annotations

import random
from functools import lru_cache

from ekab2pddl.bench import BenchSpec
from ekab2pddl.compiler import N_PRED, SN_ACTION, compile_task
from ekab2pddl.ekab import applicable, apply, candidate_groundings, ground
from ekab2pddl.ontology import Fact, State
from ekab2pddl.pddl import derived_closure, pddl_successors

# Every bundled instance used by the end-to-end checks.  Queens seeds are ones
# whose initial placement contains an attacking pair when m = 2.
BENCH_SPECS = (
    [BenchSpec("robot", n=n) for n in (2, 3, 4)]
    + [BenchSpec("robotconj", n=n) for n in (2, 3, 4)]
    + [BenchSpec("queens", n=5, m=1, seed=0)]
    + [BenchSpec("queens", n=5, m=2, seed=s) for s in (0, 2, 4, 8)]
    + [BenchSpec("cats", k=k, seed=s) for k, s in ((1, 0), (1, 3), (2, 1), (3, 2), (3, 5))]
)


@lru_cache(maxsize=None)
def compiled_bench(spec: BenchSpec):
    return compile_task(spec.build())


def n_marked(out) -> set:
    """Constants introduced by the rewriting, i.e. those the initializing action marks."""
    return {args[0] for p, args in out.task.domain.actions[0].effects[0].add if p == N_PRED}


def fuzz_walk(out, rng: random.Random, length: int) -> dict:
    """One random action sequence on a compiled task.

    Walks only along PDDL steps whose eKAB counterpart is applicable, so every
    state visited is reached by a valid plan prefix.  Returns counters for
    the two guard properties; both violation counts must stay zero.
    """
    src, ptask = out.source, out.task
    marked = n_marked(out)
    orig = {p for p, _ in src.predicates} | set(src.signature.concept_names) \
        | set(src.signature.role_names)
    acts = {a.name: a for a in src.actions}
    stats = {"steps": 0, "bot": 0, "n_bound": 0, "mismatch": 0}

    s = ptask.initial_state()
    succ = pddl_successors(ptask, s)
    assert [g.name for g, _ in succ] == [SN_ACTION]
    s = succ[0][1]
    ek = src.init
    for _ in range(length):
        if derived_closure(ptask, s).holds(out.bot):
            stats["bot"] += 1
            break
        succ = pddl_successors(ptask, s)
        for g, _ in succ:
            if g.name != SN_ACTION and set(g.args) & marked:
                stats["n_bound"] += 1
        steps = [(g, t) for g, t in succ if g.name in acts]
        expected = {(g.name, g.args) for a in src.actions for g in candidate_groundings(src, ek, a)}
        if expected != {(g.name, g.args) for g, _ in steps}:
            stats["mismatch"] += 1
        rng.shuffle(steps)
        moved = False
        for g, t in steps:
            eg = ground(acts[g.name], g.args)
            if applicable(src, ek, eg):
                ek2 = apply(src, ek, eg)
                ek_facts = {f for f in t.facts if f.pred in orig}
                if ek_facts != set(ek2.facts):
                    stats["mismatch"] += 1
                s, ek, moved = t, ek2, True
                stats["steps"] += 1
                break
        if not moved:
            break
    if derived_closure(ptask, s).holds(out.bot):
        stats["bot"] += 1
    return stats


def facts(*texts) -> frozenset:
    from ekab2pddl.ontology import parse_fact
    return frozenset(parse_fact(t) for t in texts)


def state(*texts, objects=()) -> State:
    fs = facts(*texts)
    return State(fs, frozenset(objects) | {a for f in fs for a in f.args})


__all__ = ["BENCH_SPECS", "compiled_bench", "n_marked", "fuzz_walk", "facts", "state", "Fact"]
