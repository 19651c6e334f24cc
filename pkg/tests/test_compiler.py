import random

from hypothesis import given, settings
from hypothesis import strategies as st

from ekab2pddl import formula as fo
from ekab2pddl.bench import random_ekab
from ekab2pddl.compiler import (GOAL_ACTION, GOAL_PRED, N_PRED, S_PRED, SN_ACTION, compile_task,
                                normalize_goal, prime, validate_compilation)
from ekab2pddl.datalog import check_stratification
from ekab2pddl.ekab import parse_task
from ekab2pddl.ontology import parse_ontology
from ekab2pddl.pddl import emit_pddl, pddl_successors
from support import n_marked

TASK = """
(define (ekab lamp)
  (:predicates (on ?x))
  (:action switch :parameters (?x)
    :precondition (and (ucq (exists (?z) (wired ?x ?z))) (not (on ?x)))
    :effect (on ?x))
  (:objects a b)
  (:init (Bulb a))
  (:goal (on a)))
"""
ONTO = "Bulb <= some wired Socket\n"


def lamp():
    return parse_task(TASK, tbox=parse_ontology(ONTO))


def test_atomic_goal_kept_and_complex_goal_normalized():
    t = lamp()
    assert normalize_goal(t) is t
    t2 = parse_task(TASK.replace("(:goal (on a))", "(:goal (and (on a) (not (on b))))"),
                    tbox=t.tbox)
    n = normalize_goal(t2)
    assert n.actions[-1].name == GOAL_ACTION
    assert n.goal.pred == GOAL_PRED


def test_priming_and_copy_rules():
    out = compile_task(lamp())
    rules = {r.pred: r for r in out.task.domain.rules}
    assert prime("Bulb") in rules and prime("wired") in rules
    assert rules[prime("Bulb")].body == fo.FAtom("Bulb", rules[prime("Bulb")].params)
    # 'on' is never read open-world, so it gets no copy rule by default
    assert prime("on") not in rules
    strict = compile_task(lamp(), strict_copy_rules=True)
    assert prime("on") in {r.pred for r in strict.task.domain.rules}


def test_initializing_action_and_guards():
    out = compile_task(lamp())
    first = out.task.domain.actions[0]
    assert first.name == SN_ACTION and first.params == ()
    assert first.pre == fo.Not(fo.FAtom(S_PRED, ()))
    s0 = out.task.initial_state()
    assert [g.name for g, _ in pddl_successors(out.task, s0)] == [SN_ACTION]
    sw = out.task.domain.actions[1]
    conj = sw.pre.args
    assert fo.FAtom(S_PRED, ()) in conj
    assert fo.Not(fo.FAtom(N_PRED, (sw.params[0],))) in conj
    assert fo.Not(fo.FAtom(out.bot, ())) in conj
    # rewriting constants are marked and never bound by original actions
    marked = n_marked(out)
    s1 = pddl_successors(out.task, s0)[0][1]
    for g, _ in pddl_successors(out.task, s1):
        assert not set(g.args) & marked


def test_report_fields_and_stratification():
    out = compile_task(lamp())
    assert set(out.report) >= {"rules", "max_arity", "strata", "compile_ms"}
    assert out.report["rules"] == len(out.task.domain.rules)
    assert out.report["strata"] == 1 + max(check_stratification(out.task.program).values())


def test_validation_on_small_task():
    out = compile_task(lamp())
    rep = validate_compilation(out, 3)
    assert rep.agree and len(rep.pddl_plan) == len(rep.ekab_plan) + 1 == 2


def test_tseitin_form_is_equivalent():
    plain = compile_task(lamp())
    ts = compile_task(lamp(), tseitin=True)
    assert any(r.pred.startswith("dl_t") for r in ts.task.domain.rules)
    assert validate_compilation(ts, 3).agree
    assert len(validate_compilation(plain, 3).pddl_plan) == len(validate_compilation(ts, 3).pddl_plan)


def test_deterministic_output():
    assert emit_pddl(compile_task(lamp()).task) == emit_pddl(compile_task(lamp()).task)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 10**9), st.booleans())
def test_random_tasks_validate(seed, tseitin):
    t = random_ekab(random.Random(seed))
    out = compile_task(t, tseitin=tseitin)
    rep = validate_compilation(out, 2)
    assert rep.agree, rep.message
