import pytest

from ekab2pddl.ontology import Fact
from ekab2pddl.pddl import (PDDLError, check_names, derived_closure, emit_pddl, parse_pddl,
                            pddl_bfs_plan, pddl_ground, pddl_plan_valid)

DOMAIN = """(define (domain nav)
  (:requirements :adl :derived-predicates)
  (:predicates (edge ?x ?y) (at ?x) (reach ?x ?y) (blocked ?x) (free ?x))
  (:derived (reach ?x ?y) (edge ?x ?y))
  (:derived (reach ?x ?z) (exists (?y) (and (reach ?x ?y) (edge ?y ?z))))
  (:derived (free ?x) (not (blocked ?x)))
  (:action go :parameters (?x ?y)
    :precondition (and (at ?x) (reach ?x ?y) (free ?y))
    :effect (and (at ?y) (not (at ?x))))
)
"""
PROBLEM = """(define (problem p1) (:domain nav)
  (:objects a b c d)
  (:init (edge a b) (edge b c) (edge c d) (at a) (blocked d))
  (:goal (at c)))
"""


@pytest.fixture
def task():
    return parse_pddl(DOMAIN, PROBLEM)


def test_derived_closure(task):
    m = derived_closure(task, task.initial_state())
    assert m.holds("reach", ("a", "d"))
    assert not m.holds("reach", ("b", "a"))
    assert m.holds("free", ("a",)) and not m.holds("free", ("d",))


def test_plan(task):
    plan = pddl_bfs_plan(task, 3)
    assert [str(g) for g in plan] == ["(go a c)"]
    assert pddl_plan_valid(task, plan)
    assert not pddl_plan_valid(task, [pddl_ground(task, "go", ("a", "d"))])


def test_round_trip_and_determinism(task):
    d, p = emit_pddl(task)
    again = parse_pddl(d, p)
    assert again == task
    assert emit_pddl(again) == (d, p)


def test_unsupported_requirement():
    with pytest.raises(PDDLError):
        parse_pddl(DOMAIN.replace(":adl", ":durative-actions"), PROBLEM)


def test_effect_on_derived_predicate_rejected():
    bad = DOMAIN.replace("(not (at ?x))", "(not (free ?x))")
    with pytest.raises(PDDLError):
        parse_pddl(bad, PROBLEM)


def test_wrong_domain_reference():
    with pytest.raises(PDDLError):
        parse_pddl(DOMAIN, PROBLEM.replace("(:domain nav)", "(:domain other)"))


def test_unknown_action(task):
    with pytest.raises(PDDLError):
        pddl_ground(task, "fly", ("a",))


def test_case_insensitive_name_clash(task):
    bad = parse_pddl(DOMAIN, PROBLEM.replace("(:objects a b c d)", "(:objects a b c d A)"))
    with pytest.raises(PDDLError):
        check_names(bad)
    check_names(task)


def test_init_is_a_set(task):
    assert Fact("at", ("a",)) in task.init


def test_double_negation_in_rule_body():
    dom = DOMAIN.replace("(:derived (free ?x) (not (blocked ?x)))",
                         "(:derived (free ?x) (and (at ?x) (not (not (or (blocked ?x) (at ?x))))))")
    t = parse_pddl(dom, PROBLEM)
    m = derived_closure(t, t.initial_state())
    assert m.holds("free", ("a",)) and not m.holds("free", ("b",))
