import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekab2pddl.bench import random_ekab
from ekab2pddl.ekab import (DLAction, TaskError, applicable, apply, bfs_plan, execute,
                            format_task, ground, parse_task, plan_valid)
from ekab2pddl.ontology import parse_ontology
from support import facts

TASK = """
(define (ekab lamp)
  (:predicates (on ?x))
  (:action switch :parameters (?x)
    :precondition (and (ucq (Lamp ?x)) (not (on ?x)))
    :effect (and (on ?x) (forall (?y) (when (and (on ?y) (not (= ?y ?x))) (not (on ?y))))))
  (:action break :parameters (?x)
    :precondition (Lamp ?x)
    :effect (Broken ?x))
  (:objects a b)
  (:init (Bulb a) (on b))
  (:goal (and (on a) (not (on b)))))
"""
ONTO = "concept Broken\nBulb <= Lamp\nBroken & Lamp <= bot\n"


@pytest.fixture
def task():
    return parse_task(TASK, tbox=parse_ontology(ONTO))


def act(task, name):
    return next(a for a in task.actions if a.name == name)


def test_open_world_precondition(task):
    sw = act(task, "switch")
    assert applicable(task, task.init, ground(sw, ("a",)))
    # b is not known to be a lamp, and it is already on
    assert not applicable(task, task.init, ground(sw, ("b",)))
    # the closed reading of Lamp has no instances
    assert not applicable(task, task.init, ground(act(task, "break"), ("a",)))


def test_conditional_delete(task):
    s = apply(task, task.init, ground(act(task, "switch"), ("a",)))
    assert s.facts == facts("Bulb(a)", "on(a)")


def test_add_beats_delete():
    t = parse_task("(define (ekab t) (:predicates (p ?x))"
                   " (:action a :parameters (?x) :precondition (p ?x)"
                   " :effect (and (not (p ?x)) (p ?x)))"
                   " (:objects o) (:init (p o)) (:goal (p o)))")
    s = apply(t, t.init, ground(t.actions[0], ("o",)))
    assert s.facts == facts("p(o)")


def test_inconsistent_successor_blocks_action():
    t = parse_task("(define (ekab t) (:action a :parameters (?x) :precondition (ucq (A ?x))"
                   " :effect (B ?x)) (:objects o) (:init (A o)) (:goal (B o)))",
                   tbox=parse_ontology("A & B <= bot"))
    g = ground(t.actions[0], ("o",))
    assert not applicable(t, t.init, g)
    assert bfs_plan(t, 3) is None


def test_plan_and_search(task):
    plan = bfs_plan(task, 3)
    assert [str(g) for g in plan] == ["(switch a)"]
    assert plan_valid(task, plan)
    assert not plan_valid(task, [])
    assert execute(task, plan)[-1].facts == facts("Bulb(a)", "on(a)")
    with pytest.raises(ValueError):
        bfs_plan(task, -1)


def test_grounding_errors(task):
    with pytest.raises(TaskError):
        ground(act(task, "switch"), ("a", "b"))


def test_unbound_variables_rejected():
    from ekab2pddl.ecq import parse_ecq
    with pytest.raises(TaskError):
        DLAction("bad", (), parse_ecq("(p ?x)"))


def test_objects_collected_from_all_parts(task):
    assert set(task.objects) == {"a", "b"}


def test_format_round_trip(task):
    again = parse_task(format_task(task), tbox=task.tbox)
    assert format_task(again) == format_task(task)
    assert again.actions == task.actions and again.goal == task.goal


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**9))
def test_random_task_round_trip_and_plans(seed):
    t = random_ekab(random.Random(seed))
    again = parse_task(format_task(t), tbox=t.tbox)
    assert format_task(again) == format_task(t)
    plan = bfs_plan(t, 2)
    if plan is not None:
        assert plan_valid(t, plan)
        # every state along a plan is consistent
        for s in execute(t, plan):
            assert t.reasoner.consistent(s)
