import random

import pytest

from ekab2pddl.bench import (BenchSpec, gen_cats, gen_queens, gen_robot, gen_robotconj,
                             random_ekab, scaling_tbox)
from ekab2pddl.compiler import compile_task, validate_compilation
from ekab2pddl.ekab import bfs_plan, format_task
from ekab2pddl.rewriter import ArityCapExceeded
from ekab2pddl.ontology import ConjSubsumption, format_ontology


@pytest.mark.parametrize("spec", [BenchSpec("queens", n=5, m=2, seed=3),
                                  BenchSpec("cats", k=3, seed=9),
                                  BenchSpec("robotconj", n=3)])
def test_generators_are_deterministic(spec):
    a, b = spec.build(), spec.build()
    assert format_task(a) == format_task(b)
    assert format_ontology(a.tbox) == format_ontology(b.tbox)


def test_random_ekab_deterministic():
    a = random_ekab(random.Random(11))
    b = random_ekab(random.Random(11))
    assert format_task(a) == format_task(b)


def test_unknown_family():
    with pytest.raises(ValueError):
        BenchSpec("sokoban")


@pytest.mark.parametrize("n", [3, 4])
def test_robotconj_conjunction_axioms(n):
    t = gen_robotconj(n)
    conj = [a for a in t.tbox.axioms if isinstance(a, ConjSubsumption) and len(a.lhs) == 2]
    # one per inner row and one per inner column
    assert len(conj) == 2 * (n - 2)
    plain = [a for a in gen_robot(n).tbox.axioms
             if isinstance(a, ConjSubsumption) and len(a.lhs) == 2]
    assert plain == []


def test_robot_shortest_plan_length():
    # from an unknown position, n - 1 moves per axis pin the robot to (1, 1)
    for n in (2, 3):
        plan = bfs_plan(gen_robot(n), 2 * (n - 1))
        assert len(plan) == 2 * (n - 1)
        assert bfs_plan(gen_robot(n), 2 * (n - 1) - 1) is None


@pytest.mark.parametrize("gen", [gen_robot, gen_robotconj])
def test_large_robot_hits_arity_cap(gen):
    with pytest.raises(ArityCapExceeded):
        gen(5)


def test_queens_attacks_are_stored_once():
    t = gen_queens(5, 3, seed=1)
    att = {f.args for f in t.init.facts if f.pred == "attacks"}
    assert all((y, x) not in att for x, y in att)


def test_queens_single_queen_is_solved():
    assert bfs_plan(gen_queens(5, 1, seed=0), 1) == []


def test_parameter_checks():
    with pytest.raises(ValueError):
        gen_robot(1)
    with pytest.raises(ValueError):
        gen_queens(3, 10)
    with pytest.raises(ValueError):
        gen_cats(0)


@pytest.mark.parametrize("spec", [BenchSpec("robot", n=2), BenchSpec("robotconj", n=3),
                                  BenchSpec("queens", n=5, m=2, seed=0),
                                  BenchSpec("cats", k=2, seed=1)])
def test_small_instances_validate(spec):
    rep = validate_compilation(compile_task(spec.build()), 4)
    assert rep.agree, rep.message


def test_scaling_tbox_size():
    for n in (2, 7, 30):
        assert len(scaling_tbox(n).axioms) == n
