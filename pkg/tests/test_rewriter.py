import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekab2pddl.datalog import check_stratification, evaluate
from ekab2pddl.ecq import parse_ucq
from ekab2pddl.ontology import parse_ontology
from ekab2pddl.randgen import CHASE_SHAPES, random_triple
from ekab2pddl.rewriter import (INCONCLUSIVE, ArityCapExceeded, RewritingSet, certain_answers,
                                exponential_oracle, is_consistent, oracle_answers,
                                restricted_chase_oracle, rewrite_ucq)
from ekab2pddl.rewriter.core import base_facts, rule_count
from ekab2pddl.rewriter.oracles import OracleCapExceeded
from support import state


def ans(onto, facts, query):
    return certain_answers(parse_ontology(onto), state(*facts), parse_ucq(query))


def test_subsumption_anchor():
    assert ans("C <= B", ["C(a)"], "(B ?x)") == {("a",)}


def test_existential_then_back():
    # a gets an anonymous r-successor in D, hence E(a)
    assert ans("C <= some r D\nsome r D <= E", ["C(a)"], "(E ?x)") == {("a",)}


def test_bottom_detected():
    t = parse_ontology("A <= bot")
    r = rewrite_ucq(t, parse_ucq("(A ?x)"))
    m = evaluate(r.program, base_facts(state("A(a)")))
    assert m.holds(r.inconsistency_predicate)
    assert not is_consistent(t, state("A(a)"))
    # every tuple is a certain answer of an inconsistent knowledge base
    assert ans("concept B\nA <= bot", ["A(a)", "B(b)"], "(B ?x)") == {("a",), ("b",)}


def test_anonymous_successor_is_not_an_answer():
    assert ans("C <= some r D", ["C(a)"], "(exists (?y) (r ?x ?y))") == {("a",)}
    assert ans("C <= some r D", ["C(a)"], "(r ?x ?y)") == set()


def test_functionality_merges_successors():
    onto = "role r s\nC <= some r D\nC <= some s D\ns <= r\nC <= max1 r D"
    q = "(exists (?y) (and (r ?x ?y) (D ?y)))"
    t, u = parse_ontology(onto), parse_ucq(q)
    s = state("C(a)", "C(b)", "r(b,c)")
    assert certain_answers(t, s, u) == oracle_answers(t, s, u) == {("a",), ("b",)}


def test_cycle_through_anonymous_part_is_filtered():
    t = parse_ontology("C <= some r C")
    u = parse_ucq("(exists (?y ?z) (and (r ?y ?z) (r ?z ?y)))")
    s = state("C(a)")
    assert certain_answers(t, s, u) == set()
    assert restricted_chase_oracle(t, s, u, 4) in (set(), INCONCLUSIVE)


def test_empty_tbox_is_plain_evaluation():
    s = state("r(a,b)", "r(b,c)", "D(c)")
    got = ans("role r\nconcept D", ["r(a,b)", "r(b,c)", "D(c)"],
              "(exists (?y) (and (r ?x ?y) (r ?y ?z) (D ?z)))")
    assert got == {("a", "c")}  # ?z is free, so answers are pairs
    u = parse_ucq("(exists (?y ?z) (and (r ?x ?y) (r ?y ?z) (D ?z)))")
    assert certain_answers(parse_ontology("role r\nconcept D"), s, u) == {("a",)}


def test_chase_examples():
    t = parse_ontology("C <= some r D")
    assert restricted_chase_oracle(t, state("C(a)"), parse_ucq("(exists (?y) (r ?x ?y))"),
                                   1) == {("a",)}
    cyc = parse_ontology("C <= some r C")
    # an unsaturated chase never answers, even for queries it could settle
    assert restricted_chase_oracle(cyc, state("C(a)"), parse_ucq("(C ?x)"), 3) == INCONCLUSIVE
    with pytest.raises(ValueError):
        restricted_chase_oracle(parse_ontology("C <= {a}"), state("C(a)"), parse_ucq("(C ?x)"), 2)


def test_oracle_concept_cap():
    onto = "\n".join(f"C{i} <= C{i + 1}" for i in range(14))
    with pytest.raises(OracleCapExceeded):
        exponential_oracle(parse_ontology(onto), parse_ucq("(C0 ?x)"))


def test_arity_cap():
    onto = "\n".join(f"C{i} <= some r{i} C{i + 1}" for i in range(12))
    q = parse_ucq("(exists (?y ?z ?w) (and (r0 ?x ?y) (r1 ?y ?z) (r2 ?z ?w)))")
    with pytest.raises(ArityCapExceeded) as e:
        rewrite_ucq(parse_ontology(onto), q)
    assert "2 + k*" in str(e.value)


def test_result_shape_and_mangling():
    t = parse_ontology("C <= B")
    r = rewrite_ucq(t, parse_ucq("(exists (?y) (r ?x ?y))"))
    assert r.answer_predicate.startswith("dl_")
    assert r.program.arities[r.answer_predicate] == 1
    assert r.program.arities[r.inconsistency_predicate] == 0
    again = rewrite_ucq(t, parse_ucq("(exists (?z) (r ?x ?z))"))
    assert again.program.text() == r.program.text()


def test_strata_order():
    rs = RewritingSet(parse_ontology("C <= some r D\nsome r D <= E"),
                      [parse_ucq("(exists (?y) (and (r ?x ?y) (D ?y)))")])
    levels = check_stratification(rs.program)
    top = {}
    for name, prog in rs.strata.items():
        heads = {r.head.pred for r in prog.rules}
        top[name] = (min(levels[h] for h in heads), max(levels[h] for h in heads))
    assert top["base"][1] <= top["canonical"][0]
    assert top["order"][1] < top["canonical"][1]
    assert top["canonical"][1] <= top["filtration"][1]


def _triple(seed, shapes=None):
    rng = random.Random(seed)
    return random_triple(rng, shapes) if shapes else random_triple(rng)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 10**9))
def test_rule_count_formula(seed):
    t, _, u = _triple(seed)
    try:
        rs = RewritingSet(t, [u])
    except ArityCapExceeded:
        return
    assert len(rs.program.rules) == rule_count(t, [u])
    check_stratification(rs.program)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_exponential_oracle_agrees(seed):
    t, s, u = _triple(seed)
    assert certain_answers(t, s, u) == oracle_answers(t, s, u)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_chase_agrees_when_conclusive(seed):
    t, s, u = _triple(seed, CHASE_SHAPES)
    ch = restricted_chase_oracle(t, s, u, 4)
    poly = certain_answers(t, s, u)
    if ch != INCONCLUSIVE:
        assert ch == poly


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**9))
def test_iq_soundness_anchor(seed):
    t, s, _ = _triple(seed)
    from ekab2pddl.ontology import ConjSubsumption
    for ax in t.axioms:
        if isinstance(ax, ConjSubsumption) and len(ax.lhs) == 1 and ax.rhs != "bot":
            for f in s.facts:
                if f.pred == ax.lhs[0]:
                    assert f.args in certain_answers(t, s, parse_ucq(f"({ax.rhs} ?x)"))
