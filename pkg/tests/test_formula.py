from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekab2pddl import formula as fo
from ekab2pddl.pddl import parse_formula
from ekab2pddl.sexp import parse_one
from ekab2pddl.terms import Var

VARS = [Var(n) for n in "xyz"]
DOMAIN = ["a", "b", "c"]
PREDS = {"P": 1, "Q": 1, "R": 2}

terms = st.one_of(st.sampled_from(VARS), st.sampled_from(VARS), st.sampled_from(DOMAIN))


def atoms():
    eq = st.builds(fo.Eq, terms, terms)
    at = st.sampled_from(sorted(PREDS)).flatmap(
        lambda p: st.tuples(*[terms] * PREDS[p]).map(lambda a, p=p: fo.FAtom(p, a)))
    return st.one_of(at, at, eq)


formulas = st.recursive(
    atoms(),
    lambda sub: st.one_of(
        st.builds(fo.Not, sub),
        st.lists(sub, max_size=3).map(lambda xs: fo.And(tuple(xs))),
        st.lists(sub, max_size=3).map(lambda xs: fo.Or(tuple(xs))),
        st.builds(lambda v, b: fo.Exists((v,), b), st.sampled_from(VARS), sub),
        st.builds(lambda v, b: fo.Forall((v,), b), st.sampled_from(VARS), sub),
    ),
    max_leaves=8,
)


@st.composite
def structures(draw):
    dom = DOMAIN[:draw(st.integers(1, 3))]
    rel = {}
    for p, k in PREDS.items():
        tuples = list(product(dom, repeat=k))
        rel[p] = {t for t in tuples if draw(st.booleans())}
    return fo.Structure(dom, rel)


def brute(f, S, order):
    return {t for t in product(sorted(S.domain), repeat=len(order))
            if fo.naive_holds(f, S, dict(zip(order, t)))}


@settings(max_examples=400, deadline=None)
@given(formulas, structures())
def test_answers_match_naive_model_checking(f, S):
    order = fo.free_vars(f)
    assert fo.answers(f, S, order) == brute(f, S, order)


@settings(max_examples=200, deadline=None)
@given(formulas, structures())
def test_nnf_preserves_meaning(f, S):
    order = fo.free_vars(f)
    assert fo.answers(fo.to_nnf(f), S, order) == fo.answers(f, S, order)


@settings(max_examples=200, deadline=None)
@given(formulas)
def test_format_parse_round_trip(f):
    assert parse_formula(parse_one(fo.format_formula(f))) == f


def test_free_vars_first_occurrence_order():
    x, y, z = VARS
    f = fo.And((fo.FAtom("P", (y,)), fo.Exists((z,), fo.FAtom("R", (x, z))), fo.FAtom("Q", (x,))))
    assert fo.free_vars(f) == [y, x]


def test_requested_order_must_cover_free_vars():
    x, y, _ = VARS
    S = fo.Structure(["a"], {"R": {("a", "a")}})
    with pytest.raises(ValueError):
        fo.answers(fo.FAtom("R", (x, y)), S, [x])


def test_negation_ranges_over_domain():
    x = VARS[0]
    S = fo.Structure(["a", "b"], {"P": {("a",)}})
    assert fo.answers(fo.Not(fo.FAtom("P", (x,))), S) == {("b",)}


def test_wide_negation_does_not_materialize_complement():
    # five free variables over 30 objects would be 24 million tuples
    vs = [Var(f"v{i}") for i in range(5)]
    dom = [f"o{i}" for i in range(30)]
    S = fo.Structure(dom, {"C": {(o, o, o, o, o) for o in dom}, "B": set()})
    f = fo.And((fo.FAtom("C", tuple(vs)), fo.Not(fo.FAtom("B", tuple(vs)))))
    assert len(fo.answers(f, S, vs)) == 30
