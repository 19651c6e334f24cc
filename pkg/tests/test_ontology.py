import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekab2pddl.ontology import (TOP, BOT, AtMostOne, ConjSubsumption, ExistsLeft, ExistsRight,
                                NominalLeft, NominalRight, OntologyError, RoleInclusion, State,
                                StateError, TBox, canon_role, format_ontology, inverse,
                                parse_ontology, parse_state, saturate_role_hierarchy,
                                validate_state)
from ekab2pddl.randgen import random_signature, random_tbox
from support import state


def test_single_subsumption():
    t = parse_ontology("C <= B")
    assert t.axioms == (ConjSubsumption(("C",), "B"),)
    assert TOP in t.signature.concept_names and BOT in t.signature.concept_names


def test_existential_shapes():
    t = parse_ontology("C <= some r D\nsome r D <= E")
    assert t.axioms == (ExistsRight("C", "r", "D"), ExistsLeft("r", "D", "E"))


def test_nested_existential_rejected_with_line():
    with pytest.raises(OntologyError) as e:
        parse_ontology("A <= B\nC <= some (some r D)")
    assert "2" in str(e.value)


def test_all_seven_shapes_parse():
    text = ("A & B <= C\nA <= some r B\nsome r- B <= C\nA <= max1 r B\n"
            "A <= {a}\nrole s\nr <= s-\n{a} <= B\n")
    t = parse_ontology(text)
    kinds = [type(a) for a in t.axioms]
    assert kinds == [ConjSubsumption, ExistsRight, ExistsLeft, AtMostOne, NominalRight,
                     RoleInclusion, NominalLeft]
    assert t.axioms[5] == RoleInclusion("r", "s-")


def test_conflicting_kinds_rejected():
    with pytest.raises(OntologyError):
        parse_ontology("concept C\nA <= some C D")


def test_duplicate_conjunct_rejected():
    with pytest.raises(OntologyError):
        parse_ontology("A & A <= B")


def test_inverse_is_involution():
    assert inverse("r") == "r-"
    assert inverse(inverse("r")) == "r"
    assert canon_role("r--") == "r"
    assert inverse("r") != "r"


def test_validate_state_examples():
    sig = parse_ontology("concept C").signature
    validate_state(state("C(a)"), sig)
    with pytest.raises(StateError):
        validate_state(state("C(a,b)"), sig)
    with pytest.raises(StateError):
        validate_state(state("bot(a)"), sig)
    with pytest.raises(StateError):
        validate_state(state("D(a)"), sig)


def test_reserved_names_rejected_in_states():
    sig = parse_ontology("concept C").signature
    with pytest.raises(StateError):
        validate_state(state("dl_s(a)"), sig)


def test_state_objects_include_base():
    s = parse_state("C(a)\n# comment\nr(a, b)\n", base=["z"])
    assert s.objects == {"a", "b", "z"}
    assert len(s) == 2


def test_role_hierarchy_examples():
    sup = saturate_role_hierarchy(parse_ontology("role r s\nr <= s"))
    assert sup["r"] == {"r", "s"} and sup["r-"] == {"r-", "s-"}
    empty = saturate_role_hierarchy(parse_ontology("role r"))
    assert empty["r"] == {"r"}
    cyc = saturate_role_hierarchy(parse_ontology("role r s\nr <= s\ns <= r"))
    assert cyc["r"] == cyc["s"] == {"r", "s"}


def test_sentences_are_injective():
    axioms = [ConjSubsumption(("A",), "B"), ConjSubsumption(("A", "B"), "C"),
              ExistsRight("A", "r", "B"), ExistsLeft("r", "B", "A"), AtMostOne("A", "r", "B"),
              NominalRight("A", "a"), RoleInclusion("r", "s"), NominalLeft("a", "A")]
    assert len({a.sentence() for a in axioms}) == len(axioms)


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**9))
def test_round_trip(seed):
    rng = random.Random(seed)
    t = random_tbox(rng, random_signature(rng))
    again = parse_ontology(format_ontology(t))
    assert again == t
    assert format_ontology(again) == format_ontology(t)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**9))
def test_hierarchy_closure_properties(seed):
    rng = random.Random(seed)
    t = random_tbox(rng, random_signature(rng), shapes=("role_incl",))
    sup = saturate_role_hierarchy(t)
    for r, ss in sup.items():
        assert r in ss
        for s in ss:
            assert sup[s] <= ss
            assert inverse(s) in sup[inverse(r)]


def test_tbox_rejects_unknown_symbols():
    with pytest.raises(OntologyError):
        TBox((ConjSubsumption(("A",), "B"),))
    assert TBox.of([ConjSubsumption(("A",), "B")]).signature.concept_names[-2:] == ("A", "B")


def test_state_is_immutable_value():
    a = State.of([("C", ("a",))])
    b = State.of([("C", ("a",))])
    assert a == b and hash(a) == hash(b)
