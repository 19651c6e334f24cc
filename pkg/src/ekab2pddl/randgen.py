"""Random TBoxes, states and UCQs for differential testing."""
from __future__ import annotations

import random

from .ecq import CQ, UCQ, QAtom
from .ontology import (AtMostOne, ConjSubsumption, ExistsLeft, ExistsRight, NominalLeft,
                       NominalRight, RoleInclusion, Signature, State, TBox)
from .terms import Var

ALL_SHAPES = ("conj", "exists_r", "exists_l", "atmost", "nom_r", "role_incl", "nom_l")
CHASE_SHAPES = ("conj", "exists_r", "exists_l", "role_incl")


def random_signature(rng: random.Random, max_concepts=5, max_roles=3, max_inds=3) -> Signature:
    nc = rng.randint(2, max_concepts)
    nr = rng.randint(1, max_roles)
    ni = rng.randint(1, max_inds)
    return Signature(tuple(f"C{i}" for i in range(nc)), tuple(f"r{i}" for i in range(nr)),
                     tuple(f"a{i}" for i in range(ni)))


def _role(rng, sig):
    r = rng.choice(sig.role_names)
    return r + "-" if rng.random() < 0.3 else r


def random_axiom(rng: random.Random, sig: Signature, shapes=ALL_SHAPES, bot_rate=0.05):
    cs = [c for c in sig.concept_names if c not in ("top", "bot")]
    shape = rng.choice(shapes)
    c = lambda: rng.choice(cs)  # noqa: E731
    if shape == "conj":
        k = rng.choice((1, 1, 2))
        lhs = tuple(rng.sample(cs, k))
        rhs = "bot" if rng.random() < bot_rate else c()
        return ConjSubsumption(lhs, rhs)
    if shape == "exists_r":
        return ExistsRight(c(), _role(rng, sig), c())
    if shape == "exists_l":
        return ExistsLeft(_role(rng, sig), c(), c())
    if shape == "atmost":
        return AtMostOne(c(), _role(rng, sig), c())
    if shape == "nom_r":
        return NominalRight(c(), rng.choice(sig.individual_names))
    if shape == "nom_l":
        return NominalLeft(rng.choice(sig.individual_names), c())
    r, s = rng.sample(sig.role_names, 2) if len(sig.role_names) > 1 else (sig.role_names[0],) * 2
    if r == s:
        return ConjSubsumption((c(),), c())
    return RoleInclusion(r + ("-" if rng.random() < 0.3 else ""), s)


def random_tbox(rng: random.Random, sig: Signature, max_axioms=8, shapes=ALL_SHAPES) -> TBox:
    n = rng.randint(1, max_axioms)
    axioms = []
    for _ in range(n):
        ax = random_axiom(rng, sig, shapes)
        if ax not in axioms:
            axioms.append(ax)
    return TBox(tuple(axioms), sig)


def random_state(rng: random.Random, sig: Signature, max_facts=6) -> State:
    cs = [c for c in sig.concept_names if c not in ("top", "bot")]
    inds = sig.individual_names
    facts = set()
    for _ in range(rng.randint(0, max_facts)):
        if rng.random() < 0.55:
            facts.add((rng.choice(cs), (rng.choice(inds),)))
        else:
            facts.add((rng.choice(sig.role_names), (rng.choice(inds), rng.choice(inds))))
    return State.of(facts, inds)


def random_cq(rng: random.Random, sig: Signature, answer_vars, max_atoms=3,
              const_rate=0.1) -> CQ:
    cs = [c for c in sig.concept_names if c not in ("bot",)]
    pool = list(answer_vars) + [Var(f"y{i}") for i in range(3)]
    while True:
        atoms = []
        for _ in range(rng.randint(1, max_atoms)):
            def term():
                if rng.random() < const_rate:
                    return rng.choice(sig.individual_names)
                return rng.choice(pool)
            if rng.random() < 0.5:
                atoms.append(QAtom(rng.choice(cs), (term(),)))
            else:
                atoms.append(QAtom(_role(rng, sig), (term(), term())))
        used = {t for a in atoms for t in a.args if isinstance(t, Var)}
        if set(answer_vars) <= used:
            ex = tuple(v for v in pool if v in used and v not in answer_vars)
            return CQ(tuple(answer_vars), ex, tuple(atoms))


def random_ucq(rng: random.Random, sig: Signature, max_disjuncts=2, max_atoms=3,
               max_answer=2) -> UCQ:
    k = rng.randint(0, max_answer)
    xs = tuple(Var(f"x{i}") for i in range(k))
    n = rng.randint(1, max_disjuncts)
    return UCQ(tuple(random_cq(rng, sig, xs, max_atoms) for _ in range(n)))


def random_triple(rng: random.Random, shapes=ALL_SHAPES):
    sig = random_signature(rng)
    return random_tbox(rng, sig, shapes=shapes), random_state(rng, sig), random_ucq(rng, sig)


def random_program(rng: random.Random, max_preds=4, max_rules=6, max_consts=5):
    """A random safe, stratified Datalog program plus base facts.

    Stratification is guaranteed by drawing a level per predicate: positive
    body atoms may sit at any level up to the head's, negated ones strictly
    below it.
    """
    from .datalog import Atom, Builtin, DatalogProgram, Literal, Rule

    consts = [f"c{i}" for i in range(rng.randint(1, max_consts))]
    preds = [(f"p{i}", rng.randint(0, 2), rng.randint(0, 2)) for i in range(rng.randint(1, max_preds))]
    vs = [Var(n) for n in ("X", "Y", "Z")]
    rules = []
    for _ in range(rng.randint(1, max_rules)):
        head_p, head_k, lvl = rng.choice(preds)
        pos_pool = [p for p in preds if p[2] <= lvl]
        neg_pool = [p for p in preds if p[2] < lvl]
        body = []
        for _ in range(rng.randint(1, 2)):
            p, k, _ = rng.choice(pos_pool)
            args = tuple(rng.choice(vs) if rng.random() < 0.8 else rng.choice(consts)
                         for _ in range(k))
            body.append(Literal(Atom(p, args)))
        bound = [v for b in body for v in b.vars()]
        if neg_pool and rng.random() < 0.5:
            p, k, _ = rng.choice(neg_pool)
            args = tuple(rng.choice(bound) if bound and rng.random() < 0.8 else rng.choice(consts)
                         for _ in range(k))
            body.append(Literal(Atom(p, args), False))
        if bound and rng.random() < 0.3:
            right = rng.choice(bound) if rng.random() < 0.5 else rng.choice(consts)
            body.append(Builtin(rng.choice(("=", "!=")), rng.choice(bound), right))
        head = Atom(head_p, tuple(rng.choice(bound) if bound and rng.random() < 0.8
                                  else rng.choice(consts) for _ in range(head_k)))
        rules.append(Rule(head, tuple(body)))
    base = []
    for p, k, _ in preds:
        for _ in range(rng.randint(0, 3)):
            base.append((p, tuple(rng.choice(consts) for _ in range(k))))
    return DatalogProgram(tuple(rules)), base
