"""Benchmark task generators (Robot, RobotConj, Queens, Cats) and random small eKABs."""
from __future__ import annotations

import random
from dataclasses import dataclass

from .ekab import EKABTask, parse_task
from .ontology import parse_ontology

FAMILIES = ("robot", "robotconj", "queens", "cats")


@dataclass(frozen=True)
class BenchSpec:
    family: str
    n: int = 3
    m: int = 1
    k: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {', '.join(FAMILIES)}")

    @property
    def label(self) -> str:
        if self.family in ("robot", "robotconj"):
            return f"{self.family}-n{self.n}"
        if self.family == "queens":
            return f"queens-n{self.n}-m{self.m}-s{self.seed}"
        return f"cats-k{self.k}-s{self.seed}"

    def build(self) -> EKABTask:
        if self.family == "robot":
            return gen_robot(self.n)
        if self.family == "robotconj":
            return gen_robotconj(self.n)
        if self.family == "queens":
            return gen_queens(self.n, self.m, self.seed)
        return gen_cats(self.k, self.seed)


def _build(name: str, onto: str, body: str) -> EKABTask:
    tbox = parse_ontology(onto)
    task = parse_task(f'(define (ekab {name})\n  (:ontology "{name}.onto")\n{body})', tbox=tbox)
    task.validate()
    return task


# -- Robot ------------------------------------------------------------------------------------
#
# One robot on an n x n grid with unknown position.  Hi{i}/Lo{i} say "row <= i"
# and "row >= i"; Le{j}/Ge{j} do the same for columns.


def _axis(n, pos, hi, lo):
    """Axioms and names for one axis: pos{i} (exact), hi{i} (<= i), lo{i} (>= i)."""
    ax = []
    for i in range(1, n + 1):
        ax += [f"{pos}{i} <= {hi}{i}", f"{pos}{i} <= {lo}{i}"]
        if i < n:
            ax += [f"{hi}{i} <= {hi}{i + 1}", f"{lo}{i + 1} <= {lo}{i}"]
    return ax


def _conj_axioms(n, pos, hi, lo):
    ax = [f"{hi}1 <= {pos}1", f"{lo}{n} <= {pos}{n}"]
    ax += [f"{hi}{i} & {lo}{i} <= {pos}{i}" for i in range(2, n)]
    return ax


def _move(name, n, pos, hi, lo, step, conj):
    """Effects for shifting one coordinate by ``step`` (+1 or -1), clamped to 1..n."""
    eff = []
    names = [f"{c}{i}" for c in (pos, hi, lo) for i in range(1, n + 1)]
    if conj:
        names = [x for x in names if not x.startswith(pos)]
    eff += [f"(not ({x} ?x))" for x in names]
    if step > 0:
        eff.append(f"({lo}2 ?x)")
        eff += [f"(when (ucq ({lo}{i} ?x)) ({lo}{i + 1} ?x))" for i in range(2, n)]
        eff += [f"(when (ucq ({hi}{i} ?x)) ({hi}{i + 1} ?x))" for i in range(1, n)]
        if not conj:
            eff.append(f"(when (ucq ({lo}{n - 1} ?x)) ({pos}{n} ?x))")
            eff += [f"(when (ucq (and ({hi}{i} ?x) ({lo}{i} ?x))) ({pos}{i + 1} ?x))"
                    for i in range(1, n - 1)]
    else:
        eff.append(f"({hi}{n - 1} ?x)")
        eff += [f"(when (ucq ({hi}{i + 1} ?x)) ({hi}{i} ?x))" for i in range(1, n - 1)]
        eff += [f"(when (ucq ({lo}{i + 1} ?x)) ({lo}{i} ?x))" for i in range(1, n)]
        if not conj:
            eff.append(f"(when (ucq ({hi}2 ?x)) ({pos}1 ?x))")
            eff += [f"(when (ucq (and ({hi}{i} ?x) ({lo}{i} ?x))) ({pos}{i - 1} ?x))"
                    for i in range(3, n + 1)]
    return (f"  (:action {name} :parameters (?x) :precondition (ucq (Robot ?x))\n"
            f"    :effect (and {' '.join(eff)}))\n")


def _robot(n: int, conj: bool) -> EKABTask:
    if n < 2:
        raise ValueError("the grid needs n >= 2")
    name = f"robot{'conj' if conj else ''}{n}"
    concepts = ["Robot"] + [f"{c}{i}" for c in ("Row", "Hi", "Lo", "Col", "Le", "Ge")
                                    for i in range(1, n + 1)]
    # the trivial bounds row <= n, row >= 1 (and likewise for columns)
    ax = [f"Robot <= Hi{n}", "Robot <= Lo1", f"Robot <= Le{n}", "Robot <= Ge1"]
    ax += _axis(n, "Row", "Hi", "Lo") + _axis(n, "Col", "Le", "Ge")
    if conj:
        ax += _conj_axioms(n, "Row", "Hi", "Lo") + _conj_axioms(n, "Col", "Le", "Ge")
    onto = "".join(f"concept {c}\n" for c in concepts) + "\n".join(ax) + "\n"
    body = (_move("down", n, "Row", "Hi", "Lo", +1, conj) + _move("up", n, "Row", "Hi", "Lo", -1, conj)
            + _move("right", n, "Col", "Le", "Ge", +1, conj)
            + _move("left", n, "Col", "Le", "Ge", -1, conj)
            + "  (:objects robot)\n  (:init (Robot robot))\n"
            + "  (:goal (ucq (and (Row1 robot) (Col1 robot))))")
    return _build(name, onto, body)


def gen_robot(n: int) -> EKABTask:
    return _robot(n, conj=False)


def gen_robotconj(n: int) -> EKABTask:
    return _robot(n, conj=True)


# -- Queens -----------------------------------------------------------------------------------


def gen_queens(n: int, m: int, seed: int = 0) -> EKABTask:
    """m queens on an n x n board; the goal is a placement without attacks.

    A queen occupies four line objects (row, column, both diagonals); the
    static closed predicate ``cell`` lists the line quadruple of every square.
    ``attacks`` is stored in one direction and made symmetric by the ontology
    (``attacks <= conflict``, ``attacks- <= conflict``).
    """
    if n < 1 or not 1 <= m <= n * n:
        raise ValueError("need n >= 1 and 1 <= m <= n*n")
    rng = random.Random(seed)
    cells = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]

    def lines(c):
        i, j = c
        return (f"r{i}", f"k{j}", f"d{i - j + n}", f"a{i + j}")

    placed = rng.sample(cells, m)
    onto = ("concept Queen\nconcept Line\nrole on\nrole attacks\nrole conflict\n"
            "Queen <= some on Line\nsome on- top <= Line\n"
            "attacks <= conflict\nattacks- <= conflict\n")
    facts = [f"(cell {' '.join(lines(c))})" for c in cells]
    queens = [f"q{t + 1}" for t in range(m)]
    for q, c in zip(queens, placed):
        facts.append(f"(Queen {q})")
        facts += [f"(on {q} {ln})" for ln in lines(c)]
    for x in range(m):
        for y in range(x + 1, m):
            if set(lines(placed[x])) & set(lines(placed[y])):
                facts.append(f"(attacks {queens[x]} {queens[y]})")
    objects = sorted({ln for c in cells for ln in lines(c)})
    shares = " ".join(f"(on ?y {v})" for v in ("?r", "?c", "?d", "?a"))
    body = (
        "  (:predicates (cell ?r ?c ?d ?a))\n"
        "  (:action move :parameters (?q ?r ?c ?d ?a)\n"
        "    :precondition (and (Queen ?q) (cell ?r ?c ?d ?a)\n"
        "      (or (on ?q ?r) (on ?q ?c) (on ?q ?d) (on ?q ?a))\n"
        "      (not (exists (?y) (and (on ?y ?r) (on ?y ?c)))))\n"
        "    :effect (and (on ?q ?r) (on ?q ?c) (on ?q ?d) (on ?q ?a)\n"
        "      (forall (?l) (not (on ?q ?l)))\n"
        "      (forall (?y) (and (not (attacks ?q ?y)) (not (attacks ?y ?q))))\n"
        f"      (forall (?y) (when (and (Queen ?y) (not (= ?y ?q)) (or {shares}))\n"
        "        (attacks ?q ?y)))))\n"
        f"  (:objects {' '.join(queens + objects)})\n"
        f"  (:init {' '.join(facts)})\n"
        "  (:goal (not (exists (?x ?y) (ucq (conflict ?x ?y)))))")
    return _build(f"queens{n}x{m}s{seed}", onto, body)


# -- Cats -------------------------------------------------------------------------------------


def gen_cats(k: int, seed: int = 0) -> EKABTask:
    """Packages hold a cat or a bomb, sometimes unknown; every package must end up safe."""
    if k < 1:
        raise ValueError("need k >= 1")
    rng = random.Random(seed)
    onto = ("concept Package\nconcept Cat\nconcept Bomb\nconcept Safe\nconcept Disarmed\n"
            "concept Content\nrole holds\n"
            "Package <= some holds Content\nsome holds Cat <= Safe\n"
            "Disarmed <= Safe\nBomb & Cat <= bot\n")
    facts = []
    for i in range(1, k + 1):
        p = f"p{i}"
        facts.append(f"(Package {p})")
        kind = rng.choice(("cat", "bomb", "unknown"))
        if kind != "unknown":
            facts.append(f"(holds {p} x{i})")
            facts.append(f"({'Cat' if kind == 'cat' else 'Bomb'} x{i})")
    body = (
        "  (:action disarm :parameters (?p)\n"
        "    :precondition (and (Package ?p) (not (ucq (Safe ?p))))\n"
        "    :effect (Disarmed ?p))\n"
        "  (:action dunk :parameters (?p)\n"
        "    :precondition (and (Package ?p) (not (ucq (exists (?x) (and (holds ?p ?x) (Cat ?x))))))\n"
        "    :effect (and (Disarmed ?p)\n"
        "      (forall (?x) (when (holds ?p ?x) (not (holds ?p ?x))))))\n"
        f"  (:objects {' '.join(f'p{i}' for i in range(1, k + 1))})\n"
        f"  (:init {' '.join(facts)})\n"
        "  (:goal (not (exists (?p) (and (Package ?p) (not (ucq (Safe ?p)))))))")
    return _build(f"cats{k}s{seed}", onto, body)


# -- random small eKABs -----------------------------------------------------------------------


def _rand_atom_text(rng, concepts, roles, terms):
    if rng.random() < 0.6 or not roles:
        return f"({rng.choice(concepts)} {rng.choice(terms)})"
    return f"({rng.choice(roles)}{'-' if rng.random() < 0.2 else ''} " \
           f"{rng.choice(terms)} {rng.choice(terms)})"


def _rand_cond(rng, concepts, roles, terms, objects, depth=0):
    r = rng.random()
    if depth > 1 or r < 0.45:
        atom = _rand_atom_text(rng, concepts, roles, terms)
        # inverse roles only exist inside queries; otherwise pick open or closed reading
        return f"(ucq {atom})" if "-" in atom or rng.random() < 0.6 else atom
    if r < 0.6:
        return f"(not {_rand_cond(rng, concepts, roles, terms, objects, depth + 1)})"
    if r < 0.8:
        a = _rand_cond(rng, concepts, roles, terms, objects, depth + 1)
        b = _rand_cond(rng, concepts, roles, terms, objects, depth + 1)
        return f"(and {a} {b})"
    if r < 0.9:
        y = f"?e{depth}"
        return f"(exists ({y}) {_rand_cond(rng, concepts, roles, terms + [y], objects, depth + 1)})"
    return f"(ucq (exists (?u) (and ({rng.choice(roles) if roles else 'r0'} " \
           f"{rng.choice(terms)} ?u) ({rng.choice(concepts)} ?u))))"


def random_ekab(rng: random.Random, *, n_objects: int = 2, n_actions: int = 3,
                shapes=None) -> EKABTask:
    """A small random eKAB whose initial state is consistent."""
    from .randgen import ALL_SHAPES, random_signature, random_tbox

    shapes = shapes or ALL_SHAPES
    while True:
        sig = random_signature(rng, max_concepts=4, max_roles=2, max_inds=n_objects)
        tbox = random_tbox(rng, sig, max_axioms=5, shapes=shapes)
        concepts = [c for c in sig.concept_names if c not in ("top", "bot")]
        roles = list(sig.role_names)
        objects = list(sig.individual_names)
        onto = tbox.text()
        lines = []
        for i in range(n_actions):
            params = ["?x"] if rng.random() < 0.8 else []
            terms = params + objects
            pre = _rand_cond(rng, concepts, roles, terms, objects)
            effs = []
            for _ in range(rng.randint(1, 2)):
                lit = _rand_atom_text(rng, concepts, [], terms)
                effs.append(lit if rng.random() < 0.6 else f"(not {lit})")
            if rng.random() < 0.4:
                cond = _rand_cond(rng, concepts, roles, terms + ["?y"], objects, 1)
                lit = f"({rng.choice(concepts)} ?y)"
                effs.append(f"(forall (?y) (when {cond} "
                            f"{lit if rng.random() < 0.5 else f'(not {lit})'}))")
            lines.append(f"  (:action act{i} :parameters ({' '.join(params)})\n"
                         f"    :precondition {pre}\n    :effect (and {' '.join(effs)}))\n")
        init = []
        for _ in range(rng.randint(0, 3)):
            init.append(_rand_atom_text(rng, concepts, roles, objects))
        goal = _rand_cond(rng, concepts, roles, objects, objects)
        if rng.random() < 0.5:
            goal = f"(exists (?g) {_rand_cond(rng, concepts, roles, ['?g'] + objects, objects, 1)})"
        body = ("".join(lines) + f"  (:objects {' '.join(objects)})\n"
                f"  (:init {' '.join(init)})\n  (:goal {goal})")
        try:
            return _build(f"rand{rng.randrange(10**6)}", onto, body)
        except ValueError:
            continue


# -- scaling family -----------------------------------------------------------------------------

SCALING_QUERY = "(exists (?y) (and (r ?x ?y) (C1 ?y)))"


def scaling_tbox(size: int):
    """A TBox with ``size`` axioms cycling through every normal-form shape.

    Roughly one new concept per two axioms, so the signature grows linearly
    with ``size``.
    """
    from .ontology import (AtMostOne, ConjSubsumption, ExistsLeft, ExistsRight, NominalLeft,
                           RoleInclusion, TBox)
    axioms = []
    for i in range(size):
        j = i // 2
        c, d, e = f"C{j}", f"C{j + 1}", f"C{j + 2}"
        shape = i % 6
        if shape == 0:
            ax = ConjSubsumption((c,), d)
        elif shape == 1:
            ax = ExistsRight(c, "s" if j % 2 else "r", d)
        elif shape == 2:
            ax = ExistsLeft("r-" if j % 2 else "r", d, c)
        elif shape == 3:
            ax = ConjSubsumption((c, d), e)
        elif shape == 4:
            ax = AtMostOne(c, "r", d) if j % 4 else RoleInclusion("s", "r")
        else:
            ax = NominalLeft(f"a{j % 3}", c)
        axioms.append(ax)
    return TBox.of(axioms)


def scaling_query():
    from .ecq import parse_ucq
    return parse_ucq(SCALING_QUERY)


__all__ = ["BenchSpec", "FAMILIES", "gen_robot", "gen_robotconj", "gen_queens", "gen_cats",
           "random_ekab", "scaling_tbox", "scaling_query", "SCALING_QUERY"]
