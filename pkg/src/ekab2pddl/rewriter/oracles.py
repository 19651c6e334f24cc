"""Reference implementations used only to cross-check the rewriting.

* :func:`exponential_oracle` grounds the same rule schemas over explicitly
  enumerated sets, so every set is a single constant and unions, memberships
  and the order are looked up in generated tables.
* :func:`restricted_chase_oracle` builds a depth-bounded restricted chase and
  evaluates the query over it directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, product

from ..datalog import Atom, Builtin, DatalogProgram, Literal, Rule, evaluate
from ..ecq import UCQ, canonical_ucq
from ..formula import And, Exists, FAtom, Structure, answers
from ..ontology import (BOT, TOP, AtMostOne, ConjSubsumption, ExistsLeft, ExistsRight,
                        NominalLeft, NominalRight, RoleInclusion, State, TBox, base_role,
                        inverse)
from ..terms import Var
from .core import base_facts, layout_for
from .ir import A, Member, P, SetLit, SetVar, SLit, SRule, Union
from .strata import (BOT_PRED, OBJ, abox_concepts, abox_roles, build_base_stratum,
                     build_canonical_stratum, build_filtration_stratum)

MAX_ORACLE_CONCEPTS = 12
PREFIX = "dl_x_"


class OracleCapExceeded(ValueError):
    pass


def _powerset(symbols):
    for k in range(len(symbols) + 1):
        yield from combinations(symbols, k)


class _Grounder:
    def __init__(self, layout, external):
        self.L = layout
        self.bit = {s: 1 << i for i, s in enumerate(layout.V.symbols)}
        self.width = (len(layout.V.symbols) + 3) // 4
        self.external = external
        self.tables: dict[str, list] = {}

    def rename(self, p):
        return p if p in self.external else PREFIX + p

    def const(self, mask: int) -> str:
        # fixed-width hex makes string order coincide with the numeric order
        return f"{PREFIX}t{mask:0{self.width}x}"

    def mask(self, symbols) -> int:
        m = 0
        for s in symbols:
            m |= self.bit[s]
        return m

    def masks(self, sort):
        return [self.mask(ss) for ss in _powerset(sort.symbols)]

    def union_table(self, sorts, lit_mask) -> str:
        name = f"{PREFIX}u_{'_'.join(s.name for s in sorts)}_{lit_mask:x}"
        if name not in self.tables:
            rows = []
            for combo in product(*(self.masks(s) for s in sorts)):
                out = lit_mask
                for m in combo:
                    out |= m
                rows.append(tuple(self.const(m) for m in combo) + (self.const(out),))
            self.tables[name] = rows
        return name

    def mem_table(self, sort) -> str:
        name = f"{PREFIX}mem_{sort.name}"
        if name not in self.tables:
            self.tables[name] = [(s, self.const(m)) for m in self.masks(sort)
                                 for s in sort.symbols if m & self.bit[s]]
        return name

    def translate(self, srule) -> list[Rule]:
        side: list = []
        fresh = [0]

        def term(t):
            if isinstance(t, Var):
                return Var("E_" + t.name)
            if isinstance(t, str):
                return t
            if isinstance(t, SetVar):
                return Var("S_" + t.name)
            if isinstance(t, SetLit):
                if t.ind is not None:
                    return term(t.ind)
                return self.const(self.mask(t.symbols))
            assert isinstance(t, Union)
            lit_mask, var_parts = 0, []
            for p in t.parts:
                if isinstance(p, SetLit):
                    lit_mask |= self.mask(p.symbols)
                else:
                    var_parts.append(p)
            if not var_parts:
                return self.const(lit_mask)
            table = self.union_table([p.sort for p in var_parts], lit_mask)
            fresh[0] += 1
            out = Var(f"U{fresh[0]}")
            side.append(Literal(Atom(table, tuple(term(p) for p in var_parts) + (out,))))
            return out

        def atom(a):
            return Atom(self.rename(a.pred), tuple(term(x) for x in a.args))

        body = []
        for b in srule.body:
            if isinstance(b, Member):
                if b.individual:
                    body.append(Builtin("=", term(b.elem), term(b.term)))
                    continue
                table = self.mem_table(b.term.sort)
                body.append(Literal(Atom(table, (term(b.elem), term(b.term))), b.positive))
            else:
                assert isinstance(b, SLit)
                body.append(Literal(atom(b.atom), b.positive))
        heads = [atom(h) for h in srule.head]
        body = side + body
        pos = [x for x in body if isinstance(x, Literal) and x.positive]
        rest = [x for x in body if not (isinstance(x, Literal) and x.positive)]
        return [Rule(h, tuple(pos + rest)) for h in heads]


def exponential_oracle(tbox: TBox, q: UCQ) -> DatalogProgram:
    """Ground program over enumerated sets; answers land in ``dl_x_q0``."""
    q = canonical_ucq(q)
    L = layout_for(tbox, [q])
    if len(L.concepts) > MAX_ORACLE_CONCEPTS:
        raise OracleCapExceeded(
            f"{len(L.concepts)} concepts exceed the oracle cap of {MAX_ORACLE_CONCEPTS}")
    g = _Grounder(L, set(abox_concepts(L)) | set(abox_roles(L)) | {OBJ})
    srules = list(build_base_stratum(tbox, L).rules)
    srules += build_canonical_stratum(L).rules
    xs = [Var(f"a{i}") for i in range(q.arity)]
    for d, cq in enumerate(q.disjuncts):
        srules += build_filtration_stratum(cq, L, f"q0_d{d}").rules
        srules.append(SRule((A("q0", *xs),), (P(f"q0_d{d}", *xs),), "merge"))
    rules = []
    for sr in srules:
        rules += g.translate(sr)
    a, b = Var("A"), Var("B")
    rules.append(Rule(Atom(g.rename("leq"), (a, b)),
                      (Literal(Atom(g.rename("need"), (a, b))), Builtin("<=", a, b))))
    for name, rows in g.tables.items():
        rules += [Rule(Atom(name, row)) for row in rows]
    return DatalogProgram(tuple(dict.fromkeys(rules)))


ORACLE_ANSWER = PREFIX + "q0"
ORACLE_BOT = PREFIX + BOT_PRED


def oracle_answers(tbox: TBox, state: State, q: UCQ, program: DatalogProgram | None = None):
    q = canonical_ucq(q)
    prog = program or exponential_oracle(tbox, q)
    m = evaluate(prog, base_facts(state))
    dom = sorted(state.objects)
    if m.holds(ORACLE_BOT):
        return frozenset(product(dom, repeat=q.arity))
    return frozenset(t for t in m.get(ORACLE_ANSWER) if set(t) <= set(dom))


# -- restricted chase --------------------------------------------------------------

INCONCLUSIVE = "inconclusive"


@dataclass
class ChaseResult:
    answers: frozenset
    saturated: bool
    inconsistent: bool


def _chase_supported(tbox: TBox) -> None:
    for ax in tbox.axioms:
        if isinstance(ax, (AtMostOne, NominalLeft, NominalRight)):
            raise ValueError(f"the chase oracle does not support {ax.text()}")


def bounded_chase(tbox: TBox, state: State, q: UCQ, depth: int) -> ChaseResult:
    _chase_supported(tbox)
    q = canonical_ucq(q)
    concepts: set[tuple[str, str]] = set()
    roles: set[tuple[str, str, str]] = set()  # base role names only
    level: dict[str, int] = {}
    for o in state.objects:
        level[o] = 0
    for f in state.facts:
        if len(f.args) == 1:
            concepts.add((f.pred, f.args[0]))
        elif len(f.args) == 2:
            roles.add((f.pred,) + tuple(f.args))

    def has_role(r, x, y):
        return (r, x, y) in roles if not r.endswith("-") else (base_role(r), y, x) in roles

    def add_role(r, x, y):
        t = (r, x, y) if not r.endswith("-") else (base_role(r), y, x)
        if t not in roles:
            roles.add(t)
            return True
        return False

    def has_concept(c, x):
        return c == TOP or (c, x) in concepts

    def succ(r, x):
        if r.endswith("-"):
            return [a for (p, a, b) in roles if p == base_role(r) and b == x]
        return [b for (p, a, b) in roles if p == r and a == x]

    blocked = False
    fresh = 0
    while True:
        changed = True
        while changed:
            changed = False
            for ax in tbox.axioms:
                if isinstance(ax, ConjSubsumption):
                    for x in list(level):
                        if all(has_concept(c, x) for c in ax.lhs) and not has_concept(ax.rhs, x):
                            concepts.add((ax.rhs, x))
                            changed = True
                elif isinstance(ax, ExistsLeft):
                    for x in list(level):
                        if not has_concept(ax.rhs, x) and any(
                                has_concept(ax.filler, y) for y in succ(ax.role, x)):
                            concepts.add((ax.rhs, x))
                            changed = True
                elif isinstance(ax, RoleInclusion):
                    for (p, a, b) in list(roles):
                        for sub, sup in ((ax.sub, ax.sup), (inverse(ax.sub), inverse(ax.sup))):
                            if sub == p:
                                changed |= add_role(sup, a, b)
                            elif sub == inverse(p):
                                changed |= add_role(sup, b, a)
        if any(c == BOT for c, _ in concepts):
            dom = sorted(state.objects)
            return ChaseResult(frozenset(product(dom, repeat=q.arity)), True, True)
        new = False
        for ax in tbox.axioms:
            if not isinstance(ax, ExistsRight):
                continue
            for x in sorted(level):
                if not has_concept(ax.lhs, x):
                    continue
                if any(has_concept(ax.filler, y) for y in succ(ax.role, x)):
                    continue
                if level[x] + 1 > depth:
                    blocked = True
                    continue
                fresh += 1
                y = f"_n{fresh}"
                level[y] = level[x] + 1
                add_role(ax.role, x, y)
                if ax.filler != TOP:
                    concepts.add((ax.filler, y))
                new = True
        if not new:
            break

    rel: dict[str, set] = {TOP: {(x,) for x in level}}
    for c, x in concepts:
        rel.setdefault(c, set()).add((x,))
    for r, a, b in roles:
        rel.setdefault(r, set()).add((a, b))
        rel.setdefault(inverse(r), set()).add((b, a))
    S = Structure(level, rel)
    objs = set(state.objects)
    out = set()
    for d in q.disjuncts:
        f = Exists(d.exist_vars, And(tuple(FAtom(a.pred, a.args) for a in d.atoms)))
        for t in answers(f, S, d.answer_vars):
            if set(t) <= objs:
                out.add(t)
    return ChaseResult(frozenset(out), not blocked, False)


def restricted_chase_oracle(tbox: TBox, state: State, q: UCQ, depth: int):
    """Certain answers from a chase of the given depth, or ``"inconclusive"``."""
    res = bounded_chase(tbox, state, q, depth)
    return res.answers if res.saturated else INCONCLUSIVE
