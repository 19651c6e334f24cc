"""Conjunctive, union-of-conjunctive and epistemic queries.

An ECQ mixes closed-world atoms with open-world UCQ atoms ``[q]`` under
negation, conjunction and active-domain quantification.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from . import formula as fo
from .ontology import BOT, TOP, Signature, base_role, canon_role
from .sexp import SExpError, SList, Sym, fail, parse_one
from .terms import Var


class QueryError(ValueError):
    pass


@dataclass(frozen=True)
class QAtom:
    pred: str
    args: tuple

    def __str__(self):
        return f"{self.pred}({','.join(_t(a) for a in self.args)})"


def _t(a):
    return f"?{a.name}" if isinstance(a, Var) else a


@dataclass(frozen=True)
class CQ:
    answer_vars: tuple
    exist_vars: tuple
    atoms: tuple

    def __post_init__(self):
        if not self.atoms:
            raise QueryError("a conjunctive query needs at least one atom")
        if set(self.answer_vars) & set(self.exist_vars):
            raise QueryError("answer and existential variables overlap")
        if len(set(self.answer_vars)) != len(self.answer_vars):
            raise QueryError("repeated answer variable")
        declared = set(self.answer_vars) | set(self.exist_vars)
        used = set()
        for a in self.atoms:
            if len(a.args) not in (1, 2):
                raise QueryError(f"query atom {a} must be unary or binary")
            for t in a.args:
                if isinstance(t, Var):
                    if t not in declared:
                        raise QueryError(f"variable {t} of {a} is not declared")
                    used.add(t)
        if declared - used:
            missing = ", ".join(str(v) for v in sorted(declared - used))
            raise QueryError(f"variables {missing} occur in no atom")

    @property
    def variables(self) -> tuple:
        """Existential variables first, then answer variables."""
        return tuple(self.exist_vars) + tuple(self.answer_vars)

    def concepts(self):
        return [a.pred for a in self.atoms if len(a.args) == 1]

    def roles(self):
        return [a.pred for a in self.atoms if len(a.args) == 2]

    def individuals(self):
        return [t for a in self.atoms for t in a.args if not isinstance(t, Var)]

    def __str__(self):
        body = " & ".join(str(a) for a in self.atoms)
        if self.exist_vars:
            body = f"exists {','.join(_t(v) for v in self.exist_vars)}. {body}"
        return body


@dataclass(frozen=True)
class UCQ:
    disjuncts: tuple

    def __post_init__(self):
        if not self.disjuncts:
            raise QueryError("a UCQ needs at least one disjunct")
        first = self.disjuncts[0].answer_vars
        for d in self.disjuncts[1:]:
            if d.answer_vars != first:
                raise QueryError("disjuncts disagree on answer variables")

    @property
    def answer_vars(self) -> tuple:
        return self.disjuncts[0].answer_vars

    @property
    def arity(self) -> int:
        return len(self.answer_vars)

    def concepts(self):
        return [c for d in self.disjuncts for c in d.concepts()]

    def roles(self):
        return [r for d in self.disjuncts for r in d.roles()]

    def individuals(self):
        return [a for d in self.disjuncts for a in d.individuals()]

    def __str__(self):
        return " | ".join(str(d) for d in self.disjuncts)


def cq(answer, exist, *atoms) -> CQ:
    """Convenience constructor: ``cq("x", "y", ("r", "?x", "?y"))``."""
    def term(t):
        return Var(t[1:]) if isinstance(t, str) and t.startswith("?") else t
    av = tuple(Var(v) for v in answer.split()) if isinstance(answer, str) else tuple(answer)
    ev = tuple(Var(v) for v in exist.split()) if isinstance(exist, str) else tuple(exist)
    return CQ(av, ev, tuple(QAtom(p, tuple(term(a) for a in args)) for p, *args in atoms))


def canonical_ucq(u: UCQ) -> UCQ:
    """Rename variables to x1..xk (answers) and y1..ym (per disjunct)."""
    ans = {v: Var(f"x{i + 1}") for i, v in enumerate(u.answer_vars)}
    out = []
    for d in u.disjuncts:
        ren = dict(ans)
        order = []
        for a in d.atoms:
            for t in a.args:
                if isinstance(t, Var) and t not in ren and t not in order:
                    order.append(t)
        for i, v in enumerate(order):
            ren[v] = Var(f"y{i + 1}")
        atoms = tuple(QAtom(a.pred, tuple(ren.get(t, t) for t in a.args)) for a in d.atoms)
        out.append(CQ(tuple(ans.values()), tuple(ren[v] for v in order), atoms))
    return UCQ(tuple(out))


def check_ucq(u: UCQ, sig: Signature) -> None:
    for p in u.concepts():
        if p == BOT:
            continue
        if sig.arity(p) not in (None, 1) or p in sig.role_names:
            raise QueryError(f"{p!r} is not a concept")
    for r in u.roles():
        b = base_role(r)
        if b in sig.concept_names or sig.arity(b) not in (None, 2):
            raise QueryError(f"{r!r} is not a role")


# -- ECQ AST ---------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedAtom:
    pred: str
    terms: tuple = ()


@dataclass(frozen=True)
class OpenUCQ:
    ucq: UCQ
    terms: tuple

    def __post_init__(self):
        if len(self.terms) != self.ucq.arity:
            raise QueryError("UCQ atom arity does not match its answer variables")


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: tuple = ()


@dataclass(frozen=True)
class Exists:
    vars: tuple
    body: object


TRUE = And(())


def free_vars(q) -> list[Var]:
    out: dict[Var, None] = {}

    def walk(n, bound):
        if isinstance(n, (ClosedAtom, OpenUCQ)):
            for t in n.terms:
                if isinstance(t, Var) and t not in bound:
                    out.setdefault(t)
        elif isinstance(n, Not):
            walk(n.arg, bound)
        elif isinstance(n, And):
            for a in n.args:
                walk(a, bound)
        elif isinstance(n, Exists):
            walk(n.body, bound | set(n.vars))
        else:
            raise TypeError(f"not an ECQ: {n!r}")

    walk(q, frozenset())
    return list(out)


def collect_ucqs(q) -> list[UCQ]:
    out: dict[UCQ, None] = {}

    def walk(n):
        if isinstance(n, OpenUCQ):
            out.setdefault(canonical_ucq(n.ucq))
        elif isinstance(n, Not):
            walk(n.arg)
        elif isinstance(n, And):
            for a in n.args:
                walk(a)
        elif isinstance(n, Exists):
            walk(n.body)

    walk(q)
    return list(out)


def closed_predicates(q) -> set[str]:
    if isinstance(q, ClosedAtom):
        return {q.pred} if q.pred != "=" else set()
    if isinstance(q, Not):
        return closed_predicates(q.arg)
    if isinstance(q, And):
        return set().union(*map(closed_predicates, q.args)) if q.args else set()
    if isinstance(q, Exists):
        return closed_predicates(q.body)
    return set()


def constants(q) -> set[str]:
    if isinstance(q, (ClosedAtom, OpenUCQ)):
        out = {t for t in q.terms if not isinstance(t, Var)}
        if isinstance(q, OpenUCQ):
            out |= set(q.ucq.individuals())
        return out
    if isinstance(q, Not):
        return constants(q.arg)
    if isinstance(q, And):
        return set().union(*map(constants, q.args)) if q.args else set()
    return constants(q.body)


def substitute(q, theta: Mapping):
    if not theta:
        return q
    if isinstance(q, ClosedAtom):
        return ClosedAtom(q.pred, tuple(theta.get(t, t) if isinstance(t, Var) else t
                                        for t in q.terms))
    if isinstance(q, OpenUCQ):
        return OpenUCQ(q.ucq, tuple(theta.get(t, t) if isinstance(t, Var) else t
                                    for t in q.terms))
    if isinstance(q, Not):
        return Not(substitute(q.arg, theta))
    if isinstance(q, And):
        return And(tuple(substitute(a, theta) for a in q.args))
    inner = {k: v for k, v in theta.items() if k not in q.vars}
    return Exists(q.vars, substitute(q.body, inner))


def rename_predicates(q, mapping: Mapping[str, str]):
    """Rename closed predicates and the predicates inside UCQ atoms."""
    def ren_ucq(u):
        return UCQ(tuple(CQ(d.answer_vars, d.exist_vars, tuple(
            QAtom(_ren_role(a.pred, mapping), a.args) for a in d.atoms)) for d in u.disjuncts))

    if isinstance(q, ClosedAtom):
        return ClosedAtom(mapping.get(q.pred, q.pred), q.terms)
    if isinstance(q, OpenUCQ):
        return OpenUCQ(ren_ucq(q.ucq), q.terms)
    if isinstance(q, Not):
        return Not(rename_predicates(q.arg, mapping))
    if isinstance(q, And):
        return And(tuple(rename_predicates(a, mapping) for a in q.args))
    return Exists(q.vars, rename_predicates(q.body, mapping))


def _ren_role(pred, mapping):
    b = base_role(pred)
    return mapping.get(b, b) + pred[len(b):]


def to_closed_formula(q, naming: Mapping[UCQ, str]):
    if isinstance(q, ClosedAtom):
        if q.pred == "=":
            return fo.Eq(*q.terms)
        return fo.FAtom(q.pred, q.terms)
    if isinstance(q, OpenUCQ):
        key = canonical_ucq(q.ucq)
        if key not in naming:
            raise QueryError(f"no rewriting predicate for [{q.ucq}]")
        return fo.FAtom(naming[key], q.terms)
    if isinstance(q, Not):
        return fo.Not(to_closed_formula(q.arg, naming))
    if isinstance(q, And):
        return fo.And(tuple(to_closed_formula(a, naming) for a in q.args))
    return fo.Exists(tuple(q.vars), to_closed_formula(q.body, naming))


def eval_ecq(state, tbox, q, rewritings=None, order=None) -> set[tuple]:
    """Certain-answer substitutions of ``q`` over O(s), as tuples in ``order``.

    ``rewritings`` is a :class:`~ekab2pddl.rewriter.Reasoner`; one is built
    on demand when omitted.
    """
    from .rewriter import Reasoner

    if rewritings is None:
        rewritings = Reasoner(tbox, collect_ucqs(q))
    f = to_closed_formula(q, rewritings.naming)
    return fo.answers(f, rewritings.structure(state), order)


# -- text syntax -------------------------------------------------------------------


def _term(tok):
    if isinstance(tok, SList):
        fail(tok, "expected a term")
    if tok.startswith("?"):
        if len(tok) == 1:
            fail(tok, "empty variable name")
        return Var(str(tok[1:]))
    return str(tok)


def _vars(node):
    if not isinstance(node, SList) or not all(isinstance(t, Sym) and t.startswith("?")
                                              for t in node):
        fail(node, "expected a variable list like (?x ?y)")
    return tuple(Var(str(t[1:])) for t in node)


def ecq_from_sexp(node):
    if not isinstance(node, SList):
        if node.lower() == "true":
            return TRUE
        fail(node, f"expected a query, got {node!r}")
    if not node:
        fail(node, "empty expression")
    head = node[0].lower() if isinstance(node[0], Sym) else None
    if head == "and":
        return And(tuple(ecq_from_sexp(a) for a in node[1:]))
    if head == "or":
        return Not(And(tuple(Not(ecq_from_sexp(a)) for a in node[1:])))
    if head == "not":
        if len(node) != 2:
            fail(node, "(not Q) takes one argument")
        return Not(ecq_from_sexp(node[1]))
    if head == "imply":
        if len(node) != 3:
            fail(node, "(imply A B) takes two arguments")
        return Not(And((ecq_from_sexp(node[1]), Not(ecq_from_sexp(node[2])))))
    if head in ("exists", "forall"):
        if len(node) != 3:
            fail(node, f"({head} (?vars) Q) takes two arguments")
        vs = _vars(node[1])
        body = ecq_from_sexp(node[2])
        return Exists(vs, body) if head == "exists" else Not(Exists(vs, Not(body)))
    if head == "ucq":
        if len(node) != 2:
            fail(node, "(ucq Q) takes one argument")
        return _ucq_atom(node[1])
    if head is None:
        fail(node, "expected an operator or predicate")
    if head == "=":
        if len(node) != 3:
            fail(node, "(= a b) takes two arguments")
        return ClosedAtom("=", tuple(_term(t) for t in node[1:]))
    return ClosedAtom(str(node[0]), tuple(_term(t) for t in node[1:]))


def _ucq_atom(node) -> OpenUCQ:
    if isinstance(node, SList) and node and isinstance(node[0], Sym) and node[0].lower() == "or":
        parts = [_cq_parts(d) for d in node[1:]]
        if not parts:
            fail(node, "empty disjunction")
    else:
        parts = [_cq_parts(node)]
    free0 = parts[0][0]
    for fv, _, _ in parts[1:]:
        if set(fv) != set(free0):
            fail(node, "UCQ disjuncts must share their free variables")
    disjuncts = []
    for fv, ex, atoms in parts:
        try:
            disjuncts.append(CQ(tuple(free0), ex, atoms))
        except QueryError as e:
            fail(node, str(e))
    u = UCQ(tuple(disjuncts))
    return OpenUCQ(canonical_ucq(u), tuple(free0))


def _cq_parts(node):
    ex: tuple = ()
    if isinstance(node, SList) and node and isinstance(node[0], Sym) and node[0].lower() == "exists":
        if len(node) != 3:
            fail(node, "(exists (?vars) body)")
        ex = _vars(node[1])
        node = node[2]
    if isinstance(node, SList) and node and isinstance(node[0], Sym) and node[0].lower() == "and":
        items = node[1:]
    else:
        items = [node]
    atoms = []
    for it in items:
        if not isinstance(it, SList) or not it or not isinstance(it[0], Sym) or \
                it[0].lower() in ("and", "or", "not", "exists", "forall", "ucq"):
            fail(it, "UCQ bodies are conjunctions of atoms")
        pred = str(it[0])
        args = tuple(_term(t) for t in it[1:])
        if len(args) == 2:
            pred = canon_role(pred)
        atoms.append(QAtom(pred, args))
    free = []
    for a in atoms:
        for t in a.args:
            if isinstance(t, Var) and t not in ex and t not in free:
                free.append(t)
    return free, ex, tuple(atoms)


def parse_ecq(text: str):
    try:
        return ecq_from_sexp(parse_one(text))
    except SExpError as e:
        raise QueryError(str(e)) from None


def parse_ucq(text: str) -> UCQ:
    """Parse a bare UCQ body, e.g. ``(or (C ?x) (exists (?y) (r ?x ?y)))``."""
    try:
        return _ucq_atom(parse_one(text)).ucq
    except SExpError as e:
        raise QueryError(str(e)) from None


def _format_disjuncts(disjuncts) -> str:
    def one(ex, atoms):
        parts = [f"({' '.join([a.pred] + [_t(t) for t in a.args])})" for a in atoms]
        body = parts[0] if len(parts) == 1 else "(and " + " ".join(parts) + ")"
        if ex:
            body = f"(exists ({' '.join(_t(v) for v in ex)}) {body})"
        return body

    texts = [one(ex, atoms) for ex, atoms in disjuncts]
    return texts[0] if len(texts) == 1 else "(or " + " ".join(texts) + ")"


def format_ucq(u: UCQ) -> str:
    return _format_disjuncts([(d.exist_vars, d.atoms) for d in u.disjuncts])


def format_ecq(q) -> str:
    if isinstance(q, ClosedAtom):
        return "(" + " ".join([q.pred] + [_t(t) for t in q.terms]) + ")"
    if isinstance(q, OpenUCQ):
        ren = dict(zip(q.ucq.answer_vars, q.terms))
        taken = {t for t in q.terms if isinstance(t, Var)}
        disjuncts = []
        for d in q.ucq.disjuncts:
            local = dict(ren)
            ex = []
            for v in d.exist_vars:
                w = v
                while w in taken:
                    w = Var("_" + w.name)
                local[v] = w
                ex.append(w)
            atoms = tuple(QAtom(a.pred, tuple(local.get(t, t) for t in a.args)) for a in d.atoms)
            disjuncts.append((tuple(ex), atoms))
        return f"(ucq {_format_disjuncts(disjuncts)})"
    if isinstance(q, Not):
        return f"(not {format_ecq(q.arg)})"
    if isinstance(q, And):
        return "(and" + "".join(" " + format_ecq(a) for a in q.args) + ")"
    vs = " ".join(_t(v) for v in q.vars)
    return f"(exists ({vs}) {format_ecq(q.body)})"


def ucq_signature(ucqs) -> tuple[list, list, list]:
    cs, rs, inds = [], [], []
    for u in ucqs:
        cs += [c for c in u.concepts() if c not in (TOP,)]
        rs += u.roles()
        inds += u.individuals()
    return cs, rs, inds
