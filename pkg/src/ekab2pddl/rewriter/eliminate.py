"""Lowering of set-term rules to plain Datalog over bit vectors.

Every set position of sort ``S`` becomes ``S.width`` element positions
holding ``dl_0``/``dl_1`` (or an individual in the ``@`` slot).  Unions are
computed slot-wise with a four-row ``max`` table; most of those lookups fold
away statically because one operand is a literal.
"""
from __future__ import annotations

from itertools import product

from ..datalog import Atom, Builtin, DatalogError, DatalogProgram, Literal, Rule
from ..ontology import inverse
from ..terms import Var
from .ir import IND, Member, SetLit, SetVar, SLit, SRule, Union

ZERO, ONE = "dl_0", "dl_1"
MAX_ARITY = 64


class ArityCapExceeded(DatalogError):
    pass


class _RuleBuilder:
    """Translates one (membership-free) set rule into Datalog literals."""

    def __init__(self, schema, rename, inline):
        self.schema = schema
        self.rename = rename
        self.inline = inline
        self.side: list = []
        self.fresh = 0
        self.dead = False
        self.sorts: dict[str, object] = {}

    def _fresh(self) -> Var:
        self.fresh += 1
        return Var(f"U{self.fresh}")

    def eq(self, a, b) -> None:
        if a == b:
            return
        if not isinstance(a, Var) and not isinstance(b, Var):
            self.dead = True
            return
        self.side.append(Builtin("=", a, b))

    def elem(self, t):
        return Var("E_" + t.name) if isinstance(t, Var) else t

    def values(self, t) -> dict:
        if isinstance(t, SetVar):
            prev = self.sorts.setdefault(t.name, t.sort)
            if prev != t.sort:
                raise ValueError(f"set variable {t.name} used at two sorts")
            return {s: Var(f"{t.name}_{i}") for i, s in enumerate(t.sort.slots)}
        if isinstance(t, SetLit):
            d = {s: (ONE if s in t.symbols else ZERO) for s in t.sort.symbols}
            if t.sort.has_ind:
                d[IND] = ZERO if t.ind is None else self.elem(t.ind)
            return d
        if isinstance(t, Union):
            parts = [self.values(p) for p in t.parts]
            out = {}
            for slot in t.sort.slots:
                vals = [d[slot] for d in parts if slot in d]
                out[slot] = self._ind(vals) if slot == IND else self._max(vals)
            for d in parts:
                for slot, v in d.items():
                    if slot not in out:
                        self.eq(v, ZERO)
            return out
        raise TypeError(t)

    def _ind(self, vals):
        live = [v for v in vals if v != ZERO]
        if len(live) == 1:
            return live[0]
        for v in live:  # two individuals never share a set
            self.eq(v, ZERO)
        return ZERO

    def _max(self, vals):
        live = [v for v in vals if v != ZERO]
        if ONE in live:
            return ONE
        live = list(dict.fromkeys(live))
        if not live:
            return ZERO
        acc = live[0]
        for v in live[1:]:
            out = self._fresh()
            self.side.append(Literal(Atom(self.rename("max"), (acc, v, out)), True))
            acc = out
        return acc

    def coerce(self, t, sort) -> list:
        d = self.values(t)
        for slot, v in d.items():
            if slot not in sort.slots:
                self.eq(v, ZERO)
        return [d.get(slot, ZERO) for slot in sort.slots]

    def args(self, atom) -> tuple:
        sorts = self.schema.get(atom.pred)
        if sorts is None:
            raise ValueError(f"predicate {atom.pred} has no declared sorts")
        if len(sorts) != len(atom.args):
            raise ValueError(f"{atom.pred}: expected {len(sorts)} arguments")
        out = []
        for a, s in zip(atom.args, sorts):
            if s is None:
                if not isinstance(a, (Var, str)):
                    raise ValueError(f"{atom.pred}: element position holds a set")
                out.append(self.elem(a))
            else:
                out.extend(self.coerce(a, s))
        return tuple(out)

    def atom(self, a) -> Atom:
        return Atom(self.rename(a.pred), self.args(a))

    def body_item(self, b) -> None:
        if isinstance(b, Member):
            d = self.values(b.term)
            if b.individual:
                if IND not in d:
                    self.dead = True
                    return
                self.eq(self.elem(b.elem), d[IND])
                self.side.append(Builtin("!=", d[IND], ZERO))
                return
            if b.elem not in d or b.elem == IND:
                if b.positive:
                    self.dead = True
                return
            self.eq(d[b.elem], ONE if b.positive else ZERO)
            return
        a = b.atom
        if self.inline and a.pred == "anon":
            (t,) = a.args
            ind = self.values(t).get(IND, ZERO)
            self.eq(ind, ZERO) if b.positive else self._neg_anon(ind)
            return
        if self.inline and a.pred == "inv":
            if not b.positive:
                raise ValueError("negated inv is not supported inline")
            r, ri = (self.values(x) for x in a.args)
            for slot, v in ri.items():
                self.eq(v, r[inverse(slot)])
            return
        self.side.append(Literal(self.atom(a), b.positive))

    def _neg_anon(self, ind):
        self.side.append(Builtin("!=", ind, ZERO))


def _expand_members(rule: SRule) -> list[SRule]:
    """Instantiate element variables that occur in ``c ∈ T`` tests."""
    targets = []
    for b in rule.body:
        if isinstance(b, Member) and not b.individual and isinstance(b.elem, Var):
            if b.elem not in [v for v, _ in targets]:
                targets.append((b.elem, b.term.sort.symbols))
    if not targets:
        return [rule]
    out = []
    for combo in product(*(syms for _, syms in targets)):
        theta = {v: c for (v, _), c in zip(targets, combo)}
        out.append(_subst_rule(rule, theta))
    return out


def _subst_term(t, theta):
    if isinstance(t, Var):
        return theta.get(t, t)
    if isinstance(t, SetLit) and isinstance(t.ind, Var):
        return SetLit(t.symbols, t.sort, theta.get(t.ind, t.ind))
    if isinstance(t, Union):
        return Union(tuple(_subst_term(p, theta) for p in t.parts), t.sort)
    return t


def _subst_atom(a, theta):
    return type(a)(a.pred, tuple(_subst_term(x, theta) for x in a.args))


def _subst_rule(rule: SRule, theta) -> SRule:
    body = []
    for b in rule.body:
        if isinstance(b, Member):
            body.append(Member(_subst_term(b.elem, theta), _subst_term(b.term, theta),
                               b.positive, b.individual))
        else:
            body.append(SLit(_subst_atom(b.atom, theta), b.positive))
    return SRule(tuple(_subst_atom(h, theta) for h in rule.head), tuple(body), rule.label)


def simplify(heads: list, body: list):
    """Propagate ``=`` builtins; returns ``None`` when the body is unsatisfiable."""
    heads, body = list(heads), list(body)
    while True:
        for i, b in enumerate(body):
            if isinstance(b, Builtin) and b.op == "=":
                l, r = b.left, b.right
                if l == r:
                    del body[i]
                    break
                if not isinstance(l, Var) and not isinstance(r, Var):
                    return None
                var, val = (l, r) if isinstance(l, Var) else (r, l)
                if isinstance(val, Var) and _is_bound_only_by_eq(val, body, i) \
                        and not _is_bound_only_by_eq(var, body, i):
                    var, val = val, var
                del body[i]
                theta = {var: val}
                heads = [_sub_dl(h, theta) for h in heads]
                body = [_sub_dl(x, theta) for x in body]
                break
            if isinstance(b, Builtin) and b.op == "!=" and not isinstance(b.left, Var) \
                    and not isinstance(b.right, Var):
                if b.left == b.right:
                    return None
                del body[i]
                break
        else:
            return heads, _dedupe(body)


def _is_bound_only_by_eq(v, body, skip) -> bool:
    return not any(isinstance(x, Literal) and x.positive and v in x.atom.args
                   for j, x in enumerate(body) if j != skip)


def _sub_dl(x, theta):
    if isinstance(x, Atom):
        return Atom(x.pred, tuple(theta.get(a, a) for a in x.args))
    if isinstance(x, Literal):
        return Literal(_sub_dl(x.atom, theta), x.positive)
    return Builtin(x.op, theta.get(x.left, x.left), theta.get(x.right, x.right))


def _dedupe(items):
    return list(dict.fromkeys(items))


def _order_body(body):
    """Positive literals first so that the evaluator's plans stay simple."""
    return [b for b in body if isinstance(b, Literal) and b.positive] + \
        [b for b in body if not (isinstance(b, Literal) and b.positive)]


def max_facts(rename) -> list[Rule]:
    m = rename("max")
    return [Rule(Atom(m, (a, b, ONE if ONE in (a, b) else ZERO)))
            for a in (ZERO, ONE) for b in (ZERO, ONE)]


def eliminate_sets(rules, schema: dict, *, rename=lambda p: p, inline_tables: bool = True,
                   max_arity: int = MAX_ARITY, arity_hint: str = "") -> DatalogProgram:
    """Translate set rules into a plain :class:`DatalogProgram`.

    ``rename`` maps source predicate names to output names (mangling).  With
    ``inline_tables`` the ``anon`` and ``inv`` tables are replaced by slot
    equalities and their defining rules dropped.
    """
    out: list[Rule] = []
    for pred, sorts in schema.items():
        width = sum(1 if s is None else s.width for s in sorts)
        if width > max_arity:
            raise ArityCapExceeded(
                f"predicate {pred} would have arity {width} > {max_arity}"
                + (f" ({arity_hint})" if arity_hint else ""))
    for srule in rules:
        if inline_tables and any(h.pred in ("anon", "inv") for h in srule.head):
            continue
        for r in _expand_members(srule):
            b = _RuleBuilder(schema, rename, inline_tables)
            body = []
            for item in r.body:
                b.body_item(item)
            heads = [b.atom(h) for h in r.head]
            body = b.side
            if b.dead:
                continue
            simp = simplify(heads, body)
            if simp is None:
                continue
            heads, body = simp
            body = _order_body(body)
            for h in heads:
                out.append(Rule(h, tuple(body)))
    out.extend(max_facts(rename))
    prog = DatalogProgram(tuple(dict.fromkeys(out)))
    for rule in prog.rules:
        rule.check_safe()
    return prog
