"""First-order formulas over closed-world structures.

Evaluation is relational: every subformula becomes a finite relation over
its free variables, and quantifiers range over the structure's domain.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Iterable, Mapping

from .terms import Var


@dataclass(frozen=True)
class FAtom:
    pred: str
    args: tuple = ()


@dataclass(frozen=True)
class Eq:
    left: object
    right: object


@dataclass(frozen=True)
class Not:
    arg: object


@dataclass(frozen=True)
class And:
    args: tuple = ()


@dataclass(frozen=True)
class Or:
    args: tuple = ()


@dataclass(frozen=True)
class Exists:
    vars: tuple
    body: object


@dataclass(frozen=True)
class Forall:
    vars: tuple
    body: object


TRUE = And(())
FALSE = Or(())


def conj(*parts) -> object:
    flat = []
    for p in parts:
        if isinstance(p, And):
            flat.extend(p.args)
        else:
            flat.append(p)
    return flat[0] if len(flat) == 1 else And(tuple(flat))


def free_vars(f) -> list[Var]:
    out: dict[Var, None] = {}
    _free(f, frozenset(), out)
    return list(out)


def _free(f, bound, out):
    if isinstance(f, FAtom):
        for a in f.args:
            if isinstance(a, Var) and a not in bound:
                out.setdefault(a)
    elif isinstance(f, Eq):
        for a in (f.left, f.right):
            if isinstance(a, Var) and a not in bound:
                out.setdefault(a)
    elif isinstance(f, Not):
        _free(f.arg, bound, out)
    elif isinstance(f, (And, Or)):
        for a in f.args:
            _free(a, bound, out)
    elif isinstance(f, (Exists, Forall)):
        _free(f.body, bound | set(f.vars), out)
    else:
        raise TypeError(f"not a formula: {f!r}")


def substitute(f, theta: Mapping):
    """Replace free variables according to ``theta``."""
    if not theta:
        return f
    if isinstance(f, FAtom):
        return FAtom(f.pred, tuple(theta.get(a, a) if isinstance(a, Var) else a for a in f.args))
    if isinstance(f, Eq):
        return Eq(*(theta.get(a, a) if isinstance(a, Var) else a for a in (f.left, f.right)))
    if isinstance(f, Not):
        return Not(substitute(f.arg, theta))
    if isinstance(f, (And, Or)):
        return type(f)(tuple(substitute(a, theta) for a in f.args))
    inner = {k: v for k, v in theta.items() if k not in f.vars}
    return type(f)(f.vars, substitute(f.body, inner))


def predicates(f) -> set[str]:
    if isinstance(f, FAtom):
        return {f.pred}
    if isinstance(f, Eq):
        return set()
    if isinstance(f, Not):
        return predicates(f.arg)
    if isinstance(f, (And, Or)):
        return set().union(*map(predicates, f.args)) if f.args else set()
    return predicates(f.body)


def constants(f) -> set:
    if isinstance(f, FAtom):
        return {a for a in f.args if not isinstance(a, Var)}
    if isinstance(f, Eq):
        return {a for a in (f.left, f.right) if not isinstance(a, Var)}
    if isinstance(f, Not):
        return constants(f.arg)
    if isinstance(f, (And, Or)):
        return set().union(*map(constants, f.args)) if f.args else set()
    return constants(f.body)


def to_nnf(f, negate=False):
    if isinstance(f, (FAtom, Eq)):
        return Not(f) if negate else f
    if isinstance(f, Not):
        return to_nnf(f.arg, not negate)
    if isinstance(f, And):
        return (Or if negate else And)(tuple(to_nnf(a, negate) for a in f.args))
    if isinstance(f, Or):
        return (And if negate else Or)(tuple(to_nnf(a, negate) for a in f.args))
    if isinstance(f, Exists):
        return (Forall if negate else Exists)(f.vars, to_nnf(f.body, negate))
    return (Exists if negate else Forall)(f.vars, to_nnf(f.body, negate))


# -- structures --------------------------------------------------------------------


class Structure:
    """Finite closed-world structure: a domain plus relations by predicate."""

    def __init__(self, domain: Iterable, relations: Mapping[str, Iterable[tuple]]):
        self.domain = frozenset(domain)
        self.relations = relations

    def rows(self, pred: str):
        return self.relations.get(pred, ())

    def holds_atom(self, pred, args) -> bool:
        rel = self.relations.get(pred, ())
        return tuple(args) in rel


class _Rel:
    __slots__ = ("vars", "rows")

    def __init__(self, vars_, rows):
        self.vars = tuple(vars_)
        self.rows = rows


def _unit(truth: bool) -> _Rel:
    return _Rel((), {()} if truth else set())


def _project(rel: _Rel, keep: tuple) -> _Rel:
    if keep == rel.vars:
        return rel
    idx = [rel.vars.index(v) for v in keep]
    return _Rel(keep, {tuple(r[i] for i in idx) for r in rel.rows})


def _extend(rel: _Rel, target: tuple, domain) -> _Rel:
    missing = [v for v in target if v not in rel.vars]
    if missing:
        vs = rel.vars + tuple(missing)
        ext = list(product(sorted(domain, key=str), repeat=len(missing)))
        rel = _Rel(vs, {r + e for r in rel.rows for e in ext})
    return _project(rel, target)


def _join(a: _Rel, b: _Rel) -> _Rel:
    shared = [v for v in a.vars if v in b.vars]
    extra = [v for v in b.vars if v not in a.vars]
    ai = [a.vars.index(v) for v in shared]
    bi = [b.vars.index(v) for v in shared]
    be = [b.vars.index(v) for v in extra]
    index: dict[tuple, list] = {}
    for r in b.rows:
        index.setdefault(tuple(r[i] for i in bi), []).append(tuple(r[i] for i in be))
    rows = set()
    for r in a.rows:
        for e in index.get(tuple(r[i] for i in ai), ()):
            rows.add(r + e)
    return _Rel(a.vars + tuple(extra), rows)


def _antijoin(a: _Rel, b: _Rel) -> _Rel:
    idx = [a.vars.index(v) for v in b.vars]
    return _Rel(a.vars, {r for r in a.rows if tuple(r[i] for i in idx) not in b.rows})


def _atom_rel(f, S: Structure) -> _Rel:
    if isinstance(f, Eq):
        l, r = f.left, f.right
        lv, rv = isinstance(l, Var), isinstance(r, Var)
        if not lv and not rv:
            return _unit(l == r)
        if lv and rv:
            if l == r:
                return _Rel((l,), {(o,) for o in S.domain})
            return _Rel((l, r), {(o, o) for o in S.domain})
        v, c = (l, r) if lv else (r, l)
        return _Rel((v,), {(c,)} if c in S.domain else set())
    vs: list[Var] = []
    for a in f.args:
        if isinstance(a, Var) and a not in vs:
            vs.append(a)
    pos = [vs.index(a) if isinstance(a, Var) else None for a in f.args]
    rows = set()
    for row in S.rows(f.pred):
        vals = [None] * len(vs)
        ok = True
        for i, (p, v) in enumerate(zip(pos, row)):
            if p is None:
                if f.args[i] != v:
                    ok = False
                    break
            elif vals[p] is None:
                vals[p] = (v,)
            elif vals[p][0] != v:
                ok = False
                break
        if ok:
            rows.add(tuple(x[0] for x in vals))
    return _Rel(vs, rows)


def _eval(f, S: Structure, ctx: _Rel | None = None) -> _Rel:
    """Rows of ``ctx`` (extended by the free variables of ``f``) that satisfy ``f``.

    Evaluating relative to the bindings already known keeps negation an
    antijoin against ``ctx`` instead of a complement over the whole domain.
    """
    if ctx is None:
        ctx = _unit(True)
    if not ctx.rows:
        extra = tuple(v for v in free_vars(f) if v not in ctx.vars)
        return _Rel(ctx.vars + extra, set())
    if isinstance(f, (FAtom, Eq)):
        if isinstance(f, Eq) and all(not isinstance(t, Var) or t in ctx.vars
                                     for t in (f.left, f.right)):
            def val(t, r):
                return r[ctx.vars.index(t)] if isinstance(t, Var) else t
            return _Rel(ctx.vars, {r for r in ctx.rows if val(f.left, r) == val(f.right, r)})
        return _join(ctx, _atom_rel(f, S))
    if isinstance(f, Not):
        fv = free_vars(f.arg)
        missing = tuple(v for v in fv if v not in ctx.vars)
        base = _extend(ctx, ctx.vars + missing, S.domain) if missing else ctx
        inner = _project(_eval(f.arg, S, base), base.vars)
        return _Rel(base.vars, base.rows - inner.rows)
    if isinstance(f, And):
        return _eval_and(f.args, S, ctx)
    if isinstance(f, Or):
        vs = list(ctx.vars)
        for v in free_vars(f):
            if v not in vs:
                vs.append(v)
        rows = set()
        for a in f.args:
            rows |= _extend(_eval(a, S, ctx), tuple(vs), S.domain).rows
        return _Rel(vs, rows)
    if isinstance(f, Exists):
        shadow = [v for v in f.vars if v in ctx.vars]
        outer = tuple(v for v in ctx.vars if v not in f.vars)
        inner_ctx = _project(ctx, outer) if shadow else ctx
        if not S.domain:
            return _Rel(inner_ctx.vars, set())
        r = _eval(f.body, S, inner_ctx)
        keep = tuple(v for v in r.vars if v not in f.vars)
        r = _project(r, keep)
        return _join(ctx, r) if shadow else r
    if isinstance(f, Forall):
        return _eval(Not(Exists(f.vars, Not(f.body))), S, ctx)
    raise TypeError(f"not a formula: {f!r}")


def _eval_and(args, S, ctx: _Rel) -> _Rel:
    atoms = [a for a in args if isinstance(a, (FAtom, Eq))]
    others = [a for a in args if not isinstance(a, (FAtom, Eq, Not))]
    negatives = [a for a in args if isinstance(a, Not)]
    acc = ctx
    rels = [_atom_rel(a, S) for a in atoms]
    rels.sort(key=lambda r: len(r.rows))
    while rels and acc.rows:
        # prefer a relation sharing variables with what we have so far
        pick = next((i for i, r in enumerate(rels) if set(r.vars) & set(acc.vars)), 0)
        acc = _join(acc, rels.pop(pick))
    for r in rels:
        acc = _Rel(acc.vars + tuple(v for v in r.vars if v not in acc.vars), set())
    # remaining conjuncts: those whose variables are already bound go first
    rest = others + negatives
    while rest:
        bound = set(acc.vars)
        pick = next((i for i, a in enumerate(rest) if set(free_vars(a)) <= bound), 0)
        acc = _eval(rest.pop(pick), S, acc)
    return acc


def answers(f, S: Structure, order: Iterable[Var] | None = None) -> set[tuple]:
    """All assignments of ``order`` (default: free variables) satisfying ``f``."""
    order = tuple(free_vars(f) if order is None else order)
    rel = _eval(f, S)
    extra = [v for v in rel.vars if v not in order]
    if extra:
        raise ValueError(f"variables {extra} are free but not requested")
    return _extend(rel, order, S.domain).rows


def holds(f, S: Structure) -> bool:
    return bool(answers(f, S, ()))


def naive_holds(f, S: Structure, env: Mapping | None = None) -> bool:
    """Direct recursive model checking, used as a test oracle."""
    env = env or {}

    def val(t):
        return env[t] if isinstance(t, Var) else t

    if isinstance(f, FAtom):
        return S.holds_atom(f.pred, tuple(val(a) for a in f.args))
    if isinstance(f, Eq):
        return val(f.left) == val(f.right)
    if isinstance(f, Not):
        return not naive_holds(f.arg, S, env)
    if isinstance(f, And):
        return all(naive_holds(a, S, env) for a in f.args)
    if isinstance(f, Or):
        return any(naive_holds(a, S, env) for a in f.args)
    quant = any if isinstance(f, Exists) else all
    return quant(naive_holds(f.body, S, {**env, **dict(zip(f.vars, vals))})
                 for vals in product(sorted(S.domain, key=str), repeat=len(f.vars)))


def format_formula(f) -> str:
    """PDDL-style rendering (used for diagnostics and emission)."""
    def term(t):
        return f"?{t.name}" if isinstance(t, Var) else str(t)

    if isinstance(f, FAtom):
        return "(" + " ".join([f.pred] + [term(a) for a in f.args]) + ")"
    if isinstance(f, Eq):
        return f"(= {term(f.left)} {term(f.right)})"
    if isinstance(f, Not):
        return f"(not {format_formula(f.arg)})"
    if isinstance(f, (And, Or)):
        head = "and" if isinstance(f, And) else "or"
        return "(" + " ".join([head] + [format_formula(a) for a in f.args]) + ")"
    head = "exists" if isinstance(f, Exists) else "forall"
    vs = " ".join(term(v) for v in f.vars)
    return f"({head} ({vs}) {format_formula(f.body)})"
