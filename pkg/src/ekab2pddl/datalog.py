"""Stratified Datalog with negation: programs, stratification, semi-naive evaluation.

Terms are :class:`~ekab2pddl.terms.Var` instances or constants (``str`` or
``int``).  Built-in literals compare two terms with ``=``, ``!=``, ``<=`` or
``<``; an ``=`` literal with exactly one unbound variable binds it.
"""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Mapping

import networkx as nx

from .terms import Var

log = logging.getLogger(__name__)

DEFAULT_CAPACITY = 5_000_000
BUILTIN_OPS = ("=", "!=", "<=", "<")


class DatalogError(ValueError):
    pass


class UnsafeRule(DatalogError):
    pass


class NotStratified(DatalogError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("negation inside a recursive cycle: " + " -> ".join(cycle))


class CapacityError(DatalogError):
    pass


@dataclass(frozen=True)
class Atom:
    pred: str
    args: tuple = ()

    def vars(self):
        return [a for a in self.args if isinstance(a, Var)]

    def __str__(self):
        if not self.args:
            # an upper-case nullary atom would read back as a variable
            return self.pred if self.pred[0].islower() else self.pred + "()"
        return f"{self.pred}({', '.join(_fmt_term(a) for a in self.args)})"


@dataclass(frozen=True)
class Literal:
    atom: Atom
    positive: bool = True

    def vars(self):
        return self.atom.vars()

    def __str__(self):
        return str(self.atom) if self.positive else f"not {self.atom}"


@dataclass(frozen=True)
class Builtin:
    op: str
    left: object
    right: object

    def __post_init__(self):
        if self.op not in BUILTIN_OPS:
            raise DatalogError(f"unknown builtin {self.op!r}")

    def vars(self):
        return [t for t in (self.left, self.right) if isinstance(t, Var)]

    def __str__(self):
        return f"{_fmt_term(self.left)} {self.op} {_fmt_term(self.right)}"


def pos(pred: str, *args) -> Literal:
    return Literal(Atom(pred, tuple(args)), True)


def neg(pred: str, *args) -> Literal:
    return Literal(Atom(pred, tuple(args)), False)


@dataclass(frozen=True)
class Rule:
    head: Atom
    body: tuple = ()

    def check_safe(self) -> None:
        bound = {v for lit in self.body if isinstance(lit, Literal) and lit.positive
                 for v in lit.vars()}
        changed = True
        while changed:
            changed = False
            for b in self.body:
                if isinstance(b, Builtin) and b.op == "=":
                    vs = b.vars()
                    unbound = [v for v in vs if v not in bound]
                    if len(unbound) == 1 and (len(vs) == 1 or len(unbound) < len(vs)):
                        bound.add(unbound[0])
                        changed = True
        for v in self.head.vars():
            if v not in bound:
                raise UnsafeRule(f"head variable {v} not range-restricted in: {self}")
        for b in self.body:
            if isinstance(b, Literal) and b.positive:
                continue
            for v in b.vars():
                if v not in bound:
                    raise UnsafeRule(f"variable {v} of '{b}' is unbound in: {self}")

    def __str__(self):
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(b) for b in self.body)}."


def rules_with_heads(heads: Iterable[Atom], body) -> list[Rule]:
    """Desugar a conjunctive head into one rule per head atom."""
    return [Rule(h, tuple(body)) for h in heads]


@dataclass(frozen=True)
class DatalogProgram:
    rules: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))

    @cached_property
    def arities(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rules:
            for a in [r.head] + [b.atom for b in r.body if isinstance(b, Literal)]:
                k = out.setdefault(a.pred, len(a.args))
                if k != len(a.args):
                    raise DatalogError(f"predicate {a.pred} used with arities {k} and {len(a.args)}")
        return out

    @cached_property
    def constants(self) -> frozenset:
        out = set()
        for r in self.rules:
            for a in [r.head] + [b.atom for b in r.body if isinstance(b, Literal)]:
                out.update(t for t in a.args if not isinstance(t, Var))
            for b in r.body:
                if isinstance(b, Builtin):
                    out.update(t for t in (b.left, b.right) if not isinstance(t, Var))
        return frozenset(out)

    @property
    def predicates(self) -> frozenset:
        return frozenset(self.arities)

    @cached_property
    def idb(self) -> frozenset:
        return frozenset(r.head.pred for r in self.rules)

    def max_arity(self) -> int:
        return max(self.arities.values(), default=0)

    def __add__(self, other: "DatalogProgram") -> "DatalogProgram":
        return DatalogProgram(self.rules + other.rules)

    def text(self) -> str:
        return "".join(str(r) + "\n" for r in self.rules)

    @cached_property
    def _compiled(self) -> "_Evaluator":
        return _Evaluator(self)


# -- stratification -------------------------------------------------------------------


def dependency_graph(program: DatalogProgram) -> nx.DiGraph:
    g = nx.DiGraph()
    for r in program.rules:
        h = r.head.pred
        g.add_node(h)
        for b in r.body:
            if isinstance(b, Literal):
                p = b.atom.pred
                g.add_node(p)
                negative = not b.positive or g.get_edge_data(p, h, {}).get("negative", False)
                g.add_edge(p, h, negative=negative)
    return g


def check_stratification(program: DatalogProgram) -> dict[str, int]:
    """Minimal stratum level per predicate; raises NotStratified with a cycle."""
    g = dependency_graph(program)
    cond = nx.condensation(g)
    members = cond.graph["mapping"]
    for u, v, d in g.edges(data=True):
        if d["negative"] and members[u] == members[v]:
            path = nx.shortest_path(g, v, u) if u != v else [u]
            raise NotStratified([u] + path)
    level = {}
    for c in nx.topological_sort(cond):
        lv = 0
        for w in cond.nodes[c]["members"]:
            for u, _, d in g.in_edges(w, data=True):
                p = members[u]
                if p != c:
                    lv = max(lv, level[p] + (1 if d["negative"] else 0))
        level[c] = lv
    return {pred: level[members[pred]] for pred in g.nodes}


# -- evaluation ----------------------------------------------------------------------


class HerbrandModel(Mapping):
    """Immutable mapping predicate -> frozenset of argument tuples."""

    def __init__(self, relations: dict[str, frozenset]):
        self._rel = relations

    def __getitem__(self, pred):
        return self._rel[pred]

    def __iter__(self):
        return iter(self._rel)

    def __len__(self):
        return len(self._rel)

    def get(self, pred, default=frozenset()):
        return self._rel.get(pred, default)

    def holds(self, pred: str, args: tuple = ()) -> bool:
        return tuple(args) in self._rel.get(pred, ())

    def facts(self):
        for p in sorted(self._rel):
            for args in sorted(self._rel[p], key=_sort_key):
                yield p, args

    def size(self) -> int:
        return sum(len(v) for v in self._rel.values())

    def __eq__(self, other):
        if not isinstance(other, HerbrandModel):
            return NotImplemented
        a = {p: v for p, v in self._rel.items() if v}
        b = {p: v for p, v in other._rel.items() if v}
        return a == b

    def __repr__(self):
        return f"HerbrandModel({self.size()} facts)"


def query_model(model: HerbrandModel, pred: str) -> frozenset:
    return model.get(pred, frozenset())


def evaluate(program: DatalogProgram, base: Iterable = (), *,
             capacity: int = DEFAULT_CAPACITY) -> HerbrandModel:
    """Least stratified model of ``base`` under ``program``.

    ``base`` holds ``(pred, args)`` pairs.
    """
    return program._compiled.run(base, capacity)


class _Plan:
    """A compiled join order for one rule, optionally seeded by a delta literal."""

    __slots__ = ("steps", "head_pred", "head", "nslots")

    def __init__(self, rule: Rule, delta_index: int | None):
        slots: dict[Var, int] = {}
        bound: set[Var] = set()

        def term(t):
            return (0, slots[t]) if isinstance(t, Var) else (1, t)

        def slot(v):
            if v not in slots:
                slots[v] = len(slots)
            return slots[v]

        body = list(enumerate(rule.body))
        pending_pos = [(i, b) for i, b in body if isinstance(b, Literal) and b.positive]
        pending_other = [(i, b) for i, b in body if not (isinstance(b, Literal) and b.positive)]
        steps = []

        def scan(i, lit, use_delta):
            keys, binds, checks = [], [], []
            local = set()
            for p, t in enumerate(lit.atom.args):
                if not isinstance(t, Var):
                    keys.append((p, (1, t)))
                elif t in bound:
                    keys.append((p, (0, slots[t])))
                elif t in local:
                    checks.append((p, slots[t]))
                else:
                    local.add(t)
                    binds.append((p, slot(t)))
            bound.update(local)
            steps.append(("scan", lit.atom.pred, use_delta, tuple(k[0] for k in keys),
                          tuple(k[1] for k in keys), tuple(binds), tuple(checks)))

        def flush():
            progress = True
            while progress:
                progress = False
                for item in list(pending_other):
                    i, b = item
                    if isinstance(b, Builtin):
                        vs = b.vars()
                        unbound = [v for v in vs if v not in bound]
                        if not unbound:
                            steps.append(("test", b.op, term(b.left), term(b.right)))
                        elif b.op == "=" and len(unbound) == 1 and len(set(vs)) == len(vs):
                            v = unbound[0]
                            other = b.right if b.left == v else b.left
                            steps.append(("assign", slot(v), term(other)))
                            bound.add(v)
                        else:
                            continue
                    else:
                        if any(v not in bound for v in b.vars()):
                            continue
                        steps.append(("neg", b.atom.pred,
                                      tuple(term(t) for t in b.atom.args)))
                    pending_other.remove(item)
                    progress = True

        if delta_index is not None:
            item = next(x for x in pending_pos if x[0] == delta_index)
            pending_pos.remove(item)
            scan(item[0], item[1], True)
        flush()
        while pending_pos:
            def score(item):
                args = item[1].atom.args
                nb = sum(1 for t in args if not isinstance(t, Var) or t in bound)
                return (nb > 0, nb - 0.01 * len(args))
            item = max(pending_pos, key=score)
            pending_pos.remove(item)
            scan(item[0], item[1], False)
            flush()
        if pending_other:
            raise UnsafeRule(f"cannot order body of: {rule}")
        for v in rule.head.vars():
            if v not in bound:
                raise UnsafeRule(f"head variable {v} unbound in: {rule}")
        self.steps = steps
        self.head_pred = rule.head.pred
        self.head = tuple(term(t) for t in rule.head.args)
        self.nslots = len(slots)


_CMP = {
    "=": lambda a, b: a == b,
    "!=": lambda a, b: a != b,
    "<=": lambda a, b: type(a) is type(b) and a <= b,
    "<": lambda a, b: type(a) is type(b) and a < b,
}


class _Relations:
    """Full relations with lazily built hash indexes."""

    def __init__(self):
        self.rows: dict[str, set] = {}
        self.index: dict[tuple, dict] = {}
        self.by_pred: dict[str, list] = {}

    def rel(self, pred):
        r = self.rows.get(pred)
        if r is None:
            r = self.rows[pred] = set()
        return r

    def lookup(self, pred, positions, key):
        idx = self.index.get((pred, positions))
        if idx is None:
            idx = {}
            for row in self.rows.get(pred, ()):
                idx.setdefault(tuple(row[p] for p in positions), []).append(row)
            self.index[(pred, positions)] = idx
            self.by_pred.setdefault(pred, []).append(positions)
        return idx.get(key, ())

    def add_all(self, pred, rows):
        r = self.rel(pred)
        r.update(rows)
        for positions in self.by_pred.get(pred, ()):
            idx = self.index[(pred, positions)]
            for row in rows:
                idx.setdefault(tuple(row[p] for p in positions), []).append(row)


class _Evaluator:
    def __init__(self, program: DatalogProgram):
        for r in program.rules:
            r.check_safe()
        program.arities  # arity consistency
        self.levels = check_stratification(program)
        strata: dict[int, list[Rule]] = {}
        for r in program.rules:
            strata.setdefault(self.levels[r.head.pred], []).append(r)
        self.strata = []
        for lv in sorted(strata):
            rules = strata[lv]
            heads = {r.head.pred for r in rules}
            first = [_Plan(r, None) for r in rules]
            delta = []
            for r in rules:
                for i, b in enumerate(r.body):
                    if isinstance(b, Literal) and b.positive and b.atom.pred in heads:
                        delta.append((b.atom.pred, _Plan(r, i)))
            self.strata.append((lv, heads, first, delta))

    def run(self, base, capacity):
        rels = _Relations()
        grouped: dict[str, set] = {}
        for p, args in base:
            grouped.setdefault(p, set()).add(tuple(args))
        for p, rows in grouped.items():
            rels.add_all(p, rows)
        budget = [capacity]
        for lv, heads, first, delta_plans in self.strata:
            new: dict[str, set] = {}
            for plan in first:
                self._exec(plan, rels, None, new)
            while True:
                delta = {}
                for p, rows in new.items():
                    rows = rows - rels.rel(p)
                    if rows:
                        delta[p] = rows
                if not delta:
                    break
                total = sum(len(v) for v in delta.values())
                budget[0] -= total
                if budget[0] < 0:
                    raise CapacityError(f"more than {capacity} derived facts")
                for p, rows in delta.items():
                    rels.add_all(p, rows)
                new = {}
                for p, plan in delta_plans:
                    if p in delta:
                        self._exec(plan, rels, delta[p], new)
        return HerbrandModel({p: frozenset(r) for p, r in rels.rows.items()})

    @staticmethod
    def _exec(plan: _Plan, rels: _Relations, delta, out):
        steps = plan.steps
        n = len(steps)
        env = [None] * plan.nslots
        head = plan.head
        sink = out.setdefault(plan.head_pred, set())
        delta_index: dict = {}

        def go(i):
            if i == n:
                sink.add(tuple(env[v] if k == 0 else v for k, v in head))
                return
            st = steps[i]
            kind = st[0]
            if kind == "scan":
                _, pred, use_delta, kpos, ksrc, binds, checks = st
                key = tuple(env[v] if k == 0 else v for k, v in ksrc)
                if use_delta:
                    if kpos:
                        idx = delta_index.get(kpos)
                        if idx is None:
                            idx = delta_index[kpos] = {}
                            for row in delta:
                                idx.setdefault(tuple(row[p] for p in kpos), []).append(row)
                        rows = idx.get(key, ())
                    else:
                        rows = delta
                elif kpos:
                    rows = rels.lookup(pred, kpos, key)
                else:
                    rows = rels.rows.get(pred, ())
                for row in rows:
                    for p, s in binds:
                        env[s] = row[p]
                    ok = True
                    for p, s in checks:
                        if row[p] != env[s]:
                            ok = False
                            break
                    if ok:
                        go(i + 1)
            elif kind == "test":
                _, op, a, b = st
                va = env[a[1]] if a[0] == 0 else a[1]
                vb = env[b[1]] if b[0] == 0 else b[1]
                if _CMP[op](va, vb):
                    go(i + 1)
            elif kind == "assign":
                _, s, t = st
                env[s] = env[t[1]] if t[0] == 0 else t[1]
                go(i + 1)
            else:
                _, pred, terms = st
                row = tuple(env[v] if k == 0 else v for k, v in terms)
                if row not in rels.rows.get(pred, ()):
                    go(i + 1)

        go(0)


def naive_evaluate(program: DatalogProgram, base: Iterable = ()) -> HerbrandModel:
    """Reference evaluator: apply every rule of a stratum until nothing changes."""
    levels = check_stratification(program)
    facts: dict[str, set] = {}
    for p, args in base:
        facts.setdefault(p, set()).add(tuple(args))
    for lv in sorted(set(levels.values())):
        rules = [r for r in program.rules if levels[r.head.pred] == lv]
        changed = True
        while changed:
            changed = False
            for r in rules:
                for env in _naive_matches(list(r.body), {}, facts):
                    row = tuple(env[t] if isinstance(t, Var) else t for t in r.head.args)
                    rel = facts.setdefault(r.head.pred, set())
                    if row not in rel:
                        rel.add(row)
                        changed = True
    return HerbrandModel({p: frozenset(v) for p, v in facts.items()})


def _naive_matches(body, env, facts):
    positives = [b for b in body if isinstance(b, Literal) and b.positive]
    rest = [b for b in body if not (isinstance(b, Literal) and b.positive)]
    for e in _naive_join(positives, 0, env, facts):
        e = _naive_filter(rest, e, facts)
        if e is not None:
            yield e


def _naive_join(lits, i, env, facts):
    if i == len(lits):
        yield env
        return
    atom = lits[i].atom
    for row in list(facts.get(atom.pred, ())):
        e = dict(env)
        for t, v in zip(atom.args, row):
            if isinstance(t, Var):
                if e.setdefault(t, v) != v:
                    break
            elif t != v:
                break
        else:
            yield from _naive_join(lits, i + 1, e, facts)


def _naive_filter(rest, env, facts):
    env = dict(env)
    todo = list(rest)
    while todo:
        for b in todo:
            if isinstance(b, Builtin):
                vals = [env.get(t, t) if isinstance(t, Var) else t for t in (b.left, b.right)]
                free = [isinstance(v, Var) for v in vals]
                if not any(free):
                    if not _CMP[b.op](*vals):
                        return None
                elif b.op == "=" and sum(free) == 1:
                    env[vals[0] if free[0] else vals[1]] = vals[1] if free[0] else vals[0]
                else:
                    continue
            else:
                if any(v not in env for v in b.vars()):
                    continue
                row = tuple(env[t] if isinstance(t, Var) else t for t in b.atom.args)
                if row in facts.get(b.atom.pred, ()):
                    return None
            todo.remove(b)
            break
        else:
            raise UnsafeRule("unorderable body")
    return env


# -- text format ---------------------------------------------------------------------

_PLAIN = re.compile(r"[a-z][A-Za-z0-9_]*\Z")
_TOKEN = re.compile(
    r'\s+|%[^\n]*|:-|!=|<=|<|=|\(|\)|,|\.|"(?:[^"\\]|\\.)*"|-?\d+|[A-Za-z_][A-Za-z0-9_\-]*')


def _fmt_term(t) -> str:
    if isinstance(t, Var):
        return t.name
    if isinstance(t, int):
        return str(t)
    if _PLAIN.match(t) and t != "not":
        return t
    return '"' + t.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _sort_key(args):
    return tuple((0, a, "") if isinstance(a, int) else (1, 0, a) for a in args)


def format_fact(pred: str, args: tuple) -> str:
    return str(Atom(pred, tuple(args))) + "."


def dump_model(model: HerbrandModel) -> str:
    lines = sorted(format_fact(p, a) for p, a in model.facts())
    return "".join(line + "\n" for line in lines)


def parse_program(text: str) -> DatalogProgram:
    toks = []
    line = 1
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise DatalogError(f"line {line}: unexpected character {text[pos]!r}")
        t = m.group(0)
        if not (t[0].isspace() or t[0] == "%"):
            toks.append((t, line))
        line += t.count("\n")
        pos = m.end()
    rules = []
    i = 0

    def expect(s):
        nonlocal i
        if i >= len(toks) or toks[i][0] != s:
            got = toks[i][0] if i < len(toks) else "end of input"
            ln = toks[i][1] if i < len(toks) else line
            raise DatalogError(f"line {ln}: expected {s!r}, got {got!r}")
        i += 1

    def term():
        nonlocal i
        t, ln = toks[i]
        i += 1
        if t.startswith('"'):
            return t[1:-1].replace('\\"', '"').replace("\\\\", "\\")
        if re.match(r"-?\d+\Z", t):
            return int(t)
        if t[0].isupper() or t[0] == "_":
            return Var(t)
        if re.match(r"[a-z]", t):
            return t
        raise DatalogError(f"line {ln}: bad term {t!r}")

    def atom():
        nonlocal i
        t, ln = toks[i]
        if not re.match(r"[A-Za-z_][A-Za-z0-9_\-]*\Z", t) or t == "not":
            raise DatalogError(f"line {ln}: bad predicate {t!r}")
        i += 1
        args = []
        if i < len(toks) and toks[i][0] == "(":
            i += 1
            if toks[i][0] != ")":
                args.append(term())
                while toks[i][0] == ",":
                    i += 1
                    args.append(term())
            expect(")")
        return Atom(t, tuple(args))

    def body_item():
        nonlocal i
        if toks[i][0] == "not" and i + 1 < len(toks) and toks[i + 1][0] not in ("(", ",", "."):
            i += 1
            return Literal(atom(), False)
        if i + 1 < len(toks) and toks[i + 1][0] in BUILTIN_OPS:
            left = term()
            op = toks[i][0]
            i += 1
            return Builtin(op, left, term())
        if i + 1 < len(toks) and toks[i + 1][0] == "(":
            return Literal(atom(), True)
        if toks[i][0][0].isupper() or toks[i][0][0] in '"-0123456789':
            left = term()
            op = toks[i][0]
            if op not in BUILTIN_OPS:
                raise DatalogError(f"line {toks[i][1]}: expected comparison")
            i += 1
            return Builtin(op, left, term())
        return Literal(atom(), True)

    try:
        while i < len(toks):
            head = atom()
            body = []
            if toks[i][0] == ":-":
                i += 1
                body.append(body_item())
                while toks[i][0] == ",":
                    i += 1
                    body.append(body_item())
            expect(".")
            rules.append(Rule(head, tuple(body)))
    except IndexError:
        raise DatalogError("unexpected end of input") from None
    return DatalogProgram(tuple(rules))


def parse_facts(text: str) -> list[tuple[str, tuple]]:
    prog = parse_program(text)
    out = []
    for r in prog.rules:
        if r.body or r.head.vars():
            raise DatalogError(f"not a ground fact: {r}")
        out.append((r.head.pred, r.head.args))
    return out
