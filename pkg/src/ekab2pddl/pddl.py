"""PDDL with derived predicates: model, closed-world semantics, text I/O."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from . import formula as fo
from .datalog import Atom, Builtin, DatalogProgram, Literal, Rule, evaluate
from .ontology import Fact, State
from .sexp import Quoted, SExpError, SList, Sym, fail, parse_one
from .terms import Var

REQUIREMENTS = (":adl", ":derived-predicates", ":negative-preconditions",
                ":conditional-effects")
DOM = "@dom"  # internal: the object domain, never emitted


class PDDLError(ValueError):
    pass


@dataclass(frozen=True)
class PEffect:
    vars: tuple
    cond: object
    add: tuple  # (pred, args)
    delete: tuple


def _merge_plain(effects) -> tuple:
    """Canonical effect order: one unconditional parameter-free effect first."""
    plain_add, plain_del, rest = [], [], []
    for e in effects:
        if not e.vars and e.cond == fo.TRUE:
            plain_add += [a for a in e.add if a not in plain_add]
            plain_del += [d for d in e.delete if d not in plain_del]
        else:
            rest.append(e)
    if plain_add or plain_del:
        rest.insert(0, PEffect((), fo.TRUE, tuple(plain_add), tuple(plain_del)))
    return tuple(rest)


@dataclass(frozen=True)
class PAction:
    name: str
    params: tuple
    pre: object
    effects: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "effects", _merge_plain(self.effects))


@dataclass(frozen=True)
class DerivedRule:
    pred: str
    params: tuple
    body: object


@dataclass(frozen=True)
class PDDLDomain:
    name: str
    predicates: tuple  # fluent (name, arity)
    derived: tuple  # derived (name, arity)
    constants: tuple
    actions: tuple
    rules: tuple

    def __post_init__(self):
        object.__setattr__(self, "predicates", tuple(sorted(set(self.predicates))))
        object.__setattr__(self, "derived", tuple(sorted(set(self.derived))))
        object.__setattr__(self, "constants", tuple(sorted(set(self.constants))))
        fl = {p for p, _ in self.predicates}
        dv = {p for p, _ in self.derived}
        if fl & dv:
            raise PDDLError(f"predicates both fluent and derived: {sorted(fl & dv)}")
        for r in self.rules:
            if r.pred not in dv:
                raise PDDLError(f"rule head {r.pred} is not a derived predicate")
        for a in self.actions:
            for e in a.effects:
                for p, _ in e.add + e.delete:
                    if p in dv:
                        raise PDDLError(f"action {a.name} modifies derived predicate {p}")
                    if p not in fl:
                        raise PDDLError(f"action {a.name} modifies undeclared predicate {p}")

    def arity(self, pred):
        for p, k in self.predicates + self.derived:
            if p == pred:
                return k
        return None


@dataclass
class PDDLTask:
    domain: PDDLDomain
    name: str
    objects: tuple
    init: frozenset
    goal: object
    _program: DatalogProgram | None = field(default=None, repr=False, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.objects = tuple(sorted(set(self.objects)))
        self.init = frozenset(Fact(p, tuple(a)) for p, a in self.init)

    def __eq__(self, other):
        return (isinstance(other, PDDLTask) and self.domain == other.domain
                and self.name == other.name and self.objects == other.objects
                and self.init == other.init and self.goal == other.goal)

    @property
    def all_objects(self) -> tuple:
        return tuple(sorted(set(self.objects) | set(self.domain.constants)))

    @property
    def program(self) -> DatalogProgram:
        if self._program is None:
            self._program = rules_to_datalog(self.domain.rules)
        return self._program

    def initial_state(self) -> State:
        return State(self.init, frozenset(self.all_objects))


# -- FO bodies to Datalog ---------------------------------------------------------------


def _flat(body):
    """``exists vs. (and literals)`` -> list of literals, or ``None``."""
    while isinstance(body, fo.Exists):
        body = body.body
    items = body.args if isinstance(body, fo.And) else (body,)
    for it in items:
        inner = it.arg if isinstance(it, fo.Not) else it
        if not isinstance(inner, (fo.FAtom, fo.Eq)):
            return None
    return list(items)


def _bound_vars(lits) -> set:
    bound = {a for it in lits if isinstance(it, fo.FAtom) for a in it.args if isinstance(a, Var)}
    changed = True
    while changed:
        changed = False
        for it in lits:
            if isinstance(it, fo.Eq):
                l, r = it.left, it.right
                for x, y in ((l, r), (r, l)):
                    if isinstance(x, Var) and x not in bound and (not isinstance(y, Var) or y in bound):
                        bound.add(x)
                        changed = True
    return bound


def _lits_to_body(lits, need: set) -> list:
    body = []
    for it in lits:
        if isinstance(it, fo.FAtom):
            body.append(Literal(Atom(it.pred, it.args), True))
        elif isinstance(it, fo.Eq):
            body.append(Builtin("=", it.left, it.right))
        elif isinstance(it.arg, fo.FAtom):
            body.append(Literal(Atom(it.arg.pred, it.arg.args), False))
        else:
            body.append(Builtin("!=", it.arg.left, it.arg.right))
    bound = _bound_vars(lits)
    used = set(need)
    for it in lits:
        used |= set(fo.free_vars(it))
    for v in sorted(used - bound, key=lambda v: v.name):
        body.insert(0, Literal(Atom(DOM, (v,)), True))
    return body


class _Tseitin:
    def __init__(self, prefix):
        self.prefix = prefix
        self.n = 0
        self.rules: list[Rule] = []

    def fresh(self) -> str:
        self.n += 1
        return f"{self.prefix}{self.n}"

    def define(self, pred, head_vars, lits):
        self.rules.append(Rule(Atom(pred, tuple(head_vars)), tuple(_lits_to_body(lits, set(head_vars)))))

    def literal(self, f):
        """A formula usable as a literal, introducing auxiliary predicates if needed."""
        if isinstance(f, (fo.FAtom, fo.Eq)):
            return f
        if isinstance(f, fo.Not):
            inner = self.literal(f.arg)
            return inner.arg if isinstance(inner, fo.Not) else fo.Not(inner)
        vs = tuple(sorted(fo.free_vars(f), key=lambda v: v.name))
        p = self.fresh()
        if isinstance(f, fo.And):
            self.define(p, vs, [self.literal(a) for a in f.args])
        elif isinstance(f, fo.Or):
            for a in f.args:
                self.define(p, vs, [self.literal(a)])
        elif isinstance(f, fo.Exists):
            lits = _flat(f)
            if lits is None:
                lits = [self.literal(f.body)]
            self.define(p, vs, lits)
        elif isinstance(f, fo.Forall):
            return self.literal(fo.Not(fo.Exists(f.vars, fo.Not(f.body))))
        else:
            raise TypeError(f)
        return fo.FAtom(p, vs)


def rules_to_datalog(rules) -> DatalogProgram:
    t = _Tseitin("@aux")
    for r in rules:
        lits = _flat(r.body)
        if lits is None:
            lits = [t.literal(r.body)]
        t.define(r.pred, r.params, lits)
    return DatalogProgram(tuple(t.rules))


# -- semantics ----------------------------------------------------------------------------


def derived_closure(task: PDDLTask, s: State):
    """R(s): the state plus all derived facts (cached per state)."""
    m = task._cache.get(s)
    if m is None:
        base = [(f.pred, f.args) for f in s.facts]
        base += [(DOM, (o,)) for o in task.all_objects]
        m = evaluate(task.program, base)
        if len(task._cache) > 20000:
            task._cache.clear()
        task._cache[s] = m
    return m


def structure(task: PDDLTask, s: State) -> fo.Structure:
    return fo.Structure(task.all_objects, derived_closure(task, s))


@dataclass(frozen=True, order=True)
class PGround:
    name: str
    args: tuple
    action: PAction = field(compare=False, repr=False)

    def __str__(self):
        return "(" + " ".join((self.name,) + self.args) + ")"


def pddl_ground(task: PDDLTask, name: str, args) -> PGround:
    for a in task.domain.actions:
        if a.name == name:
            if len(args) != len(a.params):
                raise PDDLError(f"{name} takes {len(a.params)} arguments")
            return PGround(name, tuple(args), a)
    raise PDDLError(f"unknown action {name}")


def pddl_applicable(task: PDDLTask, s: State, g: PGround) -> bool:
    theta = dict(zip(g.action.params, g.args))
    return fo.holds(fo.substitute(g.action.pre, theta), structure(task, s))


def pddl_apply(task: PDDLTask, s: State, g: PGround) -> State:
    S = structure(task, s)
    theta = dict(zip(g.action.params, g.args))
    adds, dels = set(), set()
    for e in g.action.effects:
        cond = fo.substitute(e.cond, theta)
        rows = fo.answers(cond, S, e.vars) if e.vars or cond != fo.TRUE else {()}
        for vals in rows:
            sub = {**theta, **dict(zip(e.vars, vals))}
            for p, args in e.add:
                adds.add(Fact(p, tuple(sub.get(t, t) for t in args)))
            for p, args in e.delete:
                dels.add(Fact(p, tuple(sub.get(t, t) for t in args)))
    return State(frozenset((s.facts - dels) | adds), s.base)


def pddl_goal_holds(task: PDDLTask, s: State) -> bool:
    return fo.holds(task.goal, structure(task, s))


def pddl_plan_valid(task: PDDLTask, plan) -> bool:
    s = task.initial_state()
    for g in plan:
        if not pddl_applicable(task, s, g):
            return False
        s = pddl_apply(task, s, g)
    return pddl_goal_holds(task, s)


def pddl_successors(task: PDDLTask, s: State):
    S = structure(task, s)
    out = []
    for a in task.domain.actions:
        for args in fo.answers(a.pre, S, a.params):
            g = PGround(a.name, args, a)
            out.append((g, pddl_apply(task, s, g)))
    out.sort(key=lambda x: (x[0].name, x[0].args))
    return out


def pddl_bfs_plan(task: PDDLTask, max_depth: int, *, max_states: int = 200_000):
    from .ekab import SearchLimit
    s0 = task.initial_state()
    if pddl_goal_holds(task, s0):
        return []
    parent = {s0: (None, None)}
    frontier = deque([(s0, 0)])
    while frontier:
        s, d = frontier.popleft()
        if d >= max_depth:
            continue
        for g, t in pddl_successors(task, s):
            if t in parent:
                continue
            parent[t] = (s, g)
            if len(parent) > max_states:
                raise SearchLimit(f"more than {max_states} states")
            if pddl_goal_holds(task, t):
                plan = []
                while parent[t][0] is not None:
                    t, g2 = parent[t]
                    plan.append(g2)
                return plan[::-1]
            frontier.append((t, d + 1))
    return None


# -- text -----------------------------------------------------------------------------------


def _name_ok(name: str) -> bool:
    return bool(name) and name[0].isalpha() and all(c.isalnum() or c in "-_" for c in name)


def check_names(task: PDDLTask) -> None:
    """PDDL names are case-insensitive; refuse anything that would collide or not parse."""
    groups = {
        "predicate": [p for p, _ in task.domain.predicates + task.domain.derived],
        "object": list(task.all_objects),
        "action": [a.name for a in task.domain.actions],
    }
    for kind, names in groups.items():
        seen: dict[str, str] = {}
        for n in names:
            if not _name_ok(n):
                raise PDDLError(f"{kind} name {n!r} cannot be written as PDDL")
            prev = seen.setdefault(n.lower(), n)
            if prev != n:
                raise PDDLError(f"{kind} names {prev!r} and {n!r} collide in PDDL")


def _t(x):
    return f"?{x.name}" if isinstance(x, Var) else x


def _atom_text(p, args):
    return "(" + " ".join((p,) + tuple(_t(a) for a in args)) + ")"


def _lits_text(add, dele):
    return [_atom_text(p, a) for p, a in add] + [f"(not {_atom_text(p, a)})" for p, a in dele]


def _effect_text(effects) -> str:
    parts = []
    for e in effects:
        lits = _lits_text(e.add, e.delete)
        if not e.vars and e.cond == fo.TRUE:
            parts += lits
            continue
        inner = lits[0] if len(lits) == 1 else "(and" + "".join(" " + x for x in lits) + ")"
        txt = f"(when {fo.format_formula(e.cond)} {inner})"
        if e.vars:
            txt = "(forall (" + " ".join(_t(v) for v in e.vars) + f") {txt})"
        parts.append(txt)
    return "(and" + "".join(" " + p for p in parts) + ")"


def emit_pddl(task: PDDLTask) -> tuple[str, str]:
    check_names(task)
    d = task.domain
    out = [f"(define (domain {d.name})",
           "  (:requirements " + " ".join(REQUIREMENTS) + ")"]
    if d.constants:
        out.append("  (:constants " + " ".join(d.constants) + ")")
    preds = sorted(d.predicates + d.derived)
    out.append("  (:predicates")
    for p, k in preds:
        out.append("    " + _atom_text(p, tuple(Var(f"x{i}") for i in range(k))))
    out.append("  )")
    for r in d.rules:
        out.append(f"  (:derived {_atom_text(r.pred, r.params)}")
        out.append(f"    {fo.format_formula(r.body)})")
    for a in d.actions:
        out.append(f"  (:action {a.name}")
        out.append("    :parameters (" + " ".join(_t(v) for v in a.params) + ")")
        out.append(f"    :precondition {fo.format_formula(a.pre)}")
        out.append(f"    :effect {_effect_text(a.effects)})")
    out.append(")")
    prob = [f"(define (problem {task.name})", f"  (:domain {d.name})"]
    prob.append("  (:objects" + "".join(" " + o for o in task.objects) + ")")
    prob.append("  (:init")
    for f in sorted(task.init):
        prob.append("    " + _atom_text(f.pred, f.args))
    prob.append("  )")
    prob.append(f"  (:goal {fo.format_formula(task.goal)})")
    prob.append(")")
    return "\n".join(out) + "\n", "\n".join(prob) + "\n"


def _sym(node, what):
    if not isinstance(node, Sym) or isinstance(node, Quoted):
        fail(node, f"expected {what}")
    return str(node)


def _vars(node):
    if not isinstance(node, SList):
        fail(node, "expected a variable list")
    out = []
    for t in node:
        if not isinstance(t, Sym) or not t.startswith("?"):
            fail(t, "expected a variable")
        out.append(Var(str(t[1:])))
    return tuple(out)


def _term(t):
    if not isinstance(t, Sym):
        fail(t, "expected a term")
    return Var(str(t[1:])) if t.startswith("?") else str(t)


def _patom(node):
    if not isinstance(node, SList) or not node or not isinstance(node[0], Sym):
        fail(node, "expected an atom")
    return str(node[0]), tuple(_term(t) for t in node[1:])


def parse_formula(node):
    if not isinstance(node, SList) or not node:
        if isinstance(node, SList):
            fail(node, "empty formula")
        fail(node, "expected a formula")
    head = node[0].lower() if isinstance(node[0], Sym) else None
    if head == "and":
        return fo.And(tuple(parse_formula(a) for a in node[1:]))
    if head == "or":
        return fo.Or(tuple(parse_formula(a) for a in node[1:]))
    if head == "not":
        if len(node) != 2:
            fail(node, "(not F)")
        return fo.Not(parse_formula(node[1]))
    if head == "imply":
        if len(node) != 3:
            fail(node, "(imply A B)")
        return fo.Or((fo.Not(parse_formula(node[1])), parse_formula(node[2])))
    if head in ("exists", "forall"):
        if len(node) != 3:
            fail(node, f"({head} (vars) F)")
        cls = fo.Exists if head == "exists" else fo.Forall
        return cls(_vars(node[1]), parse_formula(node[2]))
    if head == "=":
        if len(node) != 3:
            fail(node, "(= a b)")
        return fo.Eq(_term(node[1]), _term(node[2]))
    p, args = _patom(node)
    return fo.FAtom(p, args)


def _parse_literals(node):
    items = node[1:] if isinstance(node, SList) and node and node[0] == "and" else [node]
    add, dele = [], []
    for it in items:
        if isinstance(it, SList) and it and it[0] == "not":
            dele.append(_patom(it[1]))
        else:
            add.append(_patom(it))
    return tuple(add), tuple(dele)


def _parse_effects(node):
    items = node[1:] if isinstance(node, SList) and node and node[0] == "and" else [node]
    out = []
    for it in items:
        if not isinstance(it, SList) or not it:
            fail(it, "expected an effect")
        vs: tuple = ()
        if it[0] == "forall":
            vs = _vars(it[1])
            it = it[2]
        if isinstance(it, SList) and it and it[0] == "when":
            add, dele = _parse_literals(it[2])
            out.append(PEffect(vs, parse_formula(it[1]), add, dele))
        else:
            add, dele = _parse_literals(it)
            out.append(PEffect(vs, fo.TRUE, add, dele))
    return tuple(out)


def parse_pddl(domain_text: str, problem_text: str) -> PDDLTask:
    try:
        dom = parse_one(domain_text)
        prob = parse_one(problem_text)
        if not (isinstance(dom, SList) and len(dom) >= 2 and dom[0] == "define"
                and isinstance(dom[1], SList) and len(dom[1]) == 2 and dom[1][0] == "domain"):
            fail(dom, "expected (define (domain NAME) ...)")
        dname = _sym(dom[1][1], "a domain name")
        preds, consts, actions, rules = [], [], [], []
        for sec in dom[2:]:
            if not isinstance(sec, SList) or not sec:
                fail(sec, "expected a section")
            key = str(sec[0]).lower()
            if key == ":requirements":
                for r in sec[1:]:
                    if str(r).lower() not in REQUIREMENTS:
                        fail(r, f"unsupported requirement {r}")
            elif key == ":constants":
                consts += [_sym(c, "a constant") for c in sec[1:]]
            elif key == ":predicates":
                for p in sec[1:]:
                    name, args = _patom(p)
                    preds.append((name, len(args)))
            elif key == ":derived":
                name, args = _patom(sec[1])
                rules.append(DerivedRule(name, args, parse_formula(sec[2])))
            elif key == ":action":
                name = _sym(sec[1], "an action name")
                opts = {str(sec[i]).lower(): sec[i + 1] for i in range(2, len(sec) - 1, 2)}
                unknown = set(opts) - {":parameters", ":precondition", ":effect"}
                if unknown or len(sec) % 2:
                    fail(sec, "malformed action")
                actions.append(PAction(
                    name, _vars(opts.get(":parameters", SList())),
                    parse_formula(opts[":precondition"]) if ":precondition" in opts else fo.TRUE,
                    _parse_effects(opts[":effect"]) if ":effect" in opts else ()))
            else:
                fail(sec, f"unsupported domain section {sec[0]}")
        derived_names = {r.pred for r in rules}
        domain = PDDLDomain(dname, tuple(p for p in preds if p[0] not in derived_names),
                            tuple(p for p in preds if p[0] in derived_names), tuple(consts),
                            tuple(actions), tuple(rules))
        if not (isinstance(prob, SList) and len(prob) >= 2 and prob[0] == "define"
                and isinstance(prob[1], SList) and len(prob[1]) == 2 and prob[1][0] == "problem"):
            fail(prob, "expected (define (problem NAME) ...)")
        pname = _sym(prob[1][1], "a problem name")
        objects, init, goal = [], [], fo.TRUE
        for sec in prob[2:]:
            if not isinstance(sec, SList) or not sec:
                fail(sec, "expected a section")
            key = str(sec[0]).lower()
            if key == ":domain":
                if str(sec[1]) != dname:
                    fail(sec[1], f"problem refers to domain {sec[1]}, not {dname}")
            elif key == ":objects":
                objects += [_sym(o, "an object") for o in sec[1:]]
            elif key == ":init":
                init += [_patom(f) for f in sec[1:]]
            elif key == ":goal":
                goal = parse_formula(sec[1])
            else:
                fail(sec, f"unsupported problem section {sec[0]}")
    except SExpError as e:
        raise PDDLError(str(e)) from None
    return PDDLTask(domain, pname, tuple(objects), frozenset(init), goal)


__all__ = ["PAction", "PEffect", "DerivedRule", "PDDLDomain", "PDDLTask", "PGround",
           "PDDLError", "REQUIREMENTS", "derived_closure", "pddl_applicable", "pddl_apply",
           "pddl_plan_valid", "pddl_bfs_plan", "pddl_successors", "pddl_ground",
           "emit_pddl", "parse_pddl", "rules_to_datalog", "check_names", "parse_formula"]
