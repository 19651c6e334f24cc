"""eKAB tasks and their open-world reference interpreter."""
from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field

from . import ecq as Q
from . import formula as fo
from .ontology import (Fact, OntologyError, Signature, State, StateError, TBox, format_ontology,
                       parse_ontology, validate_state)
from .sexp import Quoted, SExpError, SList, Sym, fail, parse_one
from .terms import Var, is_reserved


class TaskError(ValueError):
    pass


class SearchLimit(RuntimeError):
    pass


@dataclass(frozen=True)
class DLEffect:
    vars: tuple
    cond: object
    add: tuple  # of (pred, args) with args constants or Vars
    delete: tuple

    def free_vars(self) -> set:
        out = set(Q.free_vars(self.cond))
        for _, args in self.add + self.delete:
            out |= {a for a in args if isinstance(a, Var)}
        return out - set(self.vars)


@dataclass(frozen=True)
class DLAction:
    name: str
    params: tuple
    pre: object
    effects: tuple = ()

    def __post_init__(self):
        if len(set(self.params)) != len(self.params):
            raise TaskError(f"action {self.name}: repeated parameter")
        extra = set(Q.free_vars(self.pre)) - set(self.params)
        if extra:
            raise TaskError(f"action {self.name}: precondition variables "
                            f"{sorted(v.name for v in extra)} are not parameters")
        for e in self.effects:
            extra = e.free_vars() - set(self.params)
            if extra:
                raise TaskError(f"action {self.name}: effect variables "
                                f"{sorted(v.name for v in extra)} are not bound")


@dataclass(frozen=True, order=True)
class GroundAction:
    name: str
    args: tuple
    action: DLAction = field(compare=False, repr=False)

    @property
    def theta(self) -> dict:
        return dict(zip(self.action.params, self.args))

    def __str__(self):
        return "(" + " ".join((self.name,) + self.args) + ")"


def _closed_atoms(q):
    if isinstance(q, Q.ClosedAtom):
        if q.pred != "=":
            yield q
    elif isinstance(q, Q.Not):
        yield from _closed_atoms(q.arg)
    elif isinstance(q, Q.And):
        for a in q.args:
            yield from _closed_atoms(a)
    elif isinstance(q, Q.Exists):
        yield from _closed_atoms(q.body)


def _action_constants(actions) -> set:
    out: set = set()
    for a in actions:
        out |= Q.constants(a.pre)
        for e in a.effects:
            out |= Q.constants(e.cond)
            for _, args in e.add + e.delete:
                out |= {t for t in args if not isinstance(t, Var)}
    return out


@dataclass
class EKABTask:
    name: str
    tbox: TBox
    predicates: tuple  # (name, arity) of every state predicate
    actions: tuple
    objects: tuple
    init: State
    goal: object
    ontology_file: str | None = None

    def __post_init__(self):
        self.objects = tuple(dict.fromkeys(
            tuple(self.objects) + tuple(sorted(self.init.objects))
            + tuple(sorted(self.tbox.individuals())) + tuple(sorted(Q.constants(self.goal)))
            + tuple(sorted(_action_constants(self.actions)))))
        self.init = State(self.init.facts, frozenset(self.objects))
        names = [a.name for a in self.actions]
        if len(set(names)) != len(names):
            raise TaskError("duplicate action names")
        self._reasoner = None

    @property
    def signature(self) -> Signature:
        sig = self.tbox.signature
        extra = tuple((p, k) for p, k in self.predicates
                      if sig.arity(p) is None and p not in ("top", "bot"))
        return Signature(sig.concept_names, sig.role_names, sig.individual_names,
                         sig.extra_predicates + extra)

    def queries(self) -> list:
        qs = [self.goal]
        for a in self.actions:
            qs.append(a.pre)
            qs += [e.cond for e in a.effects]
        return qs

    def ucqs(self) -> list:
        out: dict = {}
        for q in self.queries():
            for u in Q.collect_ucqs(q):
                out.setdefault(u)
        return list(out)

    @property
    def reasoner(self):
        if self._reasoner is None:
            from .rewriter import Reasoner
            self._reasoner = Reasoner(self.tbox, self.ucqs())
        return self._reasoner

    def state(self, facts) -> State:
        return State(frozenset(facts), frozenset(self.objects))

    def validate(self) -> None:
        validate_state(self.init, self.signature)
        for a in self.actions:
            for e in a.effects:
                for pred, args in e.add + e.delete:
                    if is_reserved(pred):
                        raise TaskError(f"action {a.name}: reserved predicate {pred}")
                    k = self.signature.arity(pred)
                    if pred in ("top", "bot") or k is None:
                        raise TaskError(f"action {a.name}: {pred} is not a state predicate")
                    if k != len(args):
                        raise TaskError(f"action {a.name}: {pred} expects {k} arguments")
        sig = self.signature
        for q in self.queries():
            for atom in _closed_atoms(q):
                k = sig.arity(atom.pred)
                if k is None or k != len(atom.terms):
                    raise TaskError(f"atom over {atom.pred} does not match a declared "
                                    "predicate")
        if not self.reasoner.consistent(self.init):
            raise TaskError("the initial state is inconsistent with the ontology")


# -- semantics --------------------------------------------------------------------


def ground(a: DLAction, theta) -> GroundAction:
    if isinstance(theta, dict):
        missing = [p for p in a.params if p not in theta]
        if missing:
            raise TaskError(f"grounding of {a.name} misses {[v.name for v in missing]}")
        args = tuple(theta[p] for p in a.params)
    else:
        args = tuple(theta)
        if len(args) != len(a.params):
            raise TaskError(f"{a.name} takes {len(a.params)} arguments")
    return GroundAction(a.name, args, a)


def _closed(q, reasoner):
    return Q.to_closed_formula(q, reasoner.naming)


def holds(task: EKABTask, s: State, q, theta=None) -> bool:
    r = task.reasoner
    f = _closed(Q.substitute(q, theta or {}), r)
    return fo.holds(f, r.structure(s))


def apply(task: EKABTask, s: State, g: GroundAction) -> State:
    """Successor state; additions take precedence over deletions."""
    r = task.reasoner
    S = r.structure(s)
    theta = g.theta
    adds, dels = set(), set()
    for e in g.action.effects:
        cond = _closed(Q.substitute(e.cond, theta), r)
        for vals in fo.answers(cond, S, e.vars):
            sub = {**theta, **dict(zip(e.vars, vals))}
            for pred, args in e.add:
                adds.add(Fact(pred, tuple(sub.get(t, t) for t in args)))
            for pred, args in e.delete:
                dels.add(Fact(pred, tuple(sub.get(t, t) for t in args)))
    return State(frozenset((s.facts - dels) | adds), s.base)


def applicable(task: EKABTask, s: State, g: GroundAction) -> bool:
    if not holds(task, s, g.action.pre, g.theta):
        return False
    return task.reasoner.consistent(apply(task, s, g))


def candidate_groundings(task: EKABTask, s: State, a: DLAction) -> list[GroundAction]:
    """Groundings whose precondition holds in ``s``, in lexicographic order."""
    r = task.reasoner
    f = _closed(a.pre, r)
    rows = fo.answers(f, r.structure(s), a.params)
    return sorted(GroundAction(a.name, t, a) for t in rows)


def successors(task: EKABTask, s: State):
    out = []
    for a in task.actions:
        for g in candidate_groundings(task, s, a):
            t = apply(task, s, g)
            if task.reasoner.consistent(t):
                out.append((g, t))
    out.sort(key=lambda x: (x[0].name, x[0].args))
    return out


def goal_holds(task: EKABTask, s: State) -> bool:
    return holds(task, s, task.goal)


def plan_valid(task: EKABTask, plan) -> bool:
    s = task.init
    if not task.reasoner.consistent(s):
        return False
    for g in plan:
        if not applicable(task, s, g):
            return False
        s = apply(task, s, g)
    return goal_holds(task, s)


def execute(task: EKABTask, plan) -> list[State]:
    states = [task.init]
    for g in plan:
        states.append(apply(task, states[-1], g))
    return states


def bfs_plan(task: EKABTask, max_depth: int, *, max_states: int = 200_000):
    """Shortest plan of length <= ``max_depth`` (lexicographically least), or ``None``."""
    if max_depth < 0:
        raise ValueError("max_depth must be non-negative")
    s0 = task.init
    if not task.reasoner.consistent(s0):
        return None
    if goal_holds(task, s0):
        return []
    parent: dict[State, tuple] = {s0: (None, None)}
    frontier = deque([(s0, 0)])
    while frontier:
        s, d = frontier.popleft()
        if d >= max_depth:
            continue
        for g, t in successors(task, s):
            if t in parent:
                continue
            parent[t] = (s, g)
            if len(parent) > max_states:
                raise SearchLimit(f"more than {max_states} states")
            if goal_holds(task, t):
                plan = []
                while parent[t][0] is not None:
                    t, g2 = parent[t]
                    plan.append(g2)
                return plan[::-1]
            frontier.append((t, d + 1))
    return None


# -- task files -------------------------------------------------------------------


def _sym(node, what):
    if not isinstance(node, Sym) or isinstance(node, Quoted):
        fail(node, f"expected {what}")
    return str(node)


def _params(node):
    if not isinstance(node, SList):
        fail(node, "expected a parameter list")
    out = []
    for t in node:
        if not isinstance(t, Sym) or not t.startswith("?"):
            fail(t, "parameters look like ?x")
        out.append(Var(str(t[1:])))
    return tuple(out)


def _atom(node):
    if not isinstance(node, SList) or not node or not isinstance(node[0], Sym):
        fail(node, "expected an atom")
    args = []
    for t in node[1:]:
        if not isinstance(t, Sym):
            fail(t, "atom arguments are variables or constants")
        args.append(Var(str(t[1:])) if t.startswith("?") else str(t))
    return str(node[0]), tuple(args)


def _literals(node):
    """``(and l1 l2)`` or a single literal -> (adds, dels)."""
    items = node[1:] if isinstance(node, SList) and node and node[0] == "and" else [node]
    adds, dels = [], []
    for it in items:
        if isinstance(it, SList) and it and it[0] == "not":
            if len(it) != 2:
                fail(it, "(not atom)")
            dels.append(_atom(it[1]))
        else:
            adds.append(_atom(it))
    return tuple(adds), tuple(dels)


def _effects(node):
    if isinstance(node, SList) and not node:
        return ()
    items = node[1:] if isinstance(node, SList) and node and node[0] == "and" else [node]
    out, plain_add, plain_del = [], [], []
    for it in items:
        if not isinstance(it, SList) or not it:
            fail(it, "expected an effect")
        head = it[0]
        vs: tuple = ()
        if head == "forall":
            if len(it) != 3:
                fail(it, "(forall (?y) effect)")
            vs = _params(it[1])
            it = it[2]
            head = it[0] if isinstance(it, SList) and it else None
        if head == "when":
            if len(it) != 3:
                fail(it, "(when condition literals)")
            cond = Q.ecq_from_sexp(it[1])
            add, dele = _literals(it[2])
            out.append(DLEffect(vs, cond, add, dele))
        elif vs:
            add, dele = _literals(it)
            out.append(DLEffect(vs, Q.TRUE, add, dele))
        else:
            add, dele = _literals(it)
            plain_add += add
            plain_del += dele
    if plain_add or plain_del:
        out.insert(0, DLEffect((), Q.TRUE, tuple(plain_add), tuple(plain_del)))
    return tuple(out)


def _action(node):
    name = _sym(node[1], "an action name")
    opts = {}
    i = 2
    while i < len(node):
        key = node[i]
        if not isinstance(key, Sym) or not key.startswith(":") or i + 1 >= len(node):
            fail(key, "expected :parameters, :precondition or :effect")
        opts[str(key).lower()] = node[i + 1]
        i += 2
    unknown = set(opts) - {":parameters", ":precondition", ":effect"}
    if unknown:
        fail(node, f"unknown action keys {sorted(unknown)}")
    params = _params(opts[":parameters"]) if ":parameters" in opts else ()
    pre = Q.ecq_from_sexp(opts[":precondition"]) if ":precondition" in opts else Q.TRUE
    effects = _effects(opts[":effect"]) if ":effect" in opts else ()
    return DLAction(name, params, pre, effects)


def parse_task(text: str, base_dir: str = ".", tbox: TBox | None = None) -> EKABTask:
    try:
        node = parse_one(text)
        if not (isinstance(node, SList) and len(node) >= 2 and node[0] == "define"
                and isinstance(node[1], SList) and len(node[1]) == 2 and node[1][0] == "ekab"):
            fail(node, "expected (define (ekab NAME) ...)")
        name = str(node[1][1])
        preds, actions, objects, init, goal, onto_file = [], [], [], [], Q.TRUE, None
        for sec in node[2:]:
            if not isinstance(sec, SList) or not sec or not isinstance(sec[0], Sym):
                fail(sec, "expected a section")
            key = sec[0].lower()
            if key == ":ontology":
                if len(sec) != 2 or not isinstance(sec[1], Quoted):
                    fail(sec, '(:ontology "file.onto")')
                onto_file = str(sec[1])
            elif key == ":predicates":
                for p in sec[1:]:
                    pname, args = _atom(p)
                    preds.append((pname, len(args)))
            elif key == ":action":
                actions.append(_action(sec))
            elif key == ":objects":
                objects += [_sym(o, "an object name") for o in sec[1:]]
            elif key == ":init":
                for f in sec[1:]:
                    p, args = _atom(f)
                    if any(isinstance(a, Var) for a in args):
                        fail(f, "initial facts are ground")
                    init.append(Fact(p, args))
            elif key == ":goal":
                goal = Q.ecq_from_sexp(sec[1])
            else:
                fail(sec, f"unknown section {sec[0]}")
    except SExpError as e:
        raise TaskError(str(e)) from None
    if tbox is None:
        if onto_file is None:
            tbox = TBox()
        else:
            path = os.path.join(base_dir, onto_file)
            try:
                with open(path) as fh:
                    tbox = parse_ontology(fh.read())
            except OSError as e:
                raise TaskError(f"cannot read ontology {path}: {e.strerror}") from None
    if Q.free_vars(goal):
        raise TaskError("the goal must be closed")
    sig = tbox.signature
    declared = {p for p, _ in preds}
    for c in sig.concept_names:
        if c not in declared and c not in ("top", "bot"):
            preds.append((c, 1))
    for r in sig.role_names:
        if r not in declared:
            preds.append((r, 2))
    task = EKABTask(name, tbox, tuple(preds), tuple(actions), tuple(objects),
                    State(frozenset(init)), goal, onto_file)
    return task


def load_task(path: str) -> EKABTask:
    with open(path) as fh:
        text = fh.read()
    try:
        return parse_task(text, os.path.dirname(os.path.abspath(path)))
    except (OntologyError, StateError, Q.QueryError) as e:
        raise TaskError(str(e)) from None


def _term(t):
    return f"?{t.name}" if isinstance(t, Var) else t


def _fmt_atom(pred, args):
    return "(" + " ".join((pred,) + tuple(_term(a) for a in args)) + ")"


def _fmt_lits(add, dele):
    parts = [_fmt_atom(p, a) for p, a in add] + [f"(not {_fmt_atom(p, a)})" for p, a in dele]
    return parts[0] if len(parts) == 1 else "(and " + " ".join(parts) + ")"


def format_task(task: EKABTask, ontology_file: str | None = None) -> str:
    onto = ontology_file or task.ontology_file or f"{task.name}.onto"
    lines = [f"(define (ekab {task.name})", f'  (:ontology "{onto}")']
    sig = task.tbox.signature
    extra = [(p, k) for p, k in task.predicates
             if p not in sig.concept_names and p not in sig.role_names]
    if extra:
        lines.append("  (:predicates " + " ".join(
            "(" + " ".join([p] + [f"?v{i}" for i in range(k)]) + ")" for p, k in extra) + ")")
    for a in task.actions:
        lines.append(f"  (:action {a.name}")
        lines.append("    :parameters (" + " ".join(_term(p) for p in a.params) + ")")
        lines.append(f"    :precondition {Q.format_ecq(a.pre)}")
        effs = []
        for e in a.effects:
            body = _fmt_lits(e.add, e.delete) if (e.add or e.delete) else "(and)"
            if e.cond != Q.TRUE:
                body = f"(when {Q.format_ecq(e.cond)} {body})"
            if e.vars:
                body = "(forall (" + " ".join(_term(v) for v in e.vars) + f") {body})"
            effs.append(body)
        lines.append("    :effect (and" + "".join(" " + x for x in effs) + "))")
    lines.append("  (:objects " + " ".join(task.objects) + ")")
    lines.append("  (:init" + "".join(" " + _fmt_atom(f.pred, f.args) for f in task.init) + ")")
    lines.append(f"  (:goal {Q.format_ecq(task.goal)}))")
    return "\n".join(lines) + "\n"


def write_task(task: EKABTask, directory: str, name: str | None = None) -> str:
    """Write ``NAME.ekab`` and ``NAME.onto`` into ``directory``; returns the task path."""
    name = name or task.name
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, f"{name}.onto"), "w") as fh:
        fh.write(format_ontology(task.tbox))
    path = os.path.join(directory, f"{name}.ekab")
    with open(path, "w") as fh:
        fh.write(format_task(task, f"{name}.onto"))
    return path


__all__ = ["DLAction", "DLEffect", "EKABTask", "GroundAction", "TaskError", "SearchLimit",
           "ground", "apply", "applicable", "plan_valid", "bfs_plan", "successors",
           "parse_task", "load_task", "format_task", "write_task", "goal_holds", "execute",
           "holds", "candidate_groundings"]
