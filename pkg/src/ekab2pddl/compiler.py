"""eKAB to PDDL compilation with derived predicates."""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from . import ecq as Q
from . import formula as fo
from .datalog import Builtin, DatalogProgram, Rule, check_stratification
from .ekab import DLAction, DLEffect, EKABTask, bfs_plan, ground, plan_valid
from .ontology import (BOT, TOP, AtMostOne, ConjSubsumption, ExistsLeft, ExistsRight,
                       NominalLeft, NominalRight, RoleInclusion, Signature, TBox,
                       base_role)
from .pddl import (DerivedRule, PAction, PDDLDomain, PDDLTask, PEffect, pddl_bfs_plan,
                   pddl_ground, pddl_plan_valid)
from .rewriter import RewritingSet
from .rewriter.strata import OBJ
from .terms import Var

PRIME = "dl_p_"
S_PRED = "dl_s"
N_PRED = "dl_n"
GOAL_PRED = "dl_goal"
GOAL_ACTION = "dl_achieve_goal"
SN_ACTION = "dl_sn"
TSEITIN_PREFIX = "dl_t"


class CompileError(ValueError):
    pass


# -- goal normalization ------------------------------------------------------------------


def is_atomic_goal(goal) -> bool:
    return isinstance(goal, Q.ClosedAtom) and goal.pred != "=" and not Q.free_vars(goal)


def normalize_goal(task: EKABTask) -> EKABTask:
    """Same task with a single closed-world goal atom.

    A non-atomic goal ``G`` becomes the precondition of a new parameterless
    action that adds the nullary flag ``dl_goal``.
    """
    if is_atomic_goal(task.goal):
        return task
    act = DLAction(GOAL_ACTION, (), task.goal,
                   (DLEffect((), Q.TRUE, ((GOAL_PRED, ()),), ()),))
    out = EKABTask(task.name, task.tbox, task.predicates + ((GOAL_PRED, 0),),
                   task.actions + (act,), task.objects, task.init,
                   Q.ClosedAtom(GOAL_PRED, ()), task.ontology_file)
    out._reasoner = None
    return out


# -- priming ---------------------------------------------------------------------------------


def prime(name: str) -> str:
    return name if name in (TOP, BOT) else PRIME + name


def _prime_role(r: str) -> str:
    b = base_role(r)
    return prime(b) + r[len(b):]


def prime_tbox(tbox: TBox) -> TBox:
    def ax(a):
        if isinstance(a, ConjSubsumption):
            return ConjSubsumption(tuple(map(prime, a.lhs)), prime(a.rhs))
        if isinstance(a, ExistsRight):
            return ExistsRight(prime(a.lhs), _prime_role(a.role), prime(a.filler))
        if isinstance(a, ExistsLeft):
            return ExistsLeft(_prime_role(a.role), prime(a.filler), prime(a.rhs))
        if isinstance(a, AtMostOne):
            return AtMostOne(prime(a.lhs), _prime_role(a.role), prime(a.filler))
        if isinstance(a, NominalRight):
            return NominalRight(prime(a.lhs), a.individual)
        if isinstance(a, NominalLeft):
            return NominalLeft(a.individual, prime(a.rhs))
        return RoleInclusion(_prime_role(a.sub), _prime_role(a.sup))

    sig = tbox.signature
    psig = Signature(tuple(map(prime, sig.concept_names)), tuple(map(prime, sig.role_names)),
                     sig.individual_names)
    return TBox(tuple(ax(a) for a in tbox.axioms), psig)


def prime_ucq(u: Q.UCQ) -> Q.UCQ:
    return Q.canonical_ucq(Q.UCQ(tuple(
        Q.CQ(d.answer_vars, d.exist_vars, tuple(Q.QAtom(_prime_role(a.pred), a.args)
                                                for a in d.atoms))
        for d in u.disjuncts)))


@dataclass
class Priming:
    tbox: TBox
    ucqs: dict  # source UCQ -> primed UCQ
    copies: dict  # source predicate -> (primed name, arity)


def prime_tbox_and_queries(task: EKABTask, *, strict: bool = False) -> Priming:
    tb = task.tbox
    ucqs = {u: prime_ucq(u) for u in task.ucqs()}
    preds: dict[str, int] = {}
    for c in tb.signature.concept_names:
        if c not in (TOP, BOT):
            preds[c] = 1
    for r in tb.signature.role_names:
        preds[r] = 2
    for u in ucqs:
        for d in u.disjuncts:
            for a in d.atoms:
                if a.pred not in (TOP, BOT):
                    preds.setdefault(base_role(a.pred), len(a.args))
    if strict:
        for p, k in task.predicates:
            preds.setdefault(p, k)
    copies = {p: (prime(p), k) for p, k in sorted(preds.items())}
    return Priming(prime_tbox(tb), ucqs, copies)


# -- Datalog rules as derived-predicate rules ------------------------------------------------


def datalog_to_derived(rule: Rule) -> DerivedRule:
    """``H(t1..tk) <- body`` as ``(:derived (H ?h0..) (exists (...) (and ...)))``."""
    head = tuple(Var(f"h{i}") for i in range(len(rule.head.args)))
    ren: dict = {}
    eqs = []
    for h, t in zip(head, rule.head.args):
        if isinstance(t, Var) and t not in ren:
            ren[t] = h
        else:
            eqs.append((h, t))

    ex: list[Var] = []

    def term(t):
        if isinstance(t, Var):
            if t not in ren:
                ren[t] = Var(f"v{len(ex)}")
                ex.append(ren[t])
            return ren[t]
        return t

    lits = []
    for b in rule.body:
        if isinstance(b, Builtin):
            if b.op not in ("=", "!="):
                raise CompileError(f"builtin {b.op} has no PDDL counterpart")
            e = fo.Eq(term(b.left), term(b.right))
            lits.append(e if b.op == "=" else fo.Not(e))
        else:
            a = fo.FAtom(b.atom.pred, tuple(term(t) for t in b.atom.args))
            lits.append(a if b.positive else fo.Not(a))
    lits += [fo.Eq(h, term(t)) for h, t in eqs]
    body = lits[0] if len(lits) == 1 else fo.And(tuple(lits))
    if ex:
        body = fo.Exists(tuple(ex), body)
    return DerivedRule(rule.head.pred, head, body)


# -- conditions --------------------------------------------------------------------------------


def _not_n(vs):
    return [fo.Not(fo.FAtom(N_PRED, (v,))) for v in vs]


def guard_quantifiers(f):
    """Restrict quantified variables to the original objects (``not N``)."""
    if isinstance(f, fo.Exists):
        return fo.Exists(f.vars, fo.conj(*_not_n(f.vars), guard_quantifiers(f.body)))
    if isinstance(f, fo.Forall):
        return fo.Forall(f.vars, fo.Or(tuple(fo.FAtom(N_PRED, (v,)) for v in f.vars)
                                       + (guard_quantifiers(f.body),)))
    if isinstance(f, fo.Not):
        return fo.Not(guard_quantifiers(f.arg))
    if isinstance(f, (fo.And, fo.Or)):
        return type(f)(tuple(guard_quantifiers(a) for a in f.args))
    return f


@dataclass
class CompilationOutput:
    task: PDDLTask
    source: EKABTask  # the goal-normalized input
    naming: dict  # source UCQ -> answer predicate; source predicate -> primed predicate
    bot: str
    rewriting: RewritingSet
    report: dict = field(default_factory=dict)


def compile_task(task: EKABTask, *, tseitin: bool = False, strict_copy_rules: bool = False,
                 inline_tables: bool = True) -> CompilationOutput:
    t0 = time.perf_counter()
    src = normalize_goal(task)
    pr = prime_tbox_and_queries(src, strict=strict_copy_rules)
    rs = RewritingSet(pr.tbox, list(pr.ucqs.values()), inline_tables=inline_tables)
    naming_q = {u: rs.answer_predicates[pu] for u, pu in pr.ucqs.items()}

    rules = [datalog_to_derived(r) for r in rs.program.rules]
    for p, (pp, k) in pr.copies.items():
        xs = tuple(Var(f"h{i}") for i in range(k))
        rules.append(DerivedRule(pp, xs, fo.FAtom(p, xs)))
    heads: dict[str, int] = {}
    for r in rules:
        heads.setdefault(r.pred, len(r.params))

    objects = set(src.objects)
    consts_in_rules = set(rs.program.constants)
    new_consts = sorted(consts_in_rules - objects)

    def closed(q):
        return guard_quantifiers(Q.to_closed_formula(q, naming_q))

    S = fo.FAtom(S_PRED, ())
    not_bot = fo.Not(fo.FAtom(rs.bot, ()))
    actions = [build_sn_action(new_consts)]
    for a in src.actions:
        pre = fo.conj(S, *_not_n(a.params), not_bot, closed(a.pre))
        effects = []
        for e in a.effects:
            cond = fo.conj(*_not_n(e.vars), closed(e.cond)) if e.vars else closed(e.cond)
            effects.append(PEffect(e.vars, cond, e.add, e.delete))
        actions.append(PAction(a.name, a.params, pre, tuple(effects)))
    goal = fo.conj(S, not_bot, closed(src.goal))

    action_consts = set()
    for a in actions:
        action_consts |= fo.constants(a.pre)
        for e in a.effects:
            action_consts |= fo.constants(e.cond)
            for _, args in e.add + e.delete:
                action_consts |= {t for t in args if not isinstance(t, Var)}
    domain_consts = (consts_in_rules | action_consts)
    fluents = tuple(src.predicates) + ((S_PRED, 0), (N_PRED, 1), (OBJ, 1))
    fluent_names = {p for p, _ in fluents}
    clash = fluent_names & set(heads)
    if clash:
        raise CompileError(f"predicates {sorted(clash)} are both state and derived")
    domain = PDDLDomain(_pddl_name(src.name), fluents, tuple(heads.items()),
                        tuple(domain_consts), tuple(actions), tuple(rules))
    init = {(f.pred, f.args) for f in src.init.facts}
    init |= {(OBJ, (o,)) for o in objects}
    ptask = PDDLTask(domain, _pddl_name(src.name), tuple(objects - domain_consts),
                     frozenset(init), goal)
    if tseitin:
        ptask = tseitin_pass(ptask)
    levels = check_stratification(ptask.program)
    naming: dict = dict(naming_q)
    naming.update({p: pp for p, (pp, _) in pr.copies.items()})
    dl = DatalogProgram(tuple(Rule(r.head, r.body) for r in rs.program.rules))
    report = {
        "rules": len(ptask.domain.rules),
        "max_arity": max([dl.max_arity()] + [k for _, k in ptask.domain.derived]),
        "strata": 1 + max(levels.values(), default=0),
        "compile_ms": int((time.perf_counter() - t0) * 1000),
        "rewriting": rs.stats(),
    }
    return CompilationOutput(ptask, src, naming, rs.bot, rs, report)


def _pddl_name(name: str) -> str:
    out = "".join(c if c.isalnum() or c in "-_" else "_" for c in name) or "task"
    return out if out[0].isalpha() else "t" + out


def build_sn_action(new_constants) -> PAction:
    S = fo.FAtom(S_PRED, ())
    return PAction(SN_ACTION, (), fo.Not(S), (PEffect((), fo.TRUE, ((S_PRED, ()),) + tuple(
        (N_PRED, (c,)) for c in sorted(new_constants)), ()),))


# -- Tseitin normalization -------------------------------------------------------------------


def _is_literal(f) -> bool:
    if isinstance(f, fo.Not):
        f = f.arg
    return isinstance(f, (fo.FAtom, fo.Eq))


def tseitin_pass(task: PDDLTask) -> PDDLTask:
    """Replace every non-literal condition subformula by a fresh derived atom."""
    new_rules: list[DerivedRule] = []
    counter = [0]

    def name(f):
        counter[0] += 1
        vs = tuple(sorted(fo.free_vars(f), key=lambda v: v.name))
        p = f"{TSEITIN_PREFIX}{counter[0]}"
        new_rules.append(DerivedRule(p, vs, f))
        return fo.FAtom(p, vs)

    def t(f):
        if _is_literal(f):
            return f
        if isinstance(f, fo.Not):
            return fo.Not(t(f.arg))
        if isinstance(f, (fo.And, fo.Or)):
            if not f.args:
                return f
            return name(type(f)(tuple(t(a) for a in f.args)))
        return name(type(f)(f.vars, t(f.body)))

    d = task.domain
    actions = []
    for a in d.actions:
        effects = tuple(PEffect(e.vars, t(e.cond), e.add, e.delete) for e in a.effects)
        actions.append(PAction(a.name, a.params, t(a.pre), effects))
    goal = t(task.goal)
    derived = d.derived + tuple((r.pred, len(r.params)) for r in new_rules)
    dom = PDDLDomain(d.name, d.predicates, derived, d.constants, tuple(actions),
                     d.rules + tuple(new_rules))
    return PDDLTask(dom, task.name, task.objects, task.init, goal)


# -- validation ----------------------------------------------------------------------------------


@dataclass
class ValidationReport:
    depth: int
    agree: bool
    ekab_plan: list | None
    pddl_plan: list | None
    message: str = ""

    def as_dict(self) -> dict:
        return {
            "depth": self.depth,
            "agree": self.agree,
            "ekab_plan": None if self.ekab_plan is None else [str(g) for g in self.ekab_plan],
            "pddl_plan": None if self.pddl_plan is None else [str(g) for g in self.pddl_plan],
            "message": self.message,
        }


def validate_compilation(out: CompilationOutput, depth: int = 6, *,
                         max_states: int = 200_000) -> ValidationReport:
    """Bounded dual search: eKAB at ``depth`` against PDDL at ``depth + 1``."""
    src, ptask = out.source, out.task
    ek = bfs_plan(src, depth, max_states=max_states)
    pd = pddl_bfs_plan(ptask, depth + 1, max_states=max_states)
    rep = ValidationReport(depth, True, ek, pd)
    if (ek is None) != (pd is None):
        rep.agree = False
        rep.message = ("eKAB plan " + ("none" if ek is None else " ".join(map(str, ek)))
                       + " vs PDDL plan " + ("none" if pd is None else " ".join(map(str, pd))))
        return rep
    if ek is None:
        return rep
    if len(pd) != len(ek) + 1:
        rep.agree = False
        rep.message = f"plan lengths {len(ek)} (eKAB) and {len(pd)} (PDDL)"
        return rep
    lifted = [pddl_ground(ptask, SN_ACTION, ())] + [pddl_ground(ptask, g.name, g.args)
                                                    for g in ek]
    if not pddl_plan_valid(ptask, lifted):
        rep.agree = False
        rep.message = "the eKAB plan prefixed with the initializing action is not a PDDL plan"
        return rep
    if pd[0].name != SN_ACTION:
        rep.agree = False
        rep.message = "PDDL plan does not start with the initializing action"
        return rep
    actions = {a.name: a for a in src.actions}
    try:
        lowered = [ground(actions[g.name], g.args) for g in pd[1:]]
    except KeyError as e:
        rep.agree = False
        rep.message = f"PDDL plan uses unknown action {e}"
        return rep
    if not plan_valid(src, lowered):
        rep.agree = False
        rep.message = "the PDDL plan without the initializing action is not an eKAB plan"
    return rep


__all__ = ["CompileError", "CompilationOutput", "ValidationReport", "normalize_goal",
           "prime_tbox_and_queries", "prime_tbox", "prime_ucq", "build_sn_action",
           "compile_task", "tseitin_pass", "validate_compilation", "datalog_to_derived",
           "guard_quantifiers", "PRIME", "S_PRED", "N_PRED", "SN_ACTION", "GOAL_PRED",
           "GOAL_ACTION"]
