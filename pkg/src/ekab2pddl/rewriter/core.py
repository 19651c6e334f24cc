"""Assembling the strata into rewritings and answering queries with them."""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from itertools import product

from ..datalog import DatalogProgram, check_stratification, evaluate
from ..ecq import UCQ, canonical_ucq, format_ucq, ucq_signature
from ..formula import Structure
from ..ontology import BOT, State, TBox, format_ontology
from ..terms import Var
from .eliminate import MAX_ARITY, eliminate_sets
from .ir import A, Layout, P, SRule
from .strata import (BOT_PRED, OBJ, abox_concepts, abox_roles, build_base_stratum,
                     build_canonical_stratum, build_filtration_stratum, build_order_stratum)

STRATA = ("base", "order", "canonical", "filtration")


def stable_hash(tbox: TBox, ucqs) -> str:
    h = hashlib.sha1(format_ontology(tbox).encode())
    for u in ucqs:
        h.update(b"\0" + format_ucq(u).encode())
    return h.hexdigest()[:8]


def layout_for(tbox: TBox, ucqs) -> Layout:
    cs, rs, inds = ucq_signature(ucqs)
    sig = tbox.signature.extended(cs, rs, inds)
    return Layout.for_signature(sig, tbox, [c for c in cs])


@dataclass
class RewritingResult:
    program: DatalogProgram
    answer_predicate: str
    inconsistency_predicate: str
    aux_constants: frozenset
    stats: dict = field(default_factory=dict)


class RewritingSet:
    """Rewritings of several UCQs over one TBox, sharing the query-independent strata.

    ``answer_predicates`` maps each canonical UCQ to its output predicate;
    ``program`` holds every rule.
    """

    def __init__(self, tbox: TBox, ucqs, *, inline_tables: bool = True,
                 max_arity: int = MAX_ARITY, prefix: str | None = None):
        self.tbox = tbox
        self.ucqs = list(dict.fromkeys(canonical_ucq(u) for u in ucqs))
        self.layout = L = layout_for(tbox, self.ucqs)
        self.prefix = prefix if prefix is not None else f"dl_{stable_hash(tbox, self.ucqs)}_"
        self.external = set(abox_concepts(L)) | set(abox_roles(L)) | {OBJ}

        strata = {
            "base": build_base_stratum(tbox, L),
            "order": build_order_stratum(L),
            "canonical": build_canonical_stratum(L),
        }
        schema = {}
        for st in strata.values():
            schema.update(st.schema)
        filt_rules: list[SRule] = []
        self.answer_predicates: dict[UCQ, str] = {}
        for j, u in enumerate(self.ucqs):
            name = f"q{j}"
            schema[name] = (None,) * u.arity
            self.answer_predicates[u] = self.rename(name)
            xs = [Var(f"a{i}") for i in range(u.arity)]
            for d, cq in enumerate(u.disjuncts):
                st = build_filtration_stratum(cq, L, f"{name}_d{d}")
                schema.update(st.schema)
                filt_rules += st.rules
                filt_rules.append(SRule((A(name, *xs),), (P(f"{name}_d{d}", *xs),), "merge"))
        self.set_rules = {k: v.rules for k, v in strata.items()}
        self.set_rules["filtration"] = filt_rules
        self.schema = schema

        hint = ("filtration arity is 2 + k*(1+|roles|+|concepts|+3) with "
                f"{len(L.roles)} roles and {len(L.concepts)} concepts")
        programs = {}
        for name in STRATA:
            programs[name] = eliminate_sets(self.set_rules[name], schema, rename=self.rename,
                                            inline_tables=inline_tables, max_arity=max_arity,
                                            arity_hint=hint)
        # the max table is emitted once, with the base stratum
        mx = self.rename("max")
        for name in STRATA[1:]:
            programs[name] = DatalogProgram(tuple(r for r in programs[name].rules
                                                  if not (r.head.pred == mx and not r.body)))
        self.strata = programs
        rules = []
        for name in STRATA:
            rules += [r for r in programs[name].rules if r not in rules]
        self.program = DatalogProgram(tuple(dict.fromkeys(rules)))
        self.bot = self.rename(BOT_PRED)

    def rename(self, pred: str) -> str:
        return pred if pred in self.external else self.prefix + pred

    def program_for(self, u: UCQ) -> DatalogProgram:
        """Rules needed for one UCQ: the shared strata plus its own filtration."""
        key = canonical_ucq(u)
        j = self.ucqs.index(key)
        mine = self.rename(f"q{j}")
        keep = [r for r in self.program.rules if not self._is_filtration(r.head.pred)
                or r.head.pred == mine or r.head.pred.startswith(mine + "_")]
        return DatalogProgram(tuple(keep))

    def _is_filtration(self, pred: str) -> bool:
        return pred.startswith(self.prefix + "q")

    def stats(self) -> dict:
        return {
            "rules": len(self.program.rules),
            "max_arity": self.program.max_arity(),
            "strata": {k: len(v.rules) for k, v in self.strata.items()},
        }


def rewrite_ucq(tbox: TBox, q: UCQ, *, inline_tables: bool = True,
                max_arity: int = MAX_ARITY) -> RewritingResult:
    rs = RewritingSet(tbox, [q], inline_tables=inline_tables, max_arity=max_arity)
    prog = rs.program
    check_stratification(prog)
    return RewritingResult(
        program=prog,
        answer_predicate=rs.answer_predicates[canonical_ucq(q)],
        inconsistency_predicate=rs.bot,
        aux_constants=frozenset(c for c in prog.constants if c.startswith("dl_")),
        stats=rs.stats(),
    )


def base_facts(state: State, objects=()) -> list:
    facts = [(f.pred, tuple(f.args)) for f in state.facts]
    facts += [(OBJ, (o,)) for o in sorted(set(state.objects) | set(objects))]
    return facts


class Reasoner:
    """Certain answers of a fixed set of UCQs over arbitrary states.

    Models are cached per state.  On a state inconsistent with the TBox every
    tuple over the domain is an answer.
    """

    def __init__(self, tbox: TBox, ucqs, *, cache_size: int = 4096, **kw):
        self.tbox = tbox
        self.rewriting = RewritingSet(tbox, ucqs, **kw)
        self.naming = dict(self.rewriting.answer_predicates)
        self.bot = self.rewriting.bot
        self._cache: dict = {}
        self._cache_size = cache_size

    def model(self, state: State):
        m = self._cache.get(state)
        if m is None:
            m = evaluate(self.rewriting.program, base_facts(state))
            if len(self._cache) >= self._cache_size:
                self._cache.pop(next(iter(self._cache)))
            self._cache[state] = m
        return m

    def consistent(self, state: State) -> bool:
        return not self.model(state).holds(self.bot)

    def answers(self, state: State, u: UCQ) -> frozenset:
        key = canonical_ucq(u)
        m = self.model(state)
        dom = sorted(state.objects)
        if m.holds(self.bot):
            return frozenset(product(dom, repeat=key.arity))
        objs = set(dom)
        return frozenset(t for t in m.get(self.naming[key]) if set(t) <= objs)

    def structure(self, state: State) -> Structure:
        rel: dict[str, frozenset] = {}
        for f in state.facts:
            rel.setdefault(f.pred, set()).add(tuple(f.args))
        for u in self.naming:
            rel[self.naming[u]] = self.answers(state, u)
        return Structure(state.objects, rel)


def certain_answers(tbox: TBox, state: State, q: UCQ) -> frozenset:
    return Reasoner(tbox, [q]).answers(state, q)


def is_consistent(tbox: TBox, state: State) -> bool:
    return Reasoner(tbox, []).consistent(state)


__all__ = ["RewritingResult", "RewritingSet", "Reasoner", "rewrite_ucq", "certain_answers",
           "is_consistent", "rule_count", "STRATA", "BOT"]


def _filtration_count(cq) -> int:
    from .strata import components
    parts = components(cq)
    total = 0 if len(parts) == 1 else 1
    for part in parts:
        k = len(part.variables)
        edges = set()
        for a in part.atoms:
            if len(a.args) == 2 and all(isinstance(t, Var) for t in a.args):
                x, y = a.args
                r = a.pred
                if r.endswith("-"):
                    r, x, y = r[:-1], y, x
                edges.add((r, x, y))
        total += 2 * len(edges) + 8 * k * k + 2
    return total


def rule_count(tbox: TBox, ucqs) -> int:
    """Closed-form size of :class:`RewritingSet` output (inline tables).

    With n roles (inverses included), m layout concepts, a ABox concepts and
    b base roles the query-independent part has
    ``20 + 3n + m + 2a + 3b + sum(axiom sizes)`` base rules,
    ``3 + 3(n + m)`` order rules and ``7 + 17n`` canonical rules.
    """
    from ..ontology import (AtMostOne, ConjSubsumption, ExistsLeft, ExistsRight,
                            NominalLeft, NominalRight, RoleInclusion)
    ucqs = list(dict.fromkeys(canonical_ucq(u) for u in ucqs))
    L = layout_for(tbox, ucqs)
    n, m = len(L.roles), len(L.concepts)
    a, b = len(abox_concepts(L)), len(abox_roles(L))
    per_axiom = {ConjSubsumption: 1, ExistsRight: 1, ExistsLeft: 2, AtMostOne: 3 + 2 * m,
                 NominalRight: 2, NominalLeft: 1}
    inclusions = set()
    ax_total = 0
    for ax in tbox.axioms:
        if isinstance(ax, RoleInclusion):
            sub, sup = ax.sub, ax.sup
            if sup.endswith("-"):
                sub, sup = sub[:-1] if sub.endswith("-") else sub + "-", sup[:-1]
            inclusions.add((sub, sup))
        else:
            ax_total += per_axiom[type(ax)]
    ax_total += 2 * len(inclusions)
    # n({a}) facts are shared between nominal assertions on the same individual
    ax_total += len({ax.individual for ax in tbox.axioms if isinstance(ax, NominalLeft)})
    base = 20 + 3 * n + m + 2 * a + 3 * b + ax_total
    order = 3 + 3 * (n + m)
    canonical = 7 + 17 * n
    filt = sum(_filtration_count(cq) + 1 for u in ucqs for cq in u.disjuncts)
    return base + order + canonical + filt
