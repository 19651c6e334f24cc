"""Signatures, normal-form Horn-ALCHOIQ axioms, facts and states.

The ontology text format is line oriented::

    # comment
    concept A B          # optional declarations fix the symbol order
    role r
    individual a
    predicate at 3       # closed-world predicate of any arity
    A & B <= C
    A <= some r B
    some r- B <= C
    A <= max1 r B
    A <= {a}
    {a} <= A
    r <= s-
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Union

from .terms import is_reserved

TOP = "top"
BOT = "bot"
KEYWORDS = frozenset({"some", "max1", "concept", "role", "individual", "predicate"})
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")


class OntologyError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line, self.col = line, col
        prefix = f"line {line}" + (f", col {col}" if col else "") + ": " if line else ""
        super().__init__(prefix + message)


class StateError(ValueError):
    pass


def canon_role(name: str) -> str:
    """Collapse repeated inverse markers: ``r--`` is ``r``."""
    base = name.rstrip("-")
    return base + "-" if (len(name) - len(base)) % 2 else base


def inverse(role: str) -> str:
    return canon_role(role + "-")


def base_role(role: str) -> str:
    return role.rstrip("-")


def is_identifier(name: str) -> bool:
    return bool(_IDENT.match(name))


def _unique(items: Iterable[str]) -> tuple[str, ...]:
    return tuple(dict.fromkeys(items))


@dataclass(frozen=True)
class Signature:
    concept_names: tuple[str, ...] = (TOP, BOT)
    role_names: tuple[str, ...] = ()
    individual_names: tuple[str, ...] = ()
    extra_predicates: tuple[tuple[str, int], ...] = ()

    def __post_init__(self):
        cs = self.concept_names
        if TOP not in cs or BOT not in cs:
            object.__setattr__(self, "concept_names", _unique((TOP, BOT) + tuple(cs)))
        for r in self.role_names:
            if r.endswith("-"):
                raise OntologyError(f"role names are stored without inverse marker: {r!r}")

    def roles(self) -> tuple[str, ...]:
        """Every role together with its inverse, in declaration order."""
        out = []
        for r in self.role_names:
            out += [r, r + "-"]
        return tuple(out)

    def inverse_of(self, role: str) -> str:
        if base_role(role) not in self.role_names:
            raise KeyError(role)
        return inverse(role)

    def arity(self, pred: str) -> int | None:
        if pred in self.concept_names:
            return 1
        if pred in self.role_names:
            return 2
        for name, k in self.extra_predicates:
            if name == pred:
                return k
        return None

    def union(self, other: "Signature") -> "Signature":
        return Signature(
            _unique(self.concept_names + other.concept_names),
            _unique(self.role_names + other.role_names),
            _unique(self.individual_names + other.individual_names),
            _unique(self.extra_predicates + other.extra_predicates),
        )

    def extended(self, concepts=(), roles=(), individuals=()) -> "Signature":
        return Signature(
            _unique(self.concept_names + tuple(concepts)),
            _unique(self.role_names + tuple(base_role(r) for r in roles)),
            _unique(self.individual_names + tuple(individuals)),
            self.extra_predicates,
        )


# -- axioms -------------------------------------------------------------------


@dataclass(frozen=True)
class ConjSubsumption:
    lhs: tuple[str, ...]
    rhs: str

    def text(self):
        return " & ".join(self.lhs) + " <= " + self.rhs

    def sentence(self):
        body = " & ".join(f"{c}(x)" for c in self.lhs)
        return f"forall x. {body} -> {self.rhs}(x)"


@dataclass(frozen=True)
class ExistsRight:
    lhs: str
    role: str
    filler: str

    def text(self):
        return f"{self.lhs} <= some {self.role} {self.filler}"

    def sentence(self):
        return f"forall x. {self.lhs}(x) -> exists y. {self.role}(x,y) & {self.filler}(y)"


@dataclass(frozen=True)
class ExistsLeft:
    role: str
    filler: str
    rhs: str

    def text(self):
        return f"some {self.role} {self.filler} <= {self.rhs}"

    def sentence(self):
        return f"forall x,y. {self.role}(x,y) & {self.filler}(y) -> {self.rhs}(x)"


@dataclass(frozen=True)
class AtMostOne:
    lhs: str
    role: str
    filler: str

    def text(self):
        return f"{self.lhs} <= max1 {self.role} {self.filler}"

    def sentence(self):
        r, d = self.role, self.filler
        return (f"forall x,y,z. {self.lhs}(x) & {r}(x,y) & {d}(y) & {r}(x,z) & {d}(z)"
                " -> y = z")


@dataclass(frozen=True)
class NominalRight:
    lhs: str
    individual: str

    def text(self):
        return f"{self.lhs} <= {{{self.individual}}}"

    def sentence(self):
        return f"forall x. {self.lhs}(x) -> x = {self.individual}"


@dataclass(frozen=True)
class RoleInclusion:
    sub: str
    sup: str

    def text(self):
        return f"{self.sub} <= {self.sup}"

    def sentence(self):
        return f"forall x,y. {self.sub}(x,y) -> {self.sup}(x,y)"


@dataclass(frozen=True)
class NominalLeft:
    individual: str
    rhs: str

    def text(self):
        return f"{{{self.individual}}} <= {self.rhs}"

    def sentence(self):
        return f"{self.rhs}({self.individual})"


NormalAxiom = Union[ConjSubsumption, ExistsRight, ExistsLeft, AtMostOne,
                    NominalRight, RoleInclusion, NominalLeft]


def axiom_concepts(ax) -> tuple[str, ...]:
    if isinstance(ax, ConjSubsumption):
        return ax.lhs + (ax.rhs,)
    if isinstance(ax, (ExistsRight, AtMostOne)):
        return (ax.lhs, ax.filler)
    if isinstance(ax, ExistsLeft):
        return (ax.filler, ax.rhs)
    if isinstance(ax, NominalRight):
        return (ax.lhs,)
    if isinstance(ax, NominalLeft):
        return (ax.rhs,)
    return ()


def axiom_roles(ax) -> tuple[str, ...]:
    if isinstance(ax, (ExistsRight, ExistsLeft, AtMostOne)):
        return (ax.role,)
    if isinstance(ax, RoleInclusion):
        return (ax.sub, ax.sup)
    return ()


def axiom_individuals(ax) -> tuple[str, ...]:
    if isinstance(ax, (NominalRight, NominalLeft)):
        return (ax.individual,)
    return ()


@dataclass(frozen=True)
class TBox:
    axioms: tuple = ()
    signature: Signature = field(default_factory=Signature)

    def __post_init__(self):
        sig = self.signature
        for ax in self.axioms:
            for c in axiom_concepts(ax):
                if c not in sig.concept_names:
                    raise OntologyError(f"concept {c!r} missing from signature")
            for r in axiom_roles(ax):
                if base_role(r) not in sig.role_names:
                    raise OntologyError(f"role {r!r} missing from signature")
            for a in axiom_individuals(ax):
                if a not in sig.individual_names:
                    raise OntologyError(f"individual {a!r} missing from signature")
            if isinstance(ax, ConjSubsumption) and len(set(ax.lhs)) != len(ax.lhs):
                raise OntologyError(f"duplicate conjunct in {ax.text()!r}")

    @classmethod
    def of(cls, axioms: Iterable, signature: Signature | None = None) -> "TBox":
        """Build a TBox whose signature also covers every symbol used."""
        axioms = tuple(axioms)
        sig = (signature or Signature()).extended(
            [c for ax in axioms for c in axiom_concepts(ax)],
            [r for ax in axioms for r in axiom_roles(ax)],
            [a for ax in axioms for a in axiom_individuals(ax)],
        )
        return cls(axioms, sig)

    def used_concepts(self) -> set[str]:
        return {c for ax in self.axioms for c in axiom_concepts(ax)}

    def used_roles(self) -> set[str]:
        return {base_role(r) for ax in self.axioms for r in axiom_roles(ax)}

    def individuals(self) -> set[str]:
        return {a for ax in self.axioms for a in axiom_individuals(ax)}

    def text(self) -> str:
        return format_ontology(self)


# -- text format ----------------------------------------------------------------

_TOK = re.compile(r"\s+|<=|&|\{|\}|[A-Za-z_][A-Za-z0-9_]*-*|\S")


def _tokens(line: str, lineno: int):
    out = []
    for m in _TOK.finditer(line):
        t = m.group(0)
        if t.isspace():
            continue
        out.append((t, m.start() + 1))
    return out


def parse_ontology(text: str) -> TBox:
    concepts: list[str] = []
    roles: list[str] = []
    individuals: list[str] = []
    extras: dict[str, int] = {}
    kinds: dict[str, tuple[str, int]] = {}
    axioms = []

    def note(name, kind, lineno, col):
        if kind == "query":
            return kinds.get(name, ("",))[0]
        prev = kinds.get(name)
        if prev and prev[0] != kind:
            raise OntologyError(
                f"{name!r} used as {kind} but earlier as {prev[0]} (line {prev[1]})", lineno, col)
        kinds.setdefault(name, (kind, lineno))
        if kind == "concept" and name not in (TOP, BOT) and name not in concepts:
            concepts.append(name)
        elif kind == "role" and name not in roles:
            roles.append(name)
        elif kind == "individual" and name not in individuals:
            individuals.append(name)

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        toks = _tokens(line, lineno)
        if not toks:
            continue
        head = toks[0][0]
        if head in ("concept", "role", "individual"):
            for name, col in toks[1:]:
                if not is_identifier(name) or name in KEYWORDS:
                    raise OntologyError(f"bad {head} name {name!r}", lineno, col)
                note(name, head, lineno, col)
            continue
        if head == "predicate":
            if len(toks) != 3 or not toks[2][0].isdigit():
                raise OntologyError("expected 'predicate NAME ARITY'", lineno, toks[0][1])
            name, k = toks[1][0], int(toks[2][0])
            note(name, "predicate", lineno, toks[1][1])
            extras[name] = k
            continue
        axioms.append(_parse_axiom(toks, lineno, note))

    sig = Signature((TOP, BOT) + tuple(concepts), tuple(roles), tuple(individuals),
                    tuple(extras.items()))
    return TBox(tuple(axioms), sig)


def _parse_axiom(toks, lineno, note):
    texts = [t for t, _ in toks]
    if texts.count("<=") != 1:
        raise OntologyError("an axiom needs exactly one '<='", lineno, toks[0][1])
    k = texts.index("<=")
    lhs, rhs = toks[:k], toks[k + 1:]
    if not lhs or not rhs:
        raise OntologyError("empty side of '<='", lineno, toks[k][1])
    for t, col in toks:
        if t in ("(", ")") or t not in ("<=", "&", "{", "}") and not _TOK_NAME.match(t):
            raise OntologyError(
                f"unexpected {t!r}; nested or complex expressions are not in normal form",
                lineno, col)

    def concept(tok):
        t, col = tok
        if t.endswith("-") or t in KEYWORDS:
            raise OntologyError(f"expected a concept name, got {t!r}", lineno, col)
        note(t, "concept", lineno, col)
        return t

    def role(tok):
        t, col = tok
        if t.rstrip("-") in KEYWORDS or t in (TOP, BOT):
            raise OntologyError(f"expected a role name, got {t!r}", lineno, col)
        note(t.rstrip("-"), "role", lineno, col)
        return canon_role(t)

    def nominal(side):
        if len(side) == 3 and side[0][0] == "{" and side[2][0] == "}":
            t, col = side[1]
            if t.endswith("-") or t in KEYWORDS:
                raise OntologyError(f"bad individual {t!r}", lineno, col)
            note(t, "individual", lineno, col)
            return t
        return None

    lt = [t for t, _ in lhs]
    rt = [t for t, _ in rhs]
    not_nf = OntologyError("axiom is not in normal form", lineno, toks[0][1])

    a = nominal(lhs)
    if a is not None:
        if len(rhs) != 1:
            raise not_nf
        return NominalLeft(a, concept(rhs[0]))
    if lt[0] == "some":
        if len(lhs) != 3 or len(rhs) != 1:
            raise not_nf
        return ExistsLeft(role(lhs[1]), concept(lhs[2]), concept(rhs[0]))
    if "&" in lt:
        if len(rhs) != 1 or len(lhs) % 2 == 0 or any(
                lt[i] != "&" for i in range(1, len(lt), 2)):
            raise not_nf
        conj = tuple(concept(lhs[i]) for i in range(0, len(lhs), 2))
        if len(set(conj)) != len(conj):
            raise OntologyError("duplicate conjunct", lineno, lhs[0][1])
        return ConjSubsumption(conj, concept(rhs[0]))
    if len(lhs) != 1:
        raise not_nf
    left = lhs[0][0]
    if rt[0] == "some":
        if len(rhs) != 3:
            raise not_nf
        return ExistsRight(concept(lhs[0]), role(rhs[1]), concept(rhs[2]))
    if rt[0] == "max1":
        if len(rhs) != 3:
            raise not_nf
        return AtMostOne(concept(lhs[0]), role(rhs[1]), concept(rhs[2]))
    b = nominal(rhs)
    if b is not None:
        return NominalRight(concept(lhs[0]), b)
    if len(rhs) != 1:
        raise not_nf
    right = rhs[0][0]
    # Role inclusions are recognised by an explicit inverse marker or by the
    # symbol already being known as a role.
    if left.endswith("-") or right.endswith("-") or "role" in (
            note(left, "query", 0, 0), note(right, "query", 0, 0)):
        return RoleInclusion(role(lhs[0]), role(rhs[0]))
    return ConjSubsumption((concept(lhs[0]),), concept(rhs[0]))


_TOK_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*-*\Z")


def format_ontology(tbox: TBox) -> str:
    """Render a TBox so that ``parse_ontology`` restores it exactly."""
    sig = tbox.signature
    lines = []
    cs = [c for c in sig.concept_names if c not in (TOP, BOT)]
    if cs:
        lines.append("concept " + " ".join(cs))
    if sig.role_names:
        lines.append("role " + " ".join(sig.role_names))
    if sig.individual_names:
        lines.append("individual " + " ".join(sig.individual_names))
    for name, k in sig.extra_predicates:
        lines.append(f"predicate {name} {k}")
    lines += [ax.text() for ax in tbox.axioms]
    return "\n".join(lines) + "\n"


def saturate_role_hierarchy(tbox: TBox) -> dict[str, frozenset[str]]:
    """Reflexive-transitive, inverse-closed super-role map."""
    roles = tbox.signature.roles()
    edges: dict[str, set[str]] = {r: set() for r in roles}
    for ax in tbox.axioms:
        if isinstance(ax, RoleInclusion):
            edges[ax.sub].add(ax.sup)
            edges[inverse(ax.sub)].add(inverse(ax.sup))
    out = {}
    for r in roles:
        seen = {r}
        todo = [r]
        while todo:
            for t in edges[todo.pop()]:
                if t not in seen:
                    seen.add(t)
                    todo.append(t)
        out[r] = frozenset(seen)
    return out


# -- facts and states -------------------------------------------------------------


class Fact(NamedTuple):
    pred: str
    args: tuple

    def __str__(self):
        return f"{self.pred}({','.join(self.args)})"


@dataclass(frozen=True)
class State:
    facts: frozenset = frozenset()
    base: frozenset = frozenset()

    @classmethod
    def of(cls, facts: Iterable, base: Iterable[str] = ()) -> "State":
        return cls(frozenset(Fact(p, tuple(a)) for p, a in facts), frozenset(base))

    @property
    def objects(self) -> frozenset:
        return self.base | {a for f in self.facts for a in f.args}

    def with_facts(self, facts) -> "State":
        return State(frozenset(facts), self.base)

    def __iter__(self) -> Iterator[Fact]:
        return iter(sorted(self.facts))

    def __len__(self):
        return len(self.facts)


_FACT = re.compile(r"\s*([A-Za-z_][A-Za-z0-9_]*)\s*\(([^()]*)\)\s*\Z")


def parse_fact(text: str) -> Fact:
    m = _FACT.match(text)
    if not m:
        raise StateError(f"malformed fact {text.strip()!r}")
    args = tuple(a.strip() for a in m.group(2).split(",")) if m.group(2).strip() else ()
    for a in args:
        if not is_identifier(a):
            raise StateError(f"bad argument {a!r} in {text.strip()!r}")
    return Fact(m.group(1), args)


def parse_state(text: str, base: Iterable[str] = ()) -> State:
    facts = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            facts.append(parse_fact(line))
    return State(frozenset(facts), frozenset(base))


def format_state(s: State) -> str:
    return "".join(str(f) + "\n" for f in sorted(s.facts))


def validate_state(s: State, sig: Signature) -> None:
    for f in sorted(s.facts):
        if f.pred == BOT:
            raise StateError(f"{f}: states may not assert {BOT}")
        if is_reserved(f.pred) or any(is_reserved(a) for a in f.args):
            raise StateError(f"{f}: names starting with 'dl_' are reserved")
        k = sig.arity(f.pred)
        if k is None:
            raise StateError(f"{f}: unknown predicate {f.pred!r}")
        if k != len(f.args):
            raise StateError(f"{f}: arity {len(f.args)} but {f.pred!r} has arity {k}")
    for a in s.base:
        if is_reserved(a):
            raise StateError(f"object {a!r}: names starting with 'dl_' are reserved")
