"""Set-term rules: the intermediate form before sets become bit vectors.

A set of sort ``S`` is laid out as an optional individual slot followed by
one slot per base symbol.  Individuals only ever appear in singleton sets, so
``{a}`` is ``(a, 0, ..., 0)`` and an anonymous label ``X`` is
``(0, b_1, ..., b_m)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from ..ontology import Signature, TBox

IND = "@"  # name of the individual slot; never a legal symbol
INDEX_MARKERS = ("0", "1", "2")


@dataclass(frozen=True)
class SetSort:
    name: str
    symbols: tuple
    has_ind: bool = False

    @property
    def slots(self) -> tuple:
        return ((IND,) if self.has_ind else ()) + self.symbols

    @property
    def width(self) -> int:
        return len(self.slots)


@dataclass(frozen=True)
class Layout:
    """Symbol enumeration shared by all strata of one rewriting."""

    roles: tuple
    concepts: tuple

    @property
    def R(self) -> SetSort:
        return SetSort("R", self.roles)

    @property
    def X(self) -> SetSort:
        return SetSort("X", self.concepts, True)

    @property
    def RX(self) -> SetSort:
        return SetSort("RX", self.roles + self.concepts)

    @property
    def V(self) -> SetSort:
        return SetSort("V", self.roles + self.concepts + INDEX_MARKERS, True)

    @classmethod
    def for_signature(cls, sig: Signature, tbox: TBox | None = None,
                      extra_concepts=()) -> "Layout":
        """Concepts in signature order; top/bot only when an axiom mentions them."""
        used = tbox.used_concepts() if tbox is not None else set()
        cs = [c for c in sig.concept_names
              if c not in ("top", "bot") or c in used]
        for c in extra_concepts:
            if c not in cs:
                cs.append(c)
        return cls(sig.roles(), tuple(cs))


# -- set terms ------------------------------------------------------------------


@dataclass(frozen=True)
class SetVar:
    name: str
    sort: SetSort


@dataclass(frozen=True)
class SetLit:
    """``{c1, ..., cn}``; ``ind`` holds an individual (constant or element variable)."""

    symbols: frozenset
    sort: SetSort
    ind: object = None

    def __post_init__(self):
        bad = set(self.symbols) - set(self.sort.symbols)
        if bad:
            raise ValueError(f"symbols {sorted(bad)} not in sort {self.sort.name}")
        if self.ind is not None and (self.symbols or not self.sort.has_ind):
            raise ValueError("individuals only occur in singleton sets")


@dataclass(frozen=True)
class Union:
    parts: tuple
    sort: SetSort


SetTerm = SetVar | SetLit | Union


def lit(sort: SetSort, *symbols) -> SetLit:
    return SetLit(frozenset(symbols), sort)


def single(sort: SetSort, ind) -> SetLit:
    return SetLit(frozenset(), sort, ind)


def union(sort: SetSort, *parts) -> Union:
    return Union(tuple(parts), sort)


def term_symbols(t) -> set:
    """Symbols a term may contain (used to detect disjoint unions)."""
    if isinstance(t, SetVar):
        return set(t.sort.symbols)
    if isinstance(t, SetLit):
        return set(t.symbols)
    return set().union(*(term_symbols(p) for p in t.parts))


def may_have_ind(t) -> bool:
    if isinstance(t, SetVar):
        return t.sort.has_ind
    if isinstance(t, SetLit):
        return t.ind is not None
    return any(may_have_ind(p) for p in t.parts)


# -- rules ----------------------------------------------------------------------


@dataclass(frozen=True)
class SAtom:
    pred: str
    args: tuple


@dataclass(frozen=True)
class SLit:
    atom: SAtom
    positive: bool = True


@dataclass(frozen=True)
class Member:
    """``elem ∈ term``.  With ``individual=True`` the element is the individual slot."""

    elem: object
    term: object
    positive: bool = True
    individual: bool = False


@dataclass(frozen=True)
class SRule:
    head: tuple
    body: tuple
    label: str = ""


def A(pred, *args) -> SAtom:
    return SAtom(pred, tuple(args))


def P(pred, *args) -> SLit:
    return SLit(SAtom(pred, tuple(args)), True)


def N(pred, *args) -> SLit:
    return SLit(SAtom(pred, tuple(args)), False)


@dataclass
class Stratum:
    """Rules plus the sort of every argument position of their predicates."""

    name: str
    rules: list = field(default_factory=list)
    schema: dict = field(default_factory=dict)

    def declare(self, pred: str, *sorts) -> None:
        prev = self.schema.setdefault(pred, tuple(sorts))
        if prev != tuple(sorts):
            raise ValueError(f"conflicting sorts for {pred}")

    def add(self, head, body, label) -> None:
        heads = tuple(head) if isinstance(head, (list, tuple)) else (head,)
        self.rules.append(SRule(heads, tuple(body), label))
