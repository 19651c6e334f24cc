"""Variables shared by the query, rule and action layers."""
from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True, order=True)
class Var:
    name: str

    def __str__(self) -> str:
        return "?" + self.name


def is_var(t) -> bool:
    return isinstance(t, Var)


RESERVED_PREFIX = "dl_"


def is_reserved(name: str) -> bool:
    return name.lower().startswith(RESERVED_PREFIX)
