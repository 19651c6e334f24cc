"""S-expression reader used by the task, query and PDDL formats.

Atoms keep their source position so that parse errors downstream can point
at the offending token.
"""
from __future__ import annotations

import re


class SExpError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line else ""
        super().__init__(where + message)


class Sym(str):
    """A bare token."""

    line = 0
    col = 0

    def __new__(cls, text: str, line: int = 0, col: int = 0):
        obj = super().__new__(cls, text)
        obj.line = line
        obj.col = col
        return obj


class Quoted(Sym):
    """A double-quoted string literal."""


class SList(list):
    line = 0
    col = 0


_TOKEN = re.compile(r'\s+|;[^\n]*|\(|\)|"(?:[^"\\]|\\.)*"|[^\s()";]+')


def tokenize(text: str):
    pos = 0
    line, line_start = 1, 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise SExpError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        tok = m.group(0)
        col = pos - line_start + 1
        if not (tok[0].isspace() or tok[0] == ";"):
            yield tok, line, col
        nl = tok.count("\n")
        if nl:
            line += nl
            line_start = pos + tok.rfind("\n") + 1
        pos = m.end()


def parse_all(text: str) -> list:
    """Read every top-level expression in ``text``."""
    stack: list[SList] = [SList()]
    for tok, line, col in tokenize(text):
        if tok == "(":
            lst = SList()
            lst.line, lst.col = line, col
            stack[-1].append(lst)
            stack.append(lst)
        elif tok == ")":
            if len(stack) == 1:
                raise SExpError("unbalanced ')'", line, col)
            stack.pop()
        elif tok.startswith('"'):
            stack[-1].append(Quoted(tok[1:-1].replace('\\"', '"'), line, col))
        else:
            stack[-1].append(Sym(tok, line, col))
    if len(stack) != 1:
        open_ = stack[-1]
        raise SExpError("unclosed '('", open_.line, open_.col)
    return stack[0]


def parse_one(text: str):
    items = parse_all(text)
    if len(items) != 1:
        raise SExpError(f"expected exactly one expression, found {len(items)}")
    return items[0]


def where(node) -> tuple[int, int]:
    return getattr(node, "line", 0), getattr(node, "col", 0)


def fail(node, message: str):
    line, col = where(node)
    raise SExpError(message, line, col)
