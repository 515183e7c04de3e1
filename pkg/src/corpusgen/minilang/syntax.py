"""MiniLang abstract syntax tree.

Every statement records the 1-based source line it was parsed from; ``if``
and ``while`` additionally record the lines of their ``else``/``end``
keywords so that a tree can be written back out line for line.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple, Union


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class StrLit:
    value: str


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Index:
    name: str
    index: "Expr"


@dataclass(frozen=True)
class Unary:
    op: str  # "-" or "not"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str  # "to_int" or "len"
    arg: "Expr"


Expr = Union[IntLit, StrLit, Var, Index, Unary, Binary, Call]


@dataclass(frozen=True)
class ReadInt:
    line: int
    name: str


@dataclass(frozen=True)
class ReadStr:
    line: int
    name: str


@dataclass(frozen=True)
class ArrDecl:
    line: int
    name: str
    size: Expr


@dataclass(frozen=True)
class Assign:
    line: int
    name: str
    value: Expr


@dataclass(frozen=True)
class AssignIndex:
    line: int
    name: str
    index: Expr
    value: Expr


@dataclass(frozen=True)
class Print:
    line: int
    value: Expr


@dataclass(frozen=True)
class If:
    line: int
    cond: Expr
    then_body: Tuple["Stmt", ...]
    else_body: Tuple["Stmt", ...]
    else_line: Optional[int]
    end_line: int


@dataclass(frozen=True)
class While:
    line: int
    cond: Expr
    body: Tuple["Stmt", ...]
    end_line: int


Stmt = Union[ReadInt, ReadStr, ArrDecl, Assign, AssignIndex, Print, If, While]

# binding strength, loosest first
PRECEDENCE = {
    "or": 1,
    "and": 2,
    "not": 3,
    "==": 4, "!=": 4, "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}
UNARY_MINUS_PRECEDENCE = 7


def walk(body):
    """Yield every statement in ``body`` depth-first, in source order."""
    for stmt in body:
        yield stmt
        if isinstance(stmt, If):
            yield from walk(stmt.then_body)
            yield from walk(stmt.else_body)
        elif isinstance(stmt, While):
            yield from walk(stmt.body)


def expressions(stmt):
    """The expressions a single statement evaluates (not its children's)."""
    if isinstance(stmt, ArrDecl):
        return (stmt.size,)
    if isinstance(stmt, Assign):
        return (stmt.value,)
    if isinstance(stmt, AssignIndex):
        return (stmt.index, stmt.value)
    if isinstance(stmt, Print):
        return (stmt.value,)
    if isinstance(stmt, (If, While)):
        return (stmt.cond,)
    return ()


def subexpressions(expr):
    yield expr
    if isinstance(expr, Index):
        yield from subexpressions(expr.index)
    elif isinstance(expr, Unary):
        yield from subexpressions(expr.operand)
    elif isinstance(expr, Binary):
        yield from subexpressions(expr.left)
        yield from subexpressions(expr.right)
    elif isinstance(expr, Call):
        yield from subexpressions(expr.arg)
