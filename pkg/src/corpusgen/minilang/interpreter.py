"""Tracing tree-walk interpreter for MiniLang.

Execution is a pure function of (program, input tokens, step limit).  A line
counts as covered as soon as its statement begins evaluation, so a statement
that fails is still covered.  Runtime errors are returned as data in the
outcome, never raised.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Union

from ..coverage import CoverageMap
from ..testcase import TestCase
from .parser import INT_MAX, INT_MIN, MiniProgram
from .syntax import (
    ArrDecl,
    Assign,
    AssignIndex,
    Binary,
    Call,
    If,
    Index,
    IntLit,
    Print,
    ReadInt,
    ReadStr,
    StrLit,
    Unary,
    Var,
    While,
)

DEFAULT_STEP_LIMIT = 1_000_000
_INT_TOKEN = re.compile(r"[+-]?[0-9]+")


class ErrorKind(str, enum.Enum):
    INPUT_MISMATCH = "input_mismatch"
    INPUT_EXHAUSTED = "input_exhausted"
    ARITHMETIC = "arithmetic"
    NUMBER_FORMAT = "number_format"
    INDEX_OUT_OF_BOUNDS = "index_out_of_bounds"


class Status(str, enum.Enum):
    NORMAL = "normal"
    RUNTIME_ERROR = "runtime_error"
    STEP_LIMIT_EXCEEDED = "step_limit_exceeded"


@dataclass(frozen=True)
class RuntimeFault:
    kind: ErrorKind
    line: Optional[int] = None

    def to_json(self) -> dict:
        return {"kind": self.kind.value, "line": self.line}

    @classmethod
    def from_json(cls, data: Optional[dict]) -> Optional["RuntimeFault"]:
        if not data:
            return None
        return cls(ErrorKind(data["kind"]), data.get("line"))


@dataclass(frozen=True)
class ExecutionOutcome:
    covered: CoverageMap
    status: Status
    fault: Optional[RuntimeFault] = None
    output: str = ""
    steps: int = 0
    tokens_consumed: int = 0

    @property
    def is_error(self) -> bool:
        return self.status is Status.RUNTIME_ERROR


class _Fault(Exception):
    def __init__(self, kind: ErrorKind, line: int):
        self.kind = kind
        self.line = line


class _OutOfSteps(Exception):
    pass


def _checked(value: int, line: int) -> int:
    if value < INT_MIN or value > INT_MAX:
        raise _Fault(ErrorKind.ARITHMETIC, line)
    return value


def _parse_int(token: str) -> Optional[int]:
    if not _INT_TOKEN.fullmatch(token):
        return None
    value = int(token)
    if value < INT_MIN or value > INT_MAX:
        return None
    return value


def _default(kind: str):
    if kind == "int":
        return 0
    if kind == "str":
        return ""
    return []


@dataclass
class _Machine:
    prog: MiniProgram
    tokens: Sequence[str]
    step_limit: int
    steps: int = 0
    pos: int = 0
    covered: set = field(default_factory=set)
    out: List[str] = field(default_factory=list)
    env: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.env = {name: _default(kind) for name, kind in self.prog.types}

    def tick(self, line: int, cost: int = 1):
        if self.steps + cost > self.step_limit:
            raise _OutOfSteps()
        self.steps += cost
        self.covered.add(line)

    def next_token(self, line: int) -> str:
        if self.pos >= len(self.tokens):
            raise _Fault(ErrorKind.INPUT_EXHAUSTED, line)
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def run(self, body):
        for stmt in body:
            self.exec(stmt)

    def exec(self, stmt):
        line = stmt.line
        if isinstance(stmt, While):
            while True:
                self.tick(line)
                if not self.eval(stmt.cond, line):
                    return
                self.run(stmt.body)
        self.tick(line)
        if isinstance(stmt, If):
            self.run(stmt.then_body if self.eval(stmt.cond, line) else stmt.else_body)
        elif isinstance(stmt, ReadInt):
            tok = self.next_token(line)
            value = _parse_int(tok)
            if value is None:
                raise _Fault(ErrorKind.INPUT_MISMATCH, line)
            self.env[stmt.name] = value
        elif isinstance(stmt, ReadStr):
            self.env[stmt.name] = self.next_token(line)
        elif isinstance(stmt, ArrDecl):
            size = self.eval(stmt.size, line)
            if size < 0:
                raise _Fault(ErrorKind.INDEX_OUT_OF_BOUNDS, line)
            # allocation is charged cell by cell against the step budget
            if self.steps + size > self.step_limit:
                raise _OutOfSteps()
            self.steps += size
            self.env[stmt.name] = [0] * size
        elif isinstance(stmt, Assign):
            self.env[stmt.name] = self.eval(stmt.value, line)
        elif isinstance(stmt, AssignIndex):
            arr = self.env[stmt.name]
            idx = self.eval(stmt.index, line)
            value = self.eval(stmt.value, line)
            if not 0 <= idx < len(arr):
                raise _Fault(ErrorKind.INDEX_OUT_OF_BOUNDS, line)
            arr[idx] = value
        elif isinstance(stmt, Print):
            self.out.append(str(self.eval(stmt.value, line)))
        else:
            raise TypeError(stmt)

    def eval(self, expr, line: int):
        if isinstance(expr, IntLit):
            return expr.value
        if isinstance(expr, StrLit):
            return expr.value
        if isinstance(expr, Var):
            return self.env[expr.name]
        if isinstance(expr, Index):
            arr = self.env[expr.name]
            idx = self.eval(expr.index, line)
            if not 0 <= idx < len(arr):
                raise _Fault(ErrorKind.INDEX_OUT_OF_BOUNDS, line)
            return arr[idx]
        if isinstance(expr, Call):
            value = self.eval(expr.arg, line)
            if expr.func == "len":
                return len(value)
            if isinstance(value, int):
                return value
            parsed = _parse_int(value)
            if parsed is None:
                raise _Fault(ErrorKind.NUMBER_FORMAT, line)
            return parsed
        if isinstance(expr, Unary):
            value = self.eval(expr.operand, line)
            if expr.op == "not":
                return int(not value)
            return _checked(-value, line)
        if isinstance(expr, Binary):
            return self.binary(expr, line)
        raise TypeError(expr)

    def binary(self, expr: Binary, line: int):
        op = expr.op
        left = self.eval(expr.left, line)
        if op == "and":
            return int(bool(left) and bool(self.eval(expr.right, line)))
        if op == "or":
            return int(bool(left) or bool(self.eval(expr.right, line)))
        right = self.eval(expr.right, line)
        if op == "+":
            if isinstance(left, str):
                return left + right
            return _checked(left + right, line)
        if op == "-":
            return _checked(left - right, line)
        if op == "*":
            return _checked(left * right, line)
        if op in ("/", "%"):
            if right == 0:
                raise _Fault(ErrorKind.ARITHMETIC, line)
            # truncating division, remainder takes the dividend's sign
            quot = abs(left) // abs(right)
            if (left < 0) != (right < 0):
                quot = -quot
            if op == "/":
                return _checked(quot, line)
            return left - right * quot
        if op == "==":
            return int(left == right)
        if op == "!=":
            return int(left != right)
        if op == "<":
            return int(left < right)
        if op == "<=":
            return int(left <= right)
        if op == ">":
            return int(left > right)
        if op == ">=":
            return int(left >= right)
        raise TypeError(op)


def execute(
    prog: MiniProgram,
    test: Union[TestCase, Sequence[str]],
    step_limit: int = DEFAULT_STEP_LIMIT,
) -> ExecutionOutcome:
    if step_limit <= 0:
        raise ValueError("step_limit must be positive")
    tokens = test.tokens if isinstance(test, TestCase) else tuple(test)
    m = _Machine(prog, tokens, step_limit)
    status, fault = Status.NORMAL, None
    try:
        m.run(prog.body)
    except _Fault as exc:
        status, fault = Status.RUNTIME_ERROR, RuntimeFault(exc.kind, exc.line)
    except _OutOfSteps:
        status = Status.STEP_LIMIT_EXCEEDED
    output = "".join(line + "\n" for line in m.out)
    return ExecutionOutcome(
        covered=prog.program.coverage(m.covered),
        status=status,
        fault=fault,
        output=output,
        steps=m.steps,
        tokens_consumed=m.pos,
    )
