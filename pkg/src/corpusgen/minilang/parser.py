"""Parser, type checker and pretty-printer for MiniLang.

Grammar, one statement per line::

    read_int x | read_str x | arr a[expr]
    x = expr | a[expr] = expr
    if expr ... [else ...] end
    while expr ... end
    print expr
    # comment

Expressions are integer and string literals, variables, ``a[e]``, the
arithmetic operators ``+ - * / %``, comparisons, ``and or not``,
``to_int(e)`` and ``len(e)``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from ..coverage import LanguageTag, Program, source_id
from ..errors import ParseError
from .syntax import (
    PRECEDENCE,
    UNARY_MINUS_PRECEDENCE,
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
    Stmt,
    StrLit,
    Unary,
    Var,
    While,
    expressions,
    subexpressions,
    walk,
)

INT_MIN = -(2**63)
INT_MAX = 2**63 - 1

KEYWORDS = {"read_int", "read_str", "arr", "if", "else", "end", "while", "print",
            "and", "or", "not", "to_int", "len"}
COMPARISONS = ("==", "!=", "<=", ">=", "<", ">")

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t]+)
  | (?P<comment>\#.*)
  | (?P<int>\d+)
  | (?P<str>"(?:[^"\\]|\\.)*")
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>==|!=|<=|>=|[-+*/%<>=()\[\]])
    """,
    re.VERBOSE,
)
_ESCAPES = {"n": "\n", "t": "\t", '"': '"', "\\": "\\"}


@dataclass(frozen=True)
class Token:
    kind: str  # int, str, name, op, eol
    value: object
    col: int


def tokenize_line(text: str, line: int) -> List[Token]:
    out = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos + 1)
        kind = m.lastgroup
        raw = m.group()
        if kind == "int":
            out.append(Token("int", int(raw), pos + 1))
        elif kind == "str":
            out.append(Token("str", _unescape(raw[1:-1], line, pos + 1), pos + 1))
        elif kind in ("name", "op"):
            out.append(Token(kind, raw, pos + 1))
        pos = m.end()
    out.append(Token("eol", None, len(text) + 1))
    return out


def _unescape(body: str, line: int, col: int) -> str:
    out = []
    i = 0
    while i < len(body):
        c = body[i]
        if c == "\\":
            nxt = body[i + 1]
            if nxt not in _ESCAPES:
                raise ParseError(f"unknown escape \\{nxt}", line, col + i + 1)
            out.append(_ESCAPES[nxt])
            i += 2
        else:
            out.append(c)
            i += 1
    return "".join(out)


def _escape(value: str) -> str:
    return (value.replace("\\", "\\\\").replace('"', '\\"')
            .replace("\n", "\\n").replace("\t", "\\t"))


class _ExprParser:
    def __init__(self, tokens: List[Token], line: int):
        self.tokens = tokens
        self.pos = 0
        self.line = line

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: Optional[Token] = None):
        tok = tok or self.peek()
        raise ParseError(message, self.line, tok.col)

    def expect_op(self, op: str) -> Token:
        tok = self.next()
        if tok.kind != "op" or tok.value != op:
            self.error(f"expected {op!r}", tok)
        return tok

    def expect_name(self) -> str:
        tok = self.next()
        if tok.kind != "name" or tok.value in KEYWORDS:
            self.error("expected a variable name", tok)
        return tok.value

    def expect_eol(self):
        if self.peek().kind != "eol":
            self.error("unexpected trailing input")

    def at_op(self, *ops) -> bool:
        tok = self.peek()
        return tok.kind == "op" and tok.value in ops

    def at_word(self, word) -> bool:
        tok = self.peek()
        return tok.kind == "name" and tok.value == word

    def expr(self):
        return self.or_expr()

    def or_expr(self):
        left = self.and_expr()
        while self.at_word("or"):
            self.next()
            left = Binary("or", left, self.and_expr())
        return left

    def and_expr(self):
        left = self.not_expr()
        while self.at_word("and"):
            self.next()
            left = Binary("and", left, self.not_expr())
        return left

    def not_expr(self):
        if self.at_word("not"):
            self.next()
            return Unary("not", self.not_expr())
        return self.comparison()

    def comparison(self):
        left = self.additive()
        if self.at_op(*COMPARISONS):
            op = self.next().value
            left = Binary(op, left, self.additive())
            if self.at_op(*COMPARISONS):
                self.error("comparisons do not chain")
        return left

    def additive(self):
        left = self.term()
        while self.at_op("+", "-"):
            op = self.next().value
            left = Binary(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.at_op("*", "/", "%"):
            op = self.next().value
            left = Binary(op, left, self.unary())
        return left

    def unary(self):
        if self.at_op("-"):
            self.next()
            tok = self.peek()
            if tok.kind == "int":
                self.next()
                if -tok.value < INT_MIN:
                    self.error("integer literal out of range", tok)
                return IntLit(-tok.value)
            return Unary("-", self.unary())
        return self.primary()

    def primary(self):
        tok = self.next()
        if tok.kind == "int":
            if tok.value > INT_MAX:
                self.error("integer literal out of range", tok)
            return IntLit(tok.value)
        if tok.kind == "str":
            return StrLit(tok.value)
        if tok.kind == "op" and tok.value == "(":
            inner = self.expr()
            self.expect_op(")")
            return inner
        if tok.kind == "name":
            if tok.value in ("to_int", "len"):
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return Call(tok.value, arg)
            if tok.value in KEYWORDS:
                self.error(f"unexpected keyword {tok.value!r}", tok)
            if self.at_op("["):
                self.next()
                idx = self.expr()
                self.expect_op("]")
                return Index(tok.value, idx)
            return Var(tok.value)
        self.error("expected an expression", tok)


class _Block:
    def __init__(self, kind: str, line: int, cond=None):
        self.kind = kind  # "root", "if", "while"
        self.line = line
        self.cond = cond
        self.then_body: List[Stmt] = []
        self.else_body: List[Stmt] = []
        self.else_line: Optional[int] = None

    @property
    def body(self) -> List[Stmt]:
        return self.else_body if self.else_line is not None else self.then_body


def _parse_statements(lines: List[str]) -> Tuple[Stmt, ...]:
    stack = [_Block("root", 0)]
    for lineno, text in enumerate(lines, start=1):
        tokens = tokenize_line(text, lineno)
        if tokens[0].kind == "eol":
            continue
        p = _ExprParser(tokens, lineno)
        head = tokens[0]
        top = stack[-1]
        if head.kind == "name" and head.value in ("read_int", "read_str"):
            p.next()
            name = p.expect_name()
            p.expect_eol()
            cls = ReadInt if head.value == "read_int" else ReadStr
            top.body.append(cls(lineno, name))
        elif head.kind == "name" and head.value == "arr":
            p.next()
            name = p.expect_name()
            p.expect_op("[")
            size = p.expr()
            p.expect_op("]")
            p.expect_eol()
            top.body.append(ArrDecl(lineno, name, size))
        elif head.kind == "name" and head.value == "print":
            p.next()
            value = p.expr()
            p.expect_eol()
            top.body.append(Print(lineno, value))
        elif head.kind == "name" and head.value in ("if", "while"):
            p.next()
            cond = p.expr()
            p.expect_eol()
            stack.append(_Block(head.value, lineno, cond))
        elif head.kind == "name" and head.value == "else":
            p.next()
            p.expect_eol()
            if top.kind != "if" or top.else_line is not None:
                raise ParseError("'else' without a matching 'if'", lineno, head.col)
            top.else_line = lineno
        elif head.kind == "name" and head.value == "end":
            p.next()
            p.expect_eol()
            if top.kind == "root":
                raise ParseError("'end' without an open block", lineno, head.col)
            stack.pop()
            if top.kind == "if":
                node = If(top.line, top.cond, tuple(top.then_body), tuple(top.else_body),
                          top.else_line, lineno)
            else:
                node = While(top.line, top.cond, tuple(top.then_body), lineno)
            stack[-1].body.append(node)
        elif head.kind == "name" and head.value not in KEYWORDS:
            name = p.expect_name()
            if p.at_op("["):
                p.next()
                idx = p.expr()
                p.expect_op("]")
                p.expect_op("=")
                value = p.expr()
                p.expect_eol()
                top.body.append(AssignIndex(lineno, name, idx, value))
            else:
                p.expect_op("=")
                value = p.expr()
                p.expect_eol()
                top.body.append(Assign(lineno, name, value))
        else:
            raise ParseError("expected a statement", lineno, head.col)
    if len(stack) > 1:
        open_block = stack[-1]
        raise ParseError(f"'{open_block.kind}' is never closed with 'end'", open_block.line)
    return tuple(stack[0].then_body)


# ---------------------------------------------------------------------------
# static types: every variable has one type for the whole program


def _expr_type(expr, env: Dict[str, str], line: int) -> Optional[str]:
    """Type of ``expr`` or None when it depends on a not-yet-typed variable."""
    if isinstance(expr, IntLit):
        return "int"
    if isinstance(expr, StrLit):
        return "str"
    if isinstance(expr, Var):
        return env.get(expr.name)
    if isinstance(expr, Index):
        t = env.get(expr.name)
        if t is not None and t != "arr":
            raise ParseError(f"{expr.name!r} is not an array", line)
        it = _expr_type(expr.index, env, line)
        if it is not None and it != "int":
            raise ParseError("array index must be an integer", line)
        return "int"
    if isinstance(expr, Call):
        t = _expr_type(expr.arg, env, line)
        if expr.func == "to_int":
            if t not in (None, "int", "str"):
                raise ParseError("to_int expects an integer or string", line)
        elif t not in (None, "arr", "str"):
            raise ParseError("len expects an array or string", line)
        return "int"
    if isinstance(expr, Unary):
        t = _expr_type(expr.operand, env, line)
        if t not in (None, "int"):
            raise ParseError(f"operator {expr.op!r} expects an integer", line)
        return "int"
    if isinstance(expr, Binary):
        lt = _expr_type(expr.left, env, line)
        rt = _expr_type(expr.right, env, line)
        if "arr" in (lt, rt):
            raise ParseError(f"operator {expr.op!r} cannot take an array", line)
        if expr.op in ("and", "or", "-", "*", "/", "%"):
            if "str" in (lt, rt):
                raise ParseError(f"operator {expr.op!r} expects integers", line)
            return "int"
        if lt is not None and rt is not None and lt != rt:
            raise ParseError(f"operator {expr.op!r} mixes {lt} and {rt}", line)
        if expr.op == "+":
            return lt or rt
        return "int"
    raise TypeError(expr)


def _declared(stmt) -> Optional[Tuple[str, Optional[str]]]:
    if isinstance(stmt, ReadInt):
        return stmt.name, "int"
    if isinstance(stmt, ReadStr):
        return stmt.name, "str"
    if isinstance(stmt, ArrDecl):
        return stmt.name, "arr"
    return None


def infer_types(body) -> Dict[str, str]:
    """Assign each variable its single type, raising ParseError on conflicts."""
    stmts = list(walk(body))
    env: Dict[str, str] = {}

    def bind(name, t, line):
        old = env.get(name)
        if old is not None and old != t:
            raise ParseError(f"variable {name!r} used as {old} and {t}", line)
        env[name] = t

    for stmt in stmts:
        d = _declared(stmt)
        if d:
            bind(d[0], d[1], stmt.line)
        elif isinstance(stmt, AssignIndex):
            bind(stmt.name, "arr", stmt.line)
    changed = True
    while changed:
        changed = False
        for stmt in stmts:
            if isinstance(stmt, Assign):
                t = _expr_type(stmt.value, env, stmt.line)
                if t == "arr":
                    raise ParseError("arrays cannot be copied", stmt.line)
                if t is not None and env.get(stmt.name) != t:
                    bind(stmt.name, t, stmt.line)
                    changed = True
    for stmt in stmts:
        for expr in expressions(stmt):
            t = _expr_type(expr, env, stmt.line)
            _require_known(expr, env, stmt.line)
            if isinstance(stmt, (If, While)) and t != "int":
                raise ParseError("condition must be an integer", stmt.line)
            if isinstance(stmt, Print) and t not in ("int", "str"):
                raise ParseError("print expects an integer or string", stmt.line)
            if isinstance(stmt, ArrDecl) and t != "int":
                raise ParseError("array size must be an integer", stmt.line)
            if isinstance(stmt, AssignIndex) and t != "int":
                raise ParseError("arrays hold integers", stmt.line)
        if isinstance(stmt, Assign) and stmt.name not in env:
            raise ParseError(f"cannot infer the type of {stmt.name!r}", stmt.line)
    return env


def _require_known(expr, env, line):
    for sub in subexpressions(expr):
        name = getattr(sub, "name", None)
        if isinstance(sub, (Var, Index)) and name not in env:
            raise ParseError(f"undefined variable {name!r}", line)
        if isinstance(sub, Var) and env[name] == "arr":
            raise ParseError(f"array {name!r} used as a value", line)


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MiniProgram:
    """A parsed MiniLang program together with its coverage-model view."""

    program: Program
    body: Tuple[Stmt, ...]
    types: Tuple[Tuple[str, str], ...]

    @property
    def program_id(self) -> str:
        return self.program.program_id

    @property
    def source(self) -> str:
        return self.program.source

    def type_of(self, name: str) -> str:
        return dict(self.types)[name]


def parse_program(text: str, program_id: Optional[str] = None) -> MiniProgram:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    body = _parse_statements(lines)
    types = infer_types(body)
    executable = {stmt.line for stmt in walk(body)}
    program = Program(
        program_id or source_id(text),
        tuple(lines),
        frozenset(executable),
        LanguageTag.MINILANG,
    )
    return MiniProgram(program, body, tuple(sorted(types.items())))


# ---------------------------------------------------------------------------
# serialization back to source


def format_expr(expr, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(expr, IntLit):
        text = str(expr.value)
        return f"({text})" if expr.value < 0 and parent_prec >= UNARY_MINUS_PRECEDENCE else text
    if isinstance(expr, StrLit):
        return f'"{_escape(expr.value)}"'
    if isinstance(expr, Var):
        return expr.name
    if isinstance(expr, Index):
        return f"{expr.name}[{format_expr(expr.index)}]"
    if isinstance(expr, Call):
        return f"{expr.func}({format_expr(expr.arg)})"
    if isinstance(expr, Unary):
        if expr.op == "not":
            prec = PRECEDENCE["not"]
            text = f"not {format_expr(expr.operand, prec)}"
        else:
            prec = UNARY_MINUS_PRECEDENCE
            inner = format_expr(expr.operand, prec)
            # keep "-(5)" from re-parsing as the literal -5
            if isinstance(expr.operand, IntLit) and not inner.startswith("("):
                inner = f"({inner})"
            text = f"-{inner}"
        return f"({text})" if prec < parent_prec else text
    if isinstance(expr, Binary):
        prec = PRECEDENCE[expr.op]
        # comparisons do not chain, so a comparison on the left needs parens too
        left = format_expr(expr.left, prec + 1 if expr.op in COMPARISONS else prec)
        # left-associative: an equal-precedence right operand needs parens
        right = format_expr(expr.right, prec + 1)
        text = f"{left} {expr.op} {right}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(expr)


def _format_stmt(stmt) -> str:
    if isinstance(stmt, ReadInt):
        return f"read_int {stmt.name}"
    if isinstance(stmt, ReadStr):
        return f"read_str {stmt.name}"
    if isinstance(stmt, ArrDecl):
        return f"arr {stmt.name}[{format_expr(stmt.size)}]"
    if isinstance(stmt, Assign):
        return f"{stmt.name} = {format_expr(stmt.value)}"
    if isinstance(stmt, AssignIndex):
        return f"{stmt.name}[{format_expr(stmt.index)}] = {format_expr(stmt.value)}"
    if isinstance(stmt, Print):
        return f"print {format_expr(stmt.value)}"
    if isinstance(stmt, If):
        return f"if {format_expr(stmt.cond)}"
    if isinstance(stmt, While):
        return f"while {format_expr(stmt.cond)}"
    raise TypeError(stmt)


def serialize(prog_or_body) -> str:
    """Write a tree back out, keeping every statement on its recorded line."""
    body = prog_or_body.body if isinstance(prog_or_body, MiniProgram) else prog_or_body
    placed: Dict[int, str] = {}

    def emit(stmts, depth):
        pad = "  " * depth
        for stmt in stmts:
            placed[stmt.line] = pad + _format_stmt(stmt)
            if isinstance(stmt, If):
                emit(stmt.then_body, depth + 1)
                if stmt.else_line is not None:
                    placed[stmt.else_line] = pad + "else"
                    emit(stmt.else_body, depth + 1)
                placed[stmt.end_line] = pad + "end"
            elif isinstance(stmt, While):
                emit(stmt.body, depth + 1)
                placed[stmt.end_line] = pad + "end"

    emit(body, 0)
    if not placed:
        return ""
    last = max(placed)
    return "\n".join(placed.get(i, "") for i in range(1, last + 1)) + "\n"
