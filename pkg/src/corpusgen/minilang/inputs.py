"""Static facts about what a MiniLang program reads and compares against."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .parser import MiniProgram
from .syntax import (If, IntLit, ReadInt, ReadStr, StrLit, While, expressions,
                     subexpressions, walk)


@dataclass(frozen=True)
class ReadSite:
    line: int
    kind: str  # "int" or "str"
    name: str
    loop_depth: int


def read_plan(prog: MiniProgram) -> List[ReadSite]:
    """Read statements in source order with their loop nesting depth."""
    sites: List[ReadSite] = []

    def visit(body, depth):
        for stmt in body:
            if isinstance(stmt, ReadInt):
                sites.append(ReadSite(stmt.line, "int", stmt.name, depth))
            elif isinstance(stmt, ReadStr):
                sites.append(ReadSite(stmt.line, "str", stmt.name, depth))
            elif isinstance(stmt, If):
                visit(stmt.then_body, depth)
                visit(stmt.else_body, depth)
            elif isinstance(stmt, While):
                visit(stmt.body, depth + 1)

    visit(prog.body, 0)
    return sites


def describe_input_format(prog: MiniProgram) -> str:
    """Human-readable input format used in generation prompts."""
    sites = read_plan(prog)
    if not sites:
        return "The program reads no input."
    parts = []
    for site in sites:
        kind = "integer" if site.kind == "int" else "string token"
        where = " (read repeatedly inside a loop)" if site.loop_depth else ""
        parts.append(f"{kind} `{site.name}`{where}")
    return ("Whitespace-separated tokens, consumed in this order: "
            + "; ".join(parts) + ".")


def literals_by_line(prog: MiniProgram) -> Dict[int, Tuple[Tuple[int, ...], Tuple[str, ...]]]:
    """Integer and string literals appearing on each executable line."""
    found: Dict[int, Tuple[Tuple[int, ...], Tuple[str, ...]]] = {}
    for stmt in walk(prog.body):
        ints, strs = [], []
        for expr in expressions(stmt):
            for sub in subexpressions(expr):
                if isinstance(sub, IntLit):
                    ints.append(sub.value)
                elif isinstance(sub, StrLit):
                    strs.append(sub.value)
        found[stmt.line] = (tuple(ints), tuple(strs))
    return found
