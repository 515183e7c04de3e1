"""Programs as sets of executable lines, and the statement-coverage algebra.

Coverage is tracked per executable line.  Percentages stay exact
(:class:`fractions.Fraction`) and are only rounded when rendered, so a full
corpus compares equal to 100 without floating-point slack.

The annotated listing is the text format exchanged with language models: each
source line is prefixed with a marker and a single space, ``>`` for a covered
executable line, ``!`` for an uncovered one and a blank for lines that hold no
statement.
"""

from __future__ import annotations

import enum
import hashlib
from dataclasses import dataclass, field
from fractions import Fraction
from typing import FrozenSet, Iterable, Sequence, Tuple

from .errors import DegenerateProgram, PredictionParseError, ProgramMismatch
from .rendering import format_decimal

COVERED = ">"
UNCOVERED = "!"
NON_EXECUTABLE = " "
MARKERS = (COVERED, UNCOVERED, NON_EXECUTABLE)


class LanguageTag(str, enum.Enum):
    MINILANG = "minilang"
    EXTERNAL = "external"


def source_id(text: str) -> str:
    """Stable short identifier derived from program text."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


@dataclass(frozen=True)
class Program:
    program_id: str
    source_lines: Tuple[str, ...]
    executable: FrozenSet[int]
    language_tag: LanguageTag = LanguageTag.MINILANG

    def __post_init__(self):
        object.__setattr__(self, "source_lines", tuple(self.source_lines))
        object.__setattr__(self, "executable", frozenset(self.executable))
        n = len(self.source_lines)
        bad = [i for i in self.executable if not 1 <= i <= n]
        if bad:
            raise ValueError(f"executable lines out of range 1..{n}: {sorted(bad)}")

    @property
    def denominator(self) -> int:
        return len(self.executable)

    @property
    def source(self) -> str:
        return "\n".join(self.source_lines)

    def coverage(self, lines: Iterable[int] = ()) -> "CoverageMap":
        """Build a coverage map for this program, validating the line set."""
        lines = frozenset(lines)
        stray = lines - self.executable
        if stray:
            raise ValueError(f"lines {sorted(stray)} are not executable in {self.program_id}")
        return CoverageMap(self.program_id, lines, self.denominator)

    def full_coverage(self) -> "CoverageMap":
        return self.coverage(self.executable)


@dataclass(frozen=True)
class CoverageMap:
    program_id: str
    covered: FrozenSet[int]
    denominator: int

    def __post_init__(self):
        object.__setattr__(self, "covered", frozenset(self.covered))
        if len(self.covered) > self.denominator:
            raise ValueError("more covered lines than executable lines")

    def __len__(self) -> int:
        return len(self.covered)

    def __or__(self, other: "CoverageMap") -> "CoverageMap":
        return union(self, other)

    def issubset(self, other: "CoverageMap") -> bool:
        check_same_program(self, other)
        return self.covered <= other.covered

    def to_json(self) -> list:
        return sorted(self.covered)


def check_same_program(a: CoverageMap, b: CoverageMap) -> None:
    if a.program_id != b.program_id or a.denominator != b.denominator:
        raise ProgramMismatch(
            f"coverage of {a.program_id!r}/{a.denominator} vs {b.program_id!r}/{b.denominator}"
        )


def union(a: CoverageMap, b: CoverageMap) -> CoverageMap:
    check_same_program(a, b)
    return CoverageMap(a.program_id, a.covered | b.covered, a.denominator)


def union_all(maps: Iterable[CoverageMap], empty: CoverageMap) -> CoverageMap:
    result = empty
    for m in maps:
        result = union(result, m)
    return result


def strictly_extends(pred: CoverageMap, cum: CoverageMap) -> bool:
    """True iff adding ``pred`` to ``cum`` covers at least one more line."""
    check_same_program(pred, cum)
    return not pred.covered <= cum.covered


def percent(cov: CoverageMap) -> Fraction:
    if cov.denominator <= 0:
        raise DegenerateProgram(f"program {cov.program_id!r} has no executable lines")
    return Fraction(100 * len(cov.covered), cov.denominator)


def is_complete(cov: CoverageMap) -> bool:
    return percent(cov) == 100


def format_percent(cov: CoverageMap, places: int = 2, truncate: bool = False) -> str:
    return format_decimal(percent(cov), places, truncate=truncate)


@dataclass(frozen=True)
class AnnotatedListing:
    lines: Tuple[Tuple[str, str], ...] = field(default_factory=tuple)

    def __str__(self) -> str:
        return "".join(f"{marker} {text}\n" for marker, text in self.lines)

    @property
    def text(self) -> str:
        return str(self)


def render_annotated(p: Program, cov: CoverageMap) -> AnnotatedListing:
    if cov.program_id != p.program_id or cov.denominator != p.denominator:
        raise ProgramMismatch(f"coverage of {cov.program_id!r} rendered against {p.program_id!r}")
    out = []
    for lineno, text in enumerate(p.source_lines, start=1):
        if lineno not in p.executable:
            marker = NON_EXECUTABLE
        elif lineno in cov.covered:
            marker = COVERED
        else:
            marker = UNCOVERED
        out.append((marker, text))
    return AnnotatedListing(tuple(out))


def _split_listing(text: str) -> Sequence[str]:
    rows = text.split("\n")
    if rows and rows[-1] == "":
        rows.pop()
    return rows


def parse_annotated(text: str, p: Program) -> CoverageMap:
    """Recover the covered set from an annotated listing of ``p``.

    Executable lines must carry ``>`` or ``!``.  Markers on non-executable
    lines are tolerated and ignored, since they cannot carry coverage.
    """
    rows = _split_listing(text)
    if len(rows) != len(p.source_lines):
        raise PredictionParseError(
            f"listing has {len(rows)} lines, program {p.program_id!r} has {len(p.source_lines)}"
        )
    covered = set()
    for lineno, row in enumerate(rows, start=1):
        marker = row[:1] or NON_EXECUTABLE
        if marker not in MARKERS:
            raise PredictionParseError(f"line {lineno}: unknown marker {marker!r}")
        if len(row) > 1 and row[1] != " ":
            raise PredictionParseError(f"line {lineno}: marker must be followed by a space")
        if lineno not in p.executable:
            continue
        if marker == NON_EXECUTABLE:
            raise PredictionParseError(f"line {lineno}: executable line without '>' or '!'")
        if marker == COVERED:
            covered.add(lineno)
    return p.coverage(covered)
