"""Coverage predictor: estimates which lines a test input reaches.

The language-model predictor asks for the annotated listing directly and
parses it with :func:`corpusgen.coverage.parse_annotated`.  The oracle
predictor executes MiniLang programs and is exact by construction; it is the
reference the model predictor is scored against.
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Protocol, Tuple

from .coverage import CoverageMap, Program, check_same_program, parse_annotated, render_annotated
from .errors import PredictionExhausted, PredictionParseError
from .minilang import (DEFAULT_STEP_LIMIT, ErrorKind, ExecutionOutcome, MiniProgram,
                       RuntimeFault, execute)
from .testcase import TestCase
from .transport import ChatRequest, ChatTransport

PREDICTION_REPROMPTS = 3
PREDICTION_TEMPERATURE = 0.0

SYSTEM_PROMPT = "You predict statement coverage of programs without running them."

ERROR_LINE = "Runtime Error:"

_JAVA_NAMES = {
    "inputmismatchexception": ErrorKind.INPUT_MISMATCH,
    "nosuchelementexception": ErrorKind.INPUT_EXHAUSTED,
    "arithmeticexception": ErrorKind.ARITHMETIC,
    "numberformatexception": ErrorKind.NUMBER_FORMAT,
    "arrayindexoutofboundsexception": ErrorKind.INDEX_OUT_OF_BOUNDS,
    "indexoutofboundsexception": ErrorKind.INDEX_OUT_OF_BOUNDS,
}


class ProviderTag(str, enum.Enum):
    LLM = "llm"
    ORACLE = "oracle"
    REPLAY = "replay"


@dataclass(frozen=True)
class Prediction:
    coverage: CoverageMap
    predicted_error: Optional[RuntimeFault] = None
    provider_tag: ProviderTag = ProviderTag.ORACLE


class Predictor(Protocol):
    def predict(self, program: Program, test: TestCase) -> Prediction: ...


def build_prediction_prompt(p: Program, t: TestCase, language: str = "MiniLang") -> str:
    width = len(str(len(p.source_lines)))
    numbered = "".join(f"{i:>{width}}| {text}\n" for i, text in enumerate(p.source_lines, start=1))
    kinds = ", ".join(k.value for k in ErrorKind)
    return (
        f"Predict the statement coverage of the {language} program below when it runs on "
        "the given test input. Do not assume anything beyond the program text.\n"
        "Program (line numbers are not part of the source):\n"
        f"{numbered}"
        "Test input (whitespace-separated tokens, read in order):\n"
        f"{t.canonical_text}\n"
        f"Answer with exactly {len(p.source_lines)} lines, one per source line and in order. "
        "Start each line with a marker and one space, then copy the source line unchanged:\n"
        "'>' if the line holds a statement that is executed at least once,\n"
        "'!' if the line holds a statement that is never executed,\n"
        "' ' (a space) if the line holds no statement (blank, comment, else, end).\n"
        f"After the listing add one line '{ERROR_LINE} <kind> at line <n>' if the program "
        f"stops with a runtime error, where <kind> is one of: {kinds}. "
        f"Otherwise add '{ERROR_LINE} none'.\n"
    )


_ERROR_RE = re.compile(r"^\s*runtime error:\s*(?P<kind>[A-Za-z_]+)(?:\s+at\s+line\s+(?P<line>\d+))?",
                       re.IGNORECASE)


def _parse_error_line(row: str) -> Optional[RuntimeFault]:
    m = _ERROR_RE.match(row)
    if m is None:
        raise PredictionParseError(f"unreadable error line {row!r}")
    name = m.group("kind").lower()
    if name == "none":
        return None
    kind = _JAVA_NAMES.get(name)
    if kind is None:
        try:
            kind = ErrorKind(name)
        except ValueError:
            raise PredictionParseError(f"unknown error kind {m.group('kind')!r}") from None
    line = int(m.group("line")) if m.group("line") else None
    return RuntimeFault(kind, line)


def parse_prediction(response: str, p: Program) -> Tuple[CoverageMap, Optional[RuntimeFault]]:
    """Split a reply into its annotated listing and optional error line."""
    rows = [r for r in response.split("\n") if not r.lstrip().startswith("```")]
    fault = None
    error_rows = [i for i, r in enumerate(rows) if r.strip().lower().startswith(ERROR_LINE.lower())]
    if error_rows:
        i = error_rows[-1]
        fault = _parse_error_line(rows[i])
        rows = rows[:i]
    while rows and rows[-1].strip() == "" and len(rows) > len(p.source_lines):
        rows.pop()
    if len(rows) > len(p.source_lines):
        # tolerate prose in front of the listing
        rows = rows[-len(p.source_lines):]
    coverage = parse_annotated("\n".join(rows), p)
    if fault is not None and fault.line is not None and fault.line not in coverage.covered:
        raise PredictionParseError(f"error reported on line {fault.line}, which is not covered")
    return coverage, fault


class LLMPredictor:
    def __init__(self, transport: ChatTransport, model: Optional[str] = None,
                 temperature: float = PREDICTION_TEMPERATURE,
                 reprompts: int = PREDICTION_REPROMPTS, language: str = "MiniLang"):
        self.transport = transport
        self.model = model or transport.default_model()
        self.temperature = temperature
        self.reprompts = reprompts
        self.language = language

    def predict(self, program: Program, test: TestCase) -> Prediction:
        prompt = build_prediction_prompt(program, test, self.language)
        user = prompt
        tag = ProviderTag.REPLAY if self.transport.mode == "replay" else ProviderTag.LLM
        for _ in range(self.reprompts + 1):
            reply = self.transport.complete(
                ChatRequest(self.model, SYSTEM_PROMPT, user, self.temperature))
            try:
                coverage, fault = parse_prediction(reply, program)
            except PredictionParseError as exc:
                user = (f"{prompt}\nYour previous answer could not be parsed ({exc}). "
                        "Follow the answer format exactly.\n")
                continue
            return Prediction(coverage, fault, tag)
        raise PredictionExhausted(f"no parseable prediction after {self.reprompts} re-prompts")


class OraclePredictor:
    """Exact predictor: runs the MiniLang program and reports what happened."""

    def __init__(self, mini: MiniProgram, step_limit: int = DEFAULT_STEP_LIMIT):
        self.mini = mini
        self.step_limit = step_limit

    def outcome(self, test: TestCase) -> ExecutionOutcome:
        return execute(self.mini, test, self.step_limit)

    def predict(self, program: Program, test: TestCase) -> Prediction:
        if program.program_id != self.mini.program_id:
            raise ValueError(f"oracle built for {self.mini.program_id!r}, asked about "
                             f"{program.program_id!r}")
        out = self.outcome(test)
        return Prediction(out.covered, out.fault, ProviderTag.ORACLE)


@dataclass(frozen=True)
class Accuracy:
    precision: Fraction
    recall: Fraction
    exact: bool


def prediction_accuracy(pred: Prediction, actual: ExecutionOutcome) -> Accuracy:
    """Per-line precision and recall of a prediction against a real run.

    An empty prediction has precision 1, an empty actual set recall 1.
    """
    check_same_program(pred.coverage, actual.covered)
    p, a = pred.coverage.covered, actual.covered.covered
    hit = len(p & a)
    precision = Fraction(hit, len(p)) if p else Fraction(1)
    recall = Fraction(hit, len(a)) if a else Fraction(1)
    return Accuracy(precision, recall, p == a)


def render_prediction(p: Program, pred: Prediction) -> str:
    """The reply an exact model would give; used to script offline endpoints."""
    listing = render_annotated(p, pred.coverage).text
    if pred.predicted_error is None:
        return f"{listing}{ERROR_LINE} none\n"
    f = pred.predicted_error
    where = f" at line {f.line}" if f.line is not None else ""
    return f"{listing}{ERROR_LINE} {f.kind.value}{where}\n"

