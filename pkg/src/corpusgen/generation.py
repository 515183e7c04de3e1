"""Test-case generation agent: prompt builders, response parser, providers.

Two prompts drive the generator.  While the corpus still misses lines, the
coverage prompt shows the annotated listing and asks for an input reaching
the ``!`` lines.  Once every line is covered, the error prompt lists runtime
error scenarios and shows the plain source.
"""

from __future__ import annotations

import enum
import hashlib
import random
import re
from dataclasses import dataclass
from typing import Dict, List, Optional, Protocol, Tuple

from .coverage import UNCOVERED, AnnotatedListing, Program
from .errors import GenerationExhausted, GenerationParseError, ParseError
from .minilang import literals_by_line, parse_program, read_plan
from .testcase import TestCase
from .transport import ChatRequest, ChatTransport

INPUT_MARKER = "Test Case Input:"
HISTORY_LIMIT = 5
GENERATION_ATTEMPTS = 3
GENERATION_TEMPERATURE = 0.7

SYSTEM_PROMPT = "You write test inputs for programs. Reply with the test input only."


class GenerationMode(str, enum.Enum):
    COVERAGE_SEEKING = "coverage_seeking"
    ERROR_SEEKING = "error_seeking"


@dataclass(frozen=True)
class GenerationRequest:
    program: Program
    mode: GenerationMode
    format_spec: str
    annotated: Optional[AnnotatedListing] = None
    rejected_history: Tuple[str, ...] = ()
    language: str = "MiniLang"
    # loop iteration that issued the request; not shown to the model
    attempt: int = 0

    def __post_init__(self):
        object.__setattr__(self, "rejected_history", tuple(self.rejected_history))
        wants_listing = self.mode is GenerationMode.COVERAGE_SEEKING
        if wants_listing != (self.annotated is not None):
            raise ValueError("an annotated listing goes with coverage_seeking requests only")


def _history_block(req: GenerationRequest) -> str:
    if not req.rejected_history:
        return ""
    rows = [" ".join(text.split()) for text in req.rejected_history[-HISTORY_LIMIT:]]
    return "Do not repeat these inputs:\n" + "".join(f"- {row}\n" for row in rows)


def build_coverage_prompt(req: GenerationRequest) -> str:
    if req.mode is not GenerationMode.COVERAGE_SEEKING:
        raise ValueError("coverage prompt requested outside coverage_seeking mode")
    if all(m != UNCOVERED for m, _ in req.annotated.lines):
        raise ValueError("every line is already covered; switch to error_seeking")
    return (
        f"Generate a single test case for a {req.language} program to cover uncovered lines "
        "of code denoted by '!'. Provide only the test input without explanations. "
        "Consider various conditions, edge cases, and typical use cases, including "
        "negative, positive, zero, and maximum values.\n"
        f"Ensure the test case input is in the following format: {req.format_spec}\n"
        f"{INPUT_MARKER}\n"
        "<input 1>\n"
        "<input 2>...\n"
        "Code Coverage of Current Corpus:\n"
        f"{req.annotated.text}"
        f"{_history_block(req)}"
    )


ERROR_SCENARIOS = (
    ("InputMismatchException",
     "Provide an input value whose data type is different than the one specified."),
    ("ArithmeticException",
     "Test cases that could raise arithmetic exceptions include division by zero, overflow, "
     "underflow, or attempt to perform invalid operations, e.g., taking the square root of "
     "a negative number."),
    ("NullPointerException",
     "Create a scenario where a variable is explicitly set to null before usage."),
    ("NumberFormatException",
     "Input a value that cannot be parsed to the expected data type (a non-numeric string)."),
    ("ArrayIndexOutOfBoundsException or IndexOutOfBoundsException",
     "Design input values that lead to accessing array or list indices beyond their bounds."),
)


def build_error_prompt(req: GenerationRequest) -> str:
    if req.mode is not GenerationMode.ERROR_SEEKING:
        raise ValueError("error prompt requested outside error_seeking mode")
    scenarios = "".join(f"{label}: {text}\n" for label, text in ERROR_SCENARIOS)
    source = req.program.source
    if not source.endswith("\n"):
        source += "\n"
    return (
        "Generate a single test case without any explanation to raise the following "
        f"scenarios in a {req.language} program:\n"
        f"{scenarios}"
        "(Other types of runtime errors and exceptions)\n"
        f"Ensure the test case input is in the following format: {req.format_spec}\n"
        f"{INPUT_MARKER}\n"
        "<input 1>\n"
        "<input 2>...\n"
        "Generate a single test case without providing an explanation for the below "
        f"{req.language} program:\n"
        f"{source}"
        f"{_history_block(req)}"
    )


def build_prompt(req: GenerationRequest) -> str:
    if req.mode is GenerationMode.COVERAGE_SEEKING:
        return build_coverage_prompt(req)
    return build_error_prompt(req)


_FENCE = re.compile(r"^\s*```")
_PLACEHOLDER = re.compile(r"^<input \d+>(\.\.\.)?$")
_INT_WORD = re.compile(r"[+-]?\d+")


def _block_after_marker(lines: List[str]) -> List[str]:
    block: List[str] = []
    for raw in lines:
        if _FENCE.match(raw):
            if block:
                break
            continue
        line = raw.strip()
        if not line:
            if block:
                break
            continue
        block.append(line)
    return block


def _is_bare_token_line(line: str) -> bool:
    words = line.split()
    return len(words) == 1 or all(_INT_WORD.fullmatch(w) for w in words)


def serialize_generation(t: TestCase) -> str:
    """Write ``t`` the way the prompts ask the model to answer."""
    return f"{INPUT_MARKER}\n{t.canonical_text}\n"


def parse_generation(response: str) -> TestCase:
    """Extract the test input from a model reply.

    The block after the last ``Test Case Input:`` marker wins.  Without a
    marker the first fenced block is used, or failing that every line that
    looks like bare input tokens.
    """
    lines = response.splitlines()
    marker_rows = [i for i, line in enumerate(lines) if INPUT_MARKER.lower() in line.lower()]
    if marker_rows:
        i = marker_rows[-1]
        row = lines[i]
        tail = row[row.lower().index(INPUT_MARKER.lower()) + len(INPUT_MARKER):]
        block = _block_after_marker([tail] + lines[i + 1:])
    else:
        fenced = [i for i, line in enumerate(lines) if _FENCE.match(line)]
        if len(fenced) >= 2:
            block = [l.strip() for l in lines[fenced[0] + 1:fenced[1]] if l.strip()]
        else:
            block = [l.strip() for l in lines if l.strip() and _is_bare_token_line(l.strip())]
    block = [l for l in block if not _PLACEHOLDER.match(l)]
    tokens = [tok for line in block for tok in line.split()]
    if not tokens:
        raise GenerationParseError("no test input found in response")
    return TestCase(tuple(tokens))


class Generator(Protocol):
    def generate(self, req: GenerationRequest) -> TestCase: ...


class LLMGenerator:
    """Generator backed by a chat model through :class:`ChatTransport`."""

    def __init__(self, transport: ChatTransport, model: Optional[str] = None,
                 temperature: float = GENERATION_TEMPERATURE,
                 attempts: int = GENERATION_ATTEMPTS):
        self.transport = transport
        self.model = model or transport.default_model()
        self.temperature = temperature
        self.attempts = attempts

    def generate(self, req: GenerationRequest) -> TestCase:
        prompt = build_prompt(req)
        user = prompt
        for _ in range(self.attempts):
            reply = self.transport.complete(
                ChatRequest(self.model, SYSTEM_PROMPT, user, self.temperature))
            try:
                return parse_generation(reply)
            except GenerationParseError as exc:
                user = (f"{prompt}\nYour previous reply could not be used ({exc}). "
                        f"Answer with the line '{INPUT_MARKER}' followed by the input tokens.\n")
        raise GenerationExhausted(f"no parseable test input after {self.attempts} attempts")


# ---------------------------------------------------------------------------
# offline stand-in for the model

BOUNDARY_INTS = (0, 1, -1, 2, 2**31 - 1, -(2**31), 2**63 - 1, -(2**63))
MISMATCH_TOKENS = ("abc", "1.5", "x", "99999999999999999999", "--1", "NaN")


@dataclass(frozen=True)
class _Shape:
    sites: Tuple[Tuple[str, int], ...]  # (kind, loop depth) per read, in order
    ints: Tuple[int, ...]
    strs: Tuple[str, ...]
    by_line: Dict[int, Tuple[Tuple[int, ...], Tuple[str, ...]]]


class MockGenerator:
    """Deterministic generator for offline runs and tests.

    Each reply is a pure function of the seed and the request, so equal
    requests give equal test cases.  For MiniLang programs the mock reads the
    source the way a model would: it follows the order and kinds of the read
    statements, reuses the program's literals (preferring those on lines the
    listing marks uncovered) and, in error mode, applies boundary values,
    wrong token types, zeros and truncation.
    """

    def __init__(self, seed: int = 42):
        self.seed = seed
        self._shapes: Dict[str, Optional[_Shape]] = {}

    def _shape(self, program: Program) -> Optional[_Shape]:
        if program.program_id not in self._shapes:
            self._shapes[program.program_id] = _analyse(program)
        return self._shapes[program.program_id]

    def _rng(self, req: GenerationRequest) -> random.Random:
        listing = req.annotated.text if req.annotated is not None else ""
        key = "\x00".join([str(self.seed), req.program.program_id, req.mode.value, listing,
                           "\x01".join(req.rejected_history), str(req.attempt)])
        return random.Random(int.from_bytes(hashlib.sha256(key.encode()).digest()[:8], "big"))

    def generate(self, req: GenerationRequest) -> TestCase:
        rng = self._rng(req)
        shape = self._shape(req.program)
        if shape is None:
            tokens = _generic_tokens(rng)
        elif req.mode is GenerationMode.COVERAGE_SEEKING:
            hot = _uncovered_literals(shape, req.annotated)
            tokens = _shaped_tokens(rng, shape, hot)
        else:
            tokens = _error_tokens(rng, shape)
        if not tokens:
            tokens = [str(rng.choice(BOUNDARY_INTS))]
        return TestCase(tuple(tokens))


def _analyse(program: Program) -> Optional[_Shape]:
    try:
        mini = parse_program(program.source + "\n", program.program_id)
    except ParseError:
        return None
    by_line = literals_by_line(mini)
    ints = sorted({v for ints, _ in by_line.values() for v in ints})
    strs = sorted({s for _, strs in by_line.values() for s in strs if _usable(s)})
    sites = tuple((s.kind, s.loop_depth) for s in read_plan(mini))
    return _Shape(sites, tuple(ints), tuple(strs), by_line)


def _usable(s: str) -> bool:
    return bool(s) and not any(c.isspace() for c in s)


def _uncovered_literals(shape: _Shape, listing: AnnotatedListing):
    ints, strs = set(), set()
    for lineno, (marker, _) in enumerate(listing.lines, start=1):
        if marker == UNCOVERED and lineno in shape.by_line:
            li, ls = shape.by_line[lineno]
            ints.update(li)
            strs.update(s for s in ls if _usable(s))
    return sorted(ints), sorted(strs)


def _pick_int(rng: random.Random, shape: _Shape, hot_ints) -> int:
    roll = rng.random()
    if hot_ints and roll < 0.35:
        return rng.choice(hot_ints) + rng.choice((-1, 0, 0, 1))
    if shape.ints and roll < 0.6:
        return rng.choice(shape.ints) + rng.choice((-1, 0, 0, 1))
    if roll < 0.9:
        return rng.randint(-3, 20)
    return rng.choice(BOUNDARY_INTS)


def _pick_str(rng: random.Random, shape: _Shape, hot_strs) -> str:
    roll = rng.random()
    if hot_strs and roll < 0.5:
        return rng.choice(hot_strs)
    if shape.strs and roll < 0.85:
        return rng.choice(shape.strs)
    if roll < 0.93:
        return str(rng.randint(-20, 200))
    return "".join(rng.choice("abcdefxyz") for _ in range(rng.randint(1, 4)))


def _groups(sites):
    """Split reads into runs of top-level reads and runs of loop reads."""
    groups = []
    for kind, depth in sites:
        looped = depth > 0
        if groups and groups[-1][0] == looped:
            groups[-1][1].append(kind)
        else:
            groups.append((looped, [kind]))
    return groups


def _shaped_tokens(rng: random.Random, shape: _Shape, hot) -> List[str]:
    hot_ints, hot_strs = hot
    tokens: List[str] = []
    last_count: Optional[int] = None
    groups = _groups(shape.sites)
    for gi, (looped, kinds) in enumerate(groups):
        if looped:
            reps = last_count if last_count is not None and 0 <= last_count <= 8 else rng.randint(0, 4)
            for _ in range(reps):
                for kind in kinds:
                    tokens.append(str(_pick_int(rng, shape, hot_ints)) if kind == "int"
                                  else _pick_str(rng, shape, hot_strs))
            last_count = None
            continue
        for pos, kind in enumerate(kinds):
            feeds_loop = pos == len(kinds) - 1 and gi + 1 < len(groups)
            if kind == "int":
                value = rng.randint(0, 6) if feeds_loop and rng.random() < 0.8 else \
                    _pick_int(rng, shape, hot_ints)
                tokens.append(str(value))
                last_count = value
            else:
                tokens.append(_pick_str(rng, shape, hot_strs))
                last_count = None
    return tokens


def _error_tokens(rng: random.Random, shape: _Shape) -> List[str]:
    base = _shaped_tokens(rng, shape, ((), ()))
    kinds = [k for k, _ in shape.sites]
    strategy = rng.choice(("truncate", "mismatch", "zero", "extreme", "nonnumeric", "count"))
    if strategy == "truncate" and base:
        return base[: rng.randrange(len(base))]
    if strategy == "mismatch" and base:
        i = rng.randrange(len(base))
        base[i] = rng.choice(MISMATCH_TOKENS)
        return base
    if strategy == "zero":
        return ["0" if _INT_WORD.fullmatch(t) and rng.random() < 0.7 else t for t in base]
    if strategy == "extreme":
        return [str(rng.choice(BOUNDARY_INTS)) if _INT_WORD.fullmatch(t) and rng.random() < 0.6
                else t for t in base]
    if strategy == "nonnumeric" and "str" in kinds:
        return [rng.choice(MISMATCH_TOKENS[:3]) if not _INT_WORD.fullmatch(t) or rng.random() < 0.3
                else t for t in base]
    if strategy == "count" and base:
        # claim more items than are supplied, or a negative count
        base[0] = str(rng.choice((-1, -5, len(base) + rng.randint(1, 5))))
        return base
    return base


def _generic_tokens(rng: random.Random) -> List[str]:
    n = rng.randint(1, 6)
    out = []
    for _ in range(n):
        roll = rng.random()
        if roll < 0.6:
            out.append(str(rng.randint(-10, 100)))
        elif roll < 0.8:
            out.append(str(rng.choice(BOUNDARY_INTS)))
        else:
            out.append(rng.choice(MISMATCH_TOKENS))
    return out
