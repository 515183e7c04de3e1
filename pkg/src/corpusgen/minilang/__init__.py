"""MiniLang: a small deterministic subject language with line-coverage tracing."""

from importlib import resources
from typing import List

from .inputs import ReadSite, describe_input_format, literals_by_line, read_plan
from .interpreter import (
    DEFAULT_STEP_LIMIT,
    ErrorKind,
    ExecutionOutcome,
    RuntimeFault,
    Status,
    execute,
)
from .parser import MiniProgram, parse_program, serialize

__all__ = [
    "DEFAULT_STEP_LIMIT",
    "ErrorKind",
    "ExecutionOutcome",
    "MiniProgram",
    "ReadSite",
    "RuntimeFault",
    "Status",
    "bundled_programs",
    "describe_input_format",
    "execute",
    "literals_by_line",
    "load_bundled",
    "parse_program",
    "read_plan",
    "serialize",
]


def bundled_programs() -> List[str]:
    files = resources.files(__package__).joinpath("programs").iterdir()
    return sorted(f.name[: -len(".mini")] for f in files if f.name.endswith(".mini"))


def load_bundled(name: str) -> MiniProgram:
    """Parse one of the example programs shipped with the package."""
    text = resources.files(__package__).joinpath("programs", f"{name}.mini").read_text()
    return parse_program(text, program_id=name)
