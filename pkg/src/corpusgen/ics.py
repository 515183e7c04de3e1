"""AFL-style seed directory export shared by every corpus producer.

Layout::

    <dir>/id_000000        canonical test input bytes, no trailing newline
    <dir>/id_000001
    ...
    <dir>/manifest.json    program id, per-seed coverage and admission data
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence

from .coverage import CoverageMap, format_percent, union_all
from .minilang import RuntimeFault
from .testcase import TestCase

MANIFEST = "manifest.json"
MANIFEST_FORMAT = "corpusgen.ics/1"


@dataclass(frozen=True)
class SeedRow:
    test_case: TestCase
    coverage: CoverageMap
    reason: str
    error: Optional[RuntimeFault] = None
    mode: Optional[str] = None


def seed_name(index: int) -> str:
    return f"id_{index:06d}"


def subsumed_flags(rows: Sequence[SeedRow]) -> List[bool]:
    """Flag seeds whose coverage the other seeds already provide.

    Seeds kept for the error they trigger are never flagged.
    """
    flags = []
    for i, row in enumerate(rows):
        if row.reason == "error_trigger":
            flags.append(False)
            continue
        others = set()
        for j, other in enumerate(rows):
            if j != i:
                others |= other.coverage.covered
        flags.append(row.coverage.covered <= others)
    return flags


def manifest(program_id: str, denominator: int, rows: Sequence[SeedRow],
             stats: Optional[dict] = None) -> dict:
    empty = CoverageMap(program_id, frozenset(), denominator)
    cumulative = union_all((r.coverage for r in rows), empty)
    flags = subsumed_flags(rows)
    seeds = []
    for i, (row, flag) in enumerate(zip(rows, flags)):
        seeds.append({
            "file": seed_name(i),
            "reason": row.reason,
            "mode": row.mode,
            "coverage": row.coverage.to_json(),
            "error": row.error.to_json() if row.error else None,
            "size_bytes": row.test_case.size_bytes,
            "subsumed": flag,
        })
    return {
        "format": MANIFEST_FORMAT,
        "program_id": program_id,
        "denominator": denominator,
        "cumulative_coverage": cumulative.to_json(),
        "coverage_percent": format_percent(cumulative) if denominator else "0.00",
        "seeds": seeds,
        "stats": stats or {},
    }


def write_ics(directory, program_id: str, denominator: int, rows: Sequence[SeedRow],
              stats: Optional[dict] = None) -> List[Path]:
    """Write seeds and manifest, replacing any earlier export in ``directory``."""
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for stale in out.glob("id_*"):
        stale.unlink()
    written = []
    for i, row in enumerate(rows):
        path = out / seed_name(i)
        path.write_bytes(row.test_case.canonical_text.encode("utf-8"))
        written.append(path)
    doc = manifest(program_id, denominator, rows, stats)
    path = out / MANIFEST
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(path)
    return written


def read_ics(directory) -> List[TestCase]:
    """Load every seed file in name order; the manifest and dotfiles are skipped."""
    paths = sorted(p for p in Path(directory).iterdir()
                   if p.is_file() and p.name != MANIFEST and not p.name.startswith("."))
    return [TestCase.from_text(p.read_text(encoding="utf-8")) for p in paths]
