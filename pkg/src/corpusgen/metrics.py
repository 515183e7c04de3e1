"""Corpus efficiency metrics and arm comparison reports.

EPS, EPC and EPT divide the number of unique errors a corpus triggers by its
seed count, its cumulative coverage percentage and the seconds spent building
it.  Values are exact rationals; rendering rounds half-to-even at three
decimals unless a caller asks for another precision or for truncation.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Union

from .errors import DegenerateInterval
from .minilang import ExecutionOutcome, Status
from .rendering import format_decimal, format_quantity

REPORT_FORMAT = "corpusgen.report/1"
PLACES = 3
METRICS = ("eps", "epc", "ept")
HEADERS = {
    "eps": "Errors per Seed (EPS)",
    "epc": "Errors per Coverage (EPC)",
    "ept": "Errors per Time (EPT)",
}

Quantity = Union[int, float, str, Decimal, Fraction]


def rational(x: Quantity) -> Fraction:
    """Exact value of a table operand; floats are read by their shortest repr."""
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


@dataclass(frozen=True)
class Metric:
    errors: int
    denominator: Fraction
    value: Fraction
    degenerate: bool = False

    def render(self, places: int = PLACES, truncate: bool = False) -> str:
        return format_decimal(self.value, places, truncate=truncate, strip=True)

    def cell(self, places: int = PLACES, truncate: bool = False) -> str:
        return f"{self.errors}/{format_quantity(self.denominator)} = {self.render(places, truncate)}"

    def to_json(self) -> dict:
        return {
            "errors": self.errors,
            "denominator": _pair(self.denominator),
            "value": _pair(self.value),
            "rendered": self.render(),
            "degenerate": self.degenerate,
        }


def _pair(x: Fraction) -> dict:
    return {"num": x.numerator, "den": x.denominator}


def _unpair(d: dict) -> Fraction:
    return Fraction(d["num"], d["den"])


def _check_errors(errors: int) -> None:
    if errors < 0:
        raise ValueError("error count must be non-negative")


def eps(errors: int, seeds: int) -> Metric:
    _check_errors(errors)
    if seeds < 0:
        raise ValueError("seed count must be non-negative")
    if seeds == 0:
        return Metric(errors, Fraction(0), Fraction(0), True)
    return Metric(errors, Fraction(seeds), Fraction(errors, seeds))


def epc(errors: int, coverage_percent: Quantity) -> Metric:
    _check_errors(errors)
    cov = rational(coverage_percent)
    if cov < 0:
        raise ValueError("coverage percentage must be non-negative")
    if cov == 0:
        return Metric(errors, cov, Fraction(0), True)
    return Metric(errors, cov, errors / cov)


def ept(errors: int, seconds: Quantity) -> Metric:
    _check_errors(errors)
    secs = rational(seconds)
    if secs <= 0:
        raise DegenerateInterval(f"elapsed time must be positive, got {seconds}")
    return Metric(errors, secs, errors / secs)


def unique_errors(outcomes: Iterable[ExecutionOutcome]) -> int:
    """Distinct (kind, line) pairs among runs that ended in a runtime error."""
    seen = set()
    for out in outcomes:
        if out.status is Status.RUNTIME_ERROR and out.fault is not None:
            seen.add((out.fault.kind, out.fault.line))
    return len(seen)


@dataclass(frozen=True)
class ArmResult:
    arm: str
    seeds: int
    unique_errors: int
    coverage_percent: Fraction
    elapsed_seconds: Fraction
    program_id: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "coverage_percent", rational(self.coverage_percent))
        object.__setattr__(self, "elapsed_seconds", rational(self.elapsed_seconds))
        if self.seeds < 0 or self.unique_errors < 0 or self.elapsed_seconds < 0:
            raise ValueError("arm result fields must be non-negative")
        if not 0 <= self.coverage_percent <= 100:
            raise ValueError("coverage_percent must lie in [0, 100]")

    def metrics(self) -> Dict[str, Metric]:
        return {
            "eps": eps(self.unique_errors, self.seeds),
            "epc": epc(self.unique_errors, self.coverage_percent),
            "ept": ept(self.unique_errors, self.elapsed_seconds),
        }

    def to_json(self) -> dict:
        doc = {
            "arm": self.arm,
            "program_id": self.program_id,
            "seeds": self.seeds,
            "unique_errors": self.unique_errors,
            "coverage_percent": _pair(self.coverage_percent),
            "elapsed_seconds": _pair(self.elapsed_seconds),
        }
        for name, metric in self.metrics().items():
            doc[name] = metric.to_json()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ArmResult":
        return cls(doc["arm"], doc["seeds"], doc["unique_errors"],
                   _unpair(doc["coverage_percent"]), _unpair(doc["elapsed_seconds"]),
                   doc.get("program_id"))


def _arms_in_order(results: Sequence[ArmResult]) -> List[str]:
    order: List[str] = []
    for r in results:
        if r.arm not in order:
            order.append(r.arm)
    return order


def aggregates(results: Sequence[ArmResult]) -> Dict[str, dict]:
    """Per-arm averages over programs, computed both ways.

    ``ratio_of_means`` divides summed errors by summed denominators;
    ``mean_of_ratios`` averages the per-program metric values, counting
    degenerate ones as zero.
    """
    out = {}
    for arm in _arms_in_order(results):
        rows = [r for r in results if r.arm == arm]
        errors = sum(r.unique_errors for r in rows)
        pooled = {
            "eps": eps(errors, sum(r.seeds for r in rows)),
            "epc": epc(errors, sum(r.coverage_percent for r in rows)),
            "ept": ept(errors, sum(r.elapsed_seconds for r in rows)),
        }
        per = [r.metrics() for r in rows]
        out[arm] = {
            "programs": len(rows),
            "ratio_of_means": {k: m.to_json() for k, m in pooled.items()},
            "mean_of_ratios": {
                k: _pair(sum((m[k].value for m in per), Fraction(0)) / len(rows)) for k in METRICS
            },
        }
    return out


def report_json(results: Sequence[ArmResult]) -> dict:
    if not results:
        raise ValueError("a report needs at least one arm")
    return {
        "format": REPORT_FORMAT,
        "rendering": {"places": PLACES, "rounding": "half_even"},
        "arms": [r.to_json() for r in results],
        "aggregates": aggregates(results),
    }


def results_from_json(doc: dict) -> List[ArmResult]:
    if doc.get("format") != REPORT_FORMAT:
        raise ValueError(f"unsupported report format {doc.get('format')!r}")
    return [ArmResult.from_json(a) for a in doc["arms"]]


def markdown_table(results: Sequence[ArmResult], places: int = PLACES,
                   truncate: bool = False) -> str:
    """Comparison table with one ``n/d = v`` cell per metric.

    Rows carry a program column only when results span several programs;
    in that case per-arm aggregate rows follow.
    """
    if not results:
        raise ValueError("a report needs at least one arm")
    programs = {r.program_id for r in results}
    multi = len(programs) > 1
    head = (["Program"] if multi else []) + ["Arm"] + [HEADERS[k] for k in METRICS]
    lines = ["| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for r in results:
        m = r.metrics()
        cells = ([r.program_id or ""] if multi else []) + [r.arm]
        cells += [m[k].cell(places, truncate) for k in METRICS]
        lines.append("| " + " | ".join(cells) + " |")
    if multi:
        for arm, agg in aggregates(results).items():
            pooled = agg["ratio_of_means"]
            cells = ["(ratio of means)", arm]
            for k in METRICS:
                d = pooled[k]
                metric = Metric(d["errors"], _unpair(d["denominator"]), _unpair(d["value"]))
                cells.append(metric.cell(places, truncate))
            lines.append("| " + " | ".join(cells) + " |")
            cells = ["(mean of ratios)", arm]
            cells += [format_decimal(_unpair(agg["mean_of_ratios"][k]), places,
                                     truncate=truncate, strip=True) for k in METRICS]
            lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def emit_report(results: Sequence[ArmResult], format: str = "markdown", places: int = PLACES,
                truncate: bool = False) -> str:
    if format == "json":
        return json.dumps(report_json(results), indent=2, sort_keys=True) + "\n"
    if format == "markdown":
        return markdown_table(results, places, truncate)
    raise ValueError(f"unknown report format {format!r}")
