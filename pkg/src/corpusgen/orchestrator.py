"""The corpus construction loop.

Each iteration picks a mode from the cumulative predicted coverage, asks the
generator for one test input, asks the predictor what that input covers and
admits the input only if it adds coverage (or, once everything is covered, a
new kind of runtime error).  The loop stops when the time budget is spent;
exact duplicates are removed at the end.
"""

from __future__ import annotations

import dataclasses
import enum
import json
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, List, Optional, Tuple

from .coverage import (CoverageMap, Program, check_same_program, format_percent, is_complete,
                       render_annotated, strictly_extends, union)
from .errors import (CassetteDrift, CassetteExhausted, DegenerateProgram, GenerationExhausted,
                     PredictionExhausted, ProviderUnavailable)
from .generation import HISTORY_LIMIT, GenerationMode, GenerationRequest, Generator
from .ics import SeedRow, write_ics
from .prediction import Prediction, Predictor
from .testcase import TestCase

log = logging.getLogger(__name__)

DEFAULT_TIME_LIMIT = 300.0
DEFAULT_ERROR_SEED_CAP = 10


class AdmissionReason(str, enum.Enum):
    COVERAGE_GAIN = "coverage_gain"
    ERROR_TRIGGER = "error_trigger"


class RejectionReason(str, enum.Enum):
    DUPLICATE = "duplicate"
    NO_GAIN = "no_gain"
    NO_ERROR = "no_error"
    KNOWN_ERROR = "known_error"
    ERROR_CAP = "error_cap"


@dataclass(frozen=True)
class Decision:
    admitted: bool
    reason: str


@dataclass(frozen=True)
class SeedRecord:
    test_case: TestCase
    predicted: Prediction
    admission_reason: AdmissionReason
    admitted_at: float
    generation_mode: GenerationMode


@dataclass(frozen=True)
class Corpus:
    program_id: str
    seeds: Tuple[SeedRecord, ...]
    cumulative: CoverageMap

    @classmethod
    def empty(cls, program: Program) -> "Corpus":
        return cls(program.program_id, (), program.coverage())

    def __len__(self) -> int:
        return len(self.seeds)

    def contains(self, t: TestCase) -> bool:
        return any(s.test_case.canonical_text == t.canonical_text for s in self.seeds)

    def error_kinds(self):
        return {s.predicted.predicted_error.kind for s in self.seeds
                if s.admission_reason is AdmissionReason.ERROR_TRIGGER}

    def with_seed(self, record: SeedRecord) -> "Corpus":
        grown = dataclasses.replace(self, seeds=self.seeds + (record,))
        return update_cumulative(grown, record.predicted)

    def rows(self) -> List[SeedRow]:
        return [SeedRow(s.test_case, s.predicted.coverage, s.admission_reason.value,
                        s.predicted.predicted_error, s.generation_mode.value)
                for s in self.seeds]


@dataclass
class CampaignConfig:
    time_limit_seconds: float = DEFAULT_TIME_LIMIT
    error_mode_seed_cap: int = DEFAULT_ERROR_SEED_CAP
    generation_attempts: int = 3
    prediction_reprompts: int = 3
    # switch to error seeking for this final share of the budget even below
    # full coverage; None keeps the mode tied to coverage alone
    error_tail_fraction: Optional[float] = None
    max_iterations: Optional[int] = None
    generator: str = "mock"
    predictor: str = "oracle"
    rng_seed: int = 42

    def __post_init__(self):
        if not self.time_limit_seconds > 0:
            raise ValueError("time_limit_seconds must be positive")
        if self.error_tail_fraction is not None and not 0 < self.error_tail_fraction <= 1:
            raise ValueError("error_tail_fraction must be in (0, 1]")

    def to_json(self) -> dict:
        return dataclasses.asdict(self)


class CampaignLog:
    """Append-only event list with monotone timestamps (seconds since start)."""

    def __init__(self, clock: Callable[[], float] = time.monotonic):
        self.clock = clock
        self.start = clock()
        self.events: List[dict] = []

    def elapsed(self) -> float:
        return self.clock() - self.start

    def emit(self, event: str, **fields) -> dict:
        t = self.elapsed()
        if self.events and t < self.events[-1]["t"]:
            t = self.events[-1]["t"]
        record = {"t": t, "event": event, **fields}
        self.events.append(record)
        return record

    def of(self, event: str) -> List[dict]:
        return [e for e in self.events if e["event"] == event]

    @property
    def termination(self) -> Optional[str]:
        ends = self.of("campaign_end")
        return ends[-1]["termination"] if ends else None

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, sort_keys=True) + "\n" for e in self.events)

    def write(self, path) -> None:
        Path(path).write_text(self.to_jsonl(), encoding="utf-8")

    @classmethod
    def read(cls, path) -> List[dict]:
        return [json.loads(line) for line in Path(path).read_text(encoding="utf-8").splitlines()
                if line.strip()]


def admit(pred: Prediction, corpus: Corpus, mode: GenerationMode, t: TestCase,
          error_seed_cap: int = DEFAULT_ERROR_SEED_CAP) -> Decision:
    check_same_program(pred.coverage, corpus.cumulative)
    if corpus.contains(t):
        return Decision(False, RejectionReason.DUPLICATE.value)
    if mode is GenerationMode.COVERAGE_SEEKING:
        if strictly_extends(pred.coverage, corpus.cumulative):
            return Decision(True, AdmissionReason.COVERAGE_GAIN.value)
        return Decision(False, RejectionReason.NO_GAIN.value)
    if pred.predicted_error is None:
        return Decision(False, RejectionReason.NO_ERROR.value)
    if pred.predicted_error.kind in corpus.error_kinds():
        return Decision(False, RejectionReason.KNOWN_ERROR.value)
    n_error_seeds = sum(1 for s in corpus.seeds
                        if s.admission_reason is AdmissionReason.ERROR_TRIGGER)
    if n_error_seeds >= error_seed_cap:
        return Decision(False, RejectionReason.ERROR_CAP.value)
    return Decision(True, AdmissionReason.ERROR_TRIGGER.value)


def update_cumulative(corpus: Corpus, pred: Prediction) -> Corpus:
    return dataclasses.replace(corpus, cumulative=union(corpus.cumulative, pred.coverage))


def remove_duplicates(corpus: Corpus) -> Corpus:
    seen, kept = set(), []
    for s in corpus.seeds:
        if s.test_case.canonical_text not in seen:
            seen.add(s.test_case.canonical_text)
            kept.append(s)
    return dataclasses.replace(corpus, seeds=tuple(kept))


def select_mode(cumulative: CoverageMap, elapsed: float, cfg: CampaignConfig) -> GenerationMode:
    if is_complete(cumulative):
        return GenerationMode.ERROR_SEEKING
    if cfg.error_tail_fraction is not None:
        if elapsed >= cfg.time_limit_seconds * (1 - cfg.error_tail_fraction):
            return GenerationMode.ERROR_SEEKING
    return GenerationMode.COVERAGE_SEEKING


def run_campaign(
    program: Program,
    generator: Generator,
    predictor: Predictor,
    cfg: Optional[CampaignConfig] = None,
    *,
    format_spec: str = "Whitespace-separated input tokens.",
    language: str = "MiniLang",
    clock: Callable[[], float] = time.monotonic,
) -> Tuple[Corpus, CampaignLog]:
    cfg = cfg or CampaignConfig()
    if program.denominator == 0:
        raise DegenerateProgram(f"program {program.program_id!r} has no executable lines")
    campaign = CampaignLog(clock)
    campaign.emit("campaign_start", program_id=program.program_id,
                  denominator=program.denominator, config=cfg.to_json())
    corpus = Corpus.empty(program)
    history: deque = deque(maxlen=HISTORY_LIMIT)
    mode = None
    iteration = 0
    termination = None
    while termination is None:
        elapsed = campaign.elapsed()
        if elapsed >= cfg.time_limit_seconds:
            termination = "time_limit"
            break
        if cfg.max_iterations is not None and iteration >= cfg.max_iterations:
            termination = "max_iterations"
            break
        new_mode = select_mode(corpus.cumulative, elapsed, cfg)
        if new_mode is not mode:
            campaign.emit("mode_switch", mode=new_mode.value,
                          coverage_percent=format_percent(corpus.cumulative))
            mode = new_mode
        listing = (render_annotated(program, corpus.cumulative)
                   if mode is GenerationMode.COVERAGE_SEEKING else None)
        req = GenerationRequest(program, mode, format_spec, listing, tuple(history),
                                language=language, attempt=iteration)
        iteration += 1
        try:
            test = generator.generate(req)
        except GenerationExhausted as exc:
            campaign.emit("generation_failed", iteration=iteration, error=str(exc))
            continue
        except ProviderUnavailable as exc:
            campaign.emit("provider_failure", stage="generation", error=str(exc))
            termination = "provider_unavailable"
            break
        except CassetteDrift as exc:
            campaign.emit("provider_failure", stage="generation", error=str(exc))
            termination = "cassette_drift"
            break
        except CassetteExhausted:
            termination = "cassette_exhausted"
            break
        campaign.emit("generated", iteration=iteration, mode=mode.value, test=test.canonical_text)
        try:
            pred = predictor.predict(program, test)
        except PredictionExhausted as exc:
            campaign.emit("prediction_failed", iteration=iteration, error=str(exc))
            history.append(test.canonical_text)
            continue
        except ProviderUnavailable as exc:
            campaign.emit("provider_failure", stage="prediction", error=str(exc))
            termination = "provider_unavailable"
            break
        except CassetteDrift as exc:
            campaign.emit("provider_failure", stage="prediction", error=str(exc))
            termination = "cassette_drift"
            break
        except CassetteExhausted:
            termination = "cassette_exhausted"
            break
        campaign.emit("predicted", iteration=iteration, coverage=pred.coverage.to_json(),
                      error=pred.predicted_error.to_json() if pred.predicted_error else None)
        decision = admit(pred, corpus, mode, test, cfg.error_mode_seed_cap)
        if decision.admitted:
            before = len(corpus.cumulative)
            record = SeedRecord(test, pred, AdmissionReason(decision.reason),
                                campaign.elapsed(), mode)
            corpus = corpus.with_seed(record)
            campaign.emit("admitted", iteration=iteration, reason=decision.reason,
                          seed_index=len(corpus) - 1, test=test.canonical_text,
                          coverage=pred.coverage.to_json(),
                          cumulative=corpus.cumulative.to_json(),
                          gained=len(corpus.cumulative) - before,
                          coverage_percent=format_percent(corpus.cumulative))
        else:
            history.append(test.canonical_text)
            campaign.emit("rejected", iteration=iteration, reason=decision.reason)
    corpus = remove_duplicates(corpus)
    campaign.emit("campaign_end", termination=termination, iterations=iteration,
                  seeds=len(corpus), cumulative=corpus.cumulative.to_json(),
                  coverage_percent=format_percent(corpus.cumulative),
                  elapsed=campaign.elapsed())
    log.info("campaign on %s ended (%s): %d seeds, %s%% predicted coverage",
             program.program_id, termination, len(corpus), format_percent(corpus.cumulative))
    return corpus, campaign


def subsumption_history(corpus: Corpus, campaign: CampaignLog) -> List[dict]:
    """For each coverage-gain seed: did it gain at admission, and is it subsumed now?"""
    gained = {e["seed_index"]: e["gained"] for e in campaign.of("admitted")}
    out = []
    for i, s in enumerate(corpus.seeds):
        others = set()
        for j, o in enumerate(corpus.seeds):
            if j != i:
                others |= o.predicted.coverage.covered
        out.append({
            "seed_index": i,
            "reason": s.admission_reason.value,
            "gained_at_admission": gained.get(i, 0),
            "subsumed_later": s.admission_reason is AdmissionReason.COVERAGE_GAIN
            and s.predicted.coverage.covered <= others,
        })
    return out


def export_ics(corpus: Corpus, directory, stats: Optional[dict] = None) -> List[Path]:
    return write_ics(directory, corpus.program_id, corpus.cumulative.denominator,
                     corpus.rows(), stats)


def corpus_stats(corpus: Corpus, campaign: Optional[CampaignLog] = None) -> dict:
    """Run-independent summary for the manifest (no wall-clock values)."""
    stats = {
        "seeds": len(corpus),
        "coverage_gain_seeds": sum(1 for s in corpus.seeds
                                   if s.admission_reason is AdmissionReason.COVERAGE_GAIN),
        "error_trigger_seeds": sum(1 for s in corpus.seeds
                                   if s.admission_reason is AdmissionReason.ERROR_TRIGGER),
        "predicted_coverage_percent": format_percent(corpus.cumulative),
        "predicted_error_kinds": sorted(k.value for k in corpus.error_kinds()),
    }
    if campaign is not None:
        stats["termination"] = campaign.termination
    return stats
