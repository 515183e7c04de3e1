"""Comparison arms built from random inputs, mutation and corpus minimization.

* ``b1``: five random seeds, used as they are.
* ``b2``: fifty random seeds, executed, then minimized.
* ``b3``: five random seeds grown by a mutation loop that keeps inputs adding
  coverage, then minimized.

Minimization is greedy set cover over executed line coverage, standing in
for afl-cmin, whose edge-tuple scoring has no statement-level analogue.
"""

from __future__ import annotations

import enum
import itertools
import math
import random
import string
import time
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

from .coverage import CoverageMap, format_percent
from .errors import OracleTooLarge
from .ics import SeedRow, write_ics
from .minilang import (DEFAULT_STEP_LIMIT, MiniProgram, ReadSite, RuntimeFault, Status, execute,
                       read_plan)
from .orchestrator import CampaignLog
from .testcase import TestCase

INT_RANGE = (-100, 1000)
NONNUMERIC_P = 0.05
INT64_MAX = 2**63 - 1
BOUNDARY_VALUES = (0, -1, INT64_MAX)
EXACT_COVER_LIMIT = 20


class BaselineKind(str, enum.Enum):
    B1 = "b1"
    B2 = "b2"
    B3 = "b3"


@dataclass(frozen=True)
class MeasuredSeed:
    test_case: TestCase
    actual: CoverageMap
    status: Status
    fault: Optional[RuntimeFault] = None

    @property
    def size_bytes(self) -> int:
        return self.test_case.size_bytes


def measure(mini: MiniProgram, t: TestCase, step_limit: int = DEFAULT_STEP_LIMIT) -> MeasuredSeed:
    out = execute(mini, t, step_limit)
    return MeasuredSeed(t, out.covered, out.status, out.fault)


def _random_word(rng: random.Random) -> str:
    return "".join(rng.choice(string.ascii_letters) for _ in range(rng.randint(1, 4)))


def _random_int_token(rng: random.Random, int_range, nonnumeric_p) -> str:
    if rng.random() < nonnumeric_p:
        return _random_word(rng)
    return str(rng.randint(*int_range))


def random_seed(rng: random.Random, plan: Sequence[ReadSite],
                int_range: Tuple[int, int] = INT_RANGE,
                nonnumeric_p: float = NONNUMERIC_P) -> TestCase:
    """One random input shaped only by the number and kinds of reads.

    Reads inside loops are repeated one to four times; integer reads draw
    uniformly from ``int_range`` and are replaced by a letter word with
    probability ``nonnumeric_p``.
    """
    tokens: List[str] = []

    def draw(site: ReadSite) -> str:
        if site.kind == "int":
            return _random_int_token(rng, int_range, nonnumeric_p)
        if rng.random() < 0.5:
            return _random_word(rng)
        return str(rng.randint(*int_range))

    i = 0
    sites = list(plan)
    while i < len(sites):
        if sites[i].loop_depth == 0:
            tokens.append(draw(sites[i]))
            i += 1
            continue
        j = i
        while j < len(sites) and sites[j].loop_depth > 0:
            j += 1
        for _ in range(rng.randint(1, 4)):
            tokens.extend(draw(s) for s in sites[i:j])
        i = j
    if not tokens:
        tokens = [_random_int_token(rng, int_range, nonnumeric_p)
                  for _ in range(rng.randint(1, 3))]
    return TestCase(tuple(tokens))


def _is_int(tok: str) -> bool:
    try:
        int(tok)
    except ValueError:
        return False
    return True


def _op_arith(t: List[str], rng):
    ints = [i for i, tok in enumerate(t) if _is_int(tok)]
    if not ints:
        return None
    i = rng.choice(ints)
    t[i] = str(int(t[i]) + rng.choice((-1, 1)) * rng.randint(1, 16))
    return t


def _op_replace(t: List[str], rng):
    t[rng.randrange(len(t))] = _random_int_token(rng, INT_RANGE, 0.2)
    return t


def _op_duplicate(t: List[str], rng):
    i = rng.randrange(len(t))
    t.insert(i + 1, t[i])
    return t


def _op_delete(t: List[str], rng):
    del t[rng.randrange(len(t))]
    return t


def _op_boundary(t: List[str], rng):
    t[rng.randrange(len(t))] = str(rng.choice(BOUNDARY_VALUES))
    return t


MUTATION_OPERATORS = {
    "arith": _op_arith,
    "replace": _op_replace,
    "duplicate": _op_duplicate,
    "delete": _op_delete,
    "boundary": _op_boundary,
}


def mutate(t: TestCase, rng: random.Random) -> TestCase:
    if not t.tokens:
        raise ValueError("cannot mutate an empty test case")
    names = sorted(MUTATION_OPERATORS)
    while True:
        op = MUTATION_OPERATORS[rng.choice(names)]
        result = op(list(t.tokens), rng)
        # an operator may not apply, or delete the last token: draw again
        if result:
            return TestCase.from_tokens(result)


def _union(seeds: Sequence[MeasuredSeed]) -> frozenset:
    out = set()
    for s in seeds:
        out |= s.actual.covered
    return frozenset(out)


def cmin_greedy(seeds: Sequence[MeasuredSeed]) -> List[MeasuredSeed]:
    """Smallest-feasible coverage-preserving subset, by greedy set cover.

    Picks the seed adding the most uncovered lines, preferring smaller seeds
    and then earlier ones; a final pass drops any pick the others subsume.
    The result keeps the input order.
    """
    if not seeds:
        return []
    uncovered = set(_union(seeds))
    picked: List[int] = []
    while uncovered:
        best = min(
            range(len(seeds)),
            key=lambda i: (-len(seeds[i].actual.covered & uncovered), seeds[i].size_bytes, i),
        )
        picked.append(best)
        uncovered -= seeds[best].actual.covered
    kept = set(picked)
    for i in sorted(picked, key=lambda i: (-seeds[i].size_bytes, -i)):
        others = set()
        for j in kept:
            if j != i:
                others |= seeds[j].actual.covered
        if seeds[i].actual.covered <= others:
            kept.discard(i)
    return [seeds[i] for i in sorted(kept)]


def exact_min_cover(seeds: Sequence[MeasuredSeed]) -> List[MeasuredSeed]:
    """Exhaustive minimum coverage-preserving subset (test oracle).

    Among minimum-cardinality covers the smallest total size wins, then the
    lexicographically first index tuple.
    """
    if len(seeds) > EXACT_COVER_LIMIT:
        raise OracleTooLarge(f"{len(seeds)} seeds exceeds the limit of {EXACT_COVER_LIMIT}")
    target = _union(seeds)
    masks = [sum(1 << line for line in s.actual.covered) for s in seeds]
    goal = sum(1 << line for line in target)
    for k in range(len(seeds) + 1):
        best = None
        for combo in itertools.combinations(range(len(seeds)), k):
            acc = 0
            for i in combo:
                acc |= masks[i]
            if acc == goal:
                key = (sum(seeds[i].size_bytes for i in combo), combo)
                if best is None or key < best:
                    best = key
        if best is not None:
            return [seeds[i] for i in best[1]]
    return []


def greedy_bound(m: int, opt: int) -> int:
    """Upper bound ceil((ln m + 1) * opt) on greedy cover size."""
    if m == 0:
        return 0
    return math.ceil((math.log(m) + 1) * opt)


@dataclass
class BaselineConfig:
    time_limit_seconds: float = 300.0
    rng_seed: int = 42
    # cap on b3 mutant executions, for runs that must not depend on timing
    max_iterations: Optional[int] = None
    step_limit: int = DEFAULT_STEP_LIMIT
    int_range: Tuple[int, int] = INT_RANGE
    nonnumeric_p: float = NONNUMERIC_P
    b1_seeds: int = 5
    b2_pool: int = 50
    b3_initial: int = 5

    def __post_init__(self):
        if not self.time_limit_seconds > 0:
            raise ValueError("time_limit_seconds must be positive")
        self.int_range = tuple(self.int_range)

    def to_json(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


@dataclass
class BaselineResult:
    kind: BaselineKind
    program_id: str
    denominator: int
    pool: List[MeasuredSeed]
    seeds: List[MeasuredSeed]
    log: CampaignLog
    elapsed: float = 0.0
    iterations: int = 0

    @property
    def cumulative(self) -> CoverageMap:
        return CoverageMap(self.program_id, _union(self.seeds), self.denominator)

    @property
    def pool_coverage(self) -> CoverageMap:
        return CoverageMap(self.program_id, _union(self.pool), self.denominator)

    def rows(self) -> List[SeedRow]:
        reason = "random" if self.kind is BaselineKind.B1 else "minimized"
        return [SeedRow(s.test_case, s.actual, reason, s.fault) for s in self.seeds]

    def stats(self) -> dict:
        return {
            "arm": self.kind.value,
            "seeds": len(self.seeds),
            "pool": len(self.pool),
            "coverage_percent": format_percent(self.cumulative),
            "pool_coverage_percent": format_percent(self.pool_coverage),
        }


def _distinct_random(rng, plan, n, cfg: BaselineConfig, seen: set) -> List[TestCase]:
    out = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > 1000 * n:
            raise RuntimeError("could not draw enough distinct random seeds")
        t = random_seed(rng, plan, cfg.int_range, cfg.nonnumeric_p)
        if t.canonical_text in seen:
            continue
        seen.add(t.canonical_text)
        out.append(t)
    return out


def run_baseline(kind, mini: MiniProgram, cfg: Optional[BaselineConfig] = None,
                 clock: Callable[[], float] = time.monotonic) -> BaselineResult:
    kind = BaselineKind(kind)
    cfg = cfg or BaselineConfig()
    rng = random.Random(cfg.rng_seed)
    plan = read_plan(mini)
    log = CampaignLog(clock)
    log.emit("campaign_start", arm=kind.value, program_id=mini.program_id,
             denominator=mini.program.denominator, config=cfg.to_json())
    seen: set = set()
    iterations = 0

    def run(t: TestCase) -> MeasuredSeed:
        m = measure(mini, t, cfg.step_limit)
        log.emit("executed", test=t.canonical_text, coverage=m.actual.to_json(),
                 error=m.fault.to_json() if m.fault else None)
        return m

    termination = "completed"
    if kind is BaselineKind.B1:
        pool = [run(t) for t in _distinct_random(rng, plan, cfg.b1_seeds, cfg, seen)]
        seeds = list(pool)
    elif kind is BaselineKind.B2:
        pool = [run(t) for t in _distinct_random(rng, plan, cfg.b2_pool, cfg, seen)]
        seeds = cmin_greedy(pool)
    else:
        pool = [run(t) for t in _distinct_random(rng, plan, cfg.b3_initial, cfg, seen)]
        covered = set(_union(pool))
        while True:
            if log.elapsed() >= cfg.time_limit_seconds:
                termination = "time_limit"
                break
            if cfg.max_iterations is not None and iterations >= cfg.max_iterations:
                termination = "max_iterations"
                break
            iterations += 1
            parent = rng.choice(pool)
            if not parent.test_case.tokens:
                continue
            child = mutate(parent.test_case, rng)
            if child.canonical_text in seen:
                continue
            seen.add(child.canonical_text)
            m = measure(mini, child, cfg.step_limit)
            if not m.actual.covered <= covered:
                covered |= m.actual.covered
                pool.append(m)
                log.emit("kept", test=child.canonical_text, coverage=m.actual.to_json(),
                         error=m.fault.to_json() if m.fault else None)
        seeds = cmin_greedy(pool)
    result = BaselineResult(kind, mini.program_id, mini.program.denominator, pool, seeds, log,
                            iterations=iterations)
    if kind is not BaselineKind.B1:
        log.emit("minimized", pool=len(pool), seeds=len(seeds))
    result.elapsed = log.elapsed()
    log.emit("campaign_end", termination=termination, iterations=iterations,
             seeds=len(seeds), cumulative=result.cumulative.to_json(),
             coverage_percent=format_percent(result.cumulative), elapsed=result.elapsed)
    return result


def export_baseline(result: BaselineResult, directory):
    return write_ics(directory, result.program_id, result.denominator, result.rows(),
                     result.stats())
