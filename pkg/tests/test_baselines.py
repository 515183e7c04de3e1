import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from corpusgen.baselines import (INT64_MAX, BaselineConfig, MeasuredSeed, cmin_greedy,
                                 exact_min_cover, greedy_bound, mutate, random_seed,
                                 run_baseline)
from corpusgen.coverage import Program
from corpusgen.errors import OracleTooLarge
from corpusgen.minilang import ReadSite, Status, execute, parse_program, read_plan
from corpusgen.testcase import TestCase

THREE_INTS = [ReadSite(i, "int", f"v{i}", 0) for i in (1, 2, 3)]


def seeds_from(sets, n_lines=64, sizes=None):
    p = Program("r", tuple("x" for _ in range(n_lines)), range(1, n_lines + 1))
    sizes = sizes or [1] * len(sets)
    return [MeasuredSeed(TestCase(("a" * size,)), p.coverage(s), Status.NORMAL)
            for s, size in zip(sets, sizes)]


def covers(seeds):
    out = set()
    for s in seeds:
        out |= s.actual.covered
    return out


# ---------------------------------------------------------------------------
# random inputs and mutation


def test_random_seed_is_reproducible():
    a = random_seed(random.Random(7), THREE_INTS)
    b = random_seed(random.Random(7), THREE_INTS)
    assert a == b


def test_random_seed_follows_read_count():
    rng = random.Random(0)
    for _ in range(50):
        assert len(random_seed(rng, THREE_INTS)) == 3


def test_loop_reads_repeat(cards):
    rng = random.Random(3)
    lengths = {len(random_seed(rng, read_plan(cards))) for _ in range(200)}
    assert lengths == {3, 5, 7, 9}


def test_program_without_reads_still_gets_tokens():
    assert len(random_seed(random.Random(0), [])) >= 1


def test_integers_stay_in_range():
    rng = random.Random(1)
    values = [int(t) for _ in range(2000) for t in random_seed(rng, THREE_INTS).tokens
              if t.lstrip("-").isdigit()]
    assert min(values) >= -100 and max(values) <= 1000
    assert min(values) < 0 < max(values)


def test_non_numeric_share_is_five_percent():
    rng = random.Random(42)
    site = [ReadSite(1, "int", "x", 0)]
    draws = [random_seed(rng, site).tokens[0] for _ in range(10_000)]
    share = sum(not t.lstrip("-").isdigit() for t in draws) / len(draws)
    assert abs(share - 0.05) <= 0.01


def test_mutation_is_reproducible():
    t = TestCase.from_text("5 7 9")
    assert mutate(t, random.Random(3)) == mutate(t, random.Random(3))


def test_mutating_one_token_never_yields_empty():
    rng = random.Random(0)
    t = TestCase.from_text("5")
    for _ in range(500):
        assert len(mutate(t, rng)) >= 1


def test_mutants_include_boundary_values():
    rng = random.Random(42)
    t = TestCase.from_text("5 7 9")
    mutants = [mutate(t, rng) for _ in range(1000)]
    assert any(str(INT64_MAX) in m.tokens for m in mutants)
    assert any("0" in m.tokens for m in mutants) and any("-1" in m.tokens for m in mutants)


def test_mutation_covers_all_operators():
    rng = random.Random(5)
    t = TestCase.from_text("5 7 9")
    lengths = {len(mutate(t, rng)) for _ in range(300)}
    assert lengths == {2, 3, 4}  # delete, in-place edits, duplicate


def test_cannot_mutate_empty():
    with pytest.raises(ValueError):
        mutate(TestCase(()), random.Random(0))


# ---------------------------------------------------------------------------
# minimization


def test_dominant_seed_wins():
    seeds = seeds_from([{1, 2}, {2, 3}, {1, 2, 3}])
    assert [s.actual.covered for s in cmin_greedy(seeds)] == [{1, 2, 3}]
    assert [s.actual.covered for s in exact_min_cover(seeds)] == [{1, 2, 3}]


def test_disjoint_seeds_are_all_kept():
    seeds = seeds_from([{1}, {2}])
    assert cmin_greedy(seeds) == seeds
    assert exact_min_cover(seeds) == seeds


def test_empty_input():
    assert cmin_greedy([]) == [] and exact_min_cover([]) == []


def test_ties_prefer_smaller_then_earlier():
    seeds = seeds_from([{1, 2}, {1, 2}, {1, 2}], sizes=[5, 2, 2])
    assert cmin_greedy(seeds) == [seeds[1]]
    assert exact_min_cover(seeds) == [seeds[1]]


def test_pruning_removes_redundant_greedy_picks():
    # greedy takes the big seed first, then needs both halves; the big one is redundant
    seeds = seeds_from([{1, 2, 3, 4}, {1, 2, 5}, {3, 4, 6}], sizes=[1, 1, 1])
    kept = cmin_greedy(seeds)
    assert covers(kept) == {1, 2, 3, 4, 5, 6}
    assert kept == seeds[1:]


def test_seeds_without_coverage_are_dropped():
    seeds = seeds_from([set(), {1}, set()])
    assert cmin_greedy(seeds) == [seeds[1]]


def test_oracle_size_limit():
    with pytest.raises(OracleTooLarge):
        exact_min_cover(seeds_from([{1}] * 21))


def test_greedy_bound():
    assert greedy_bound(0, 0) == 0
    assert greedy_bound(1, 1) == 1
    assert greedy_bound(64, 3) == 16  # ceil((ln 64 + 1) * 3) = ceil(15.47)


instances = st.integers(1, 64).flatmap(lambda m: st.lists(
    st.sets(st.integers(1, m), max_size=m), min_size=0, max_size=12))


@settings(max_examples=150, deadline=None)
@given(instances, st.randoms(use_true_random=False))
def test_greedy_matches_oracle_contract(sets, rnd):
    seeds = seeds_from(sets, sizes=[rnd.randint(1, 9) for _ in sets])
    greedy, opt = cmin_greedy(seeds), exact_min_cover(seeds)
    union = covers(seeds)
    assert covers(greedy) == union == covers(opt)
    for i in range(len(greedy)):
        assert covers(greedy[:i] + greedy[i + 1:]) != union
    assert len(opt) <= len(greedy) <= greedy_bound(len(union), len(opt))


# ---------------------------------------------------------------------------
# arms


@pytest.fixture
def quick():
    return BaselineConfig(time_limit_seconds=30, max_iterations=400)


def test_b1_emits_five_seeds(bundled, quick):
    result = run_baseline("b1", bundled, quick)
    assert len(result.seeds) == 5 == len(result.pool)
    assert len({s.test_case for s in result.seeds}) == 5


def test_b2_pool_is_fifty(bundled, quick):
    result = run_baseline("b2", bundled, quick)
    assert len(result.pool) == 50
    assert result.cumulative.covered == result.pool_coverage.covered
    assert len(result.seeds) <= 50


def test_b3_keeps_full_corpus_coverage(bundled, quick):
    result = run_baseline("b3", bundled, quick)
    assert result.cumulative.covered == result.pool_coverage.covered
    assert result.iterations == 400
    assert result.log.termination == "max_iterations"


@pytest.mark.parametrize("kind", ["b1", "b2", "b3"])
def test_arms_are_reproducible(cards, quick, kind):
    a = run_baseline(kind, cards, quick)
    b = run_baseline(kind, cards, quick)
    assert [s.test_case for s in a.seeds] == [s.test_case for s in b.seeds]
    assert [s.test_case for s in a.pool] == [s.test_case for s in b.pool]


def test_b3_respects_time_limit(cards):
    result = run_baseline("b3", cards, BaselineConfig(time_limit_seconds=0.2))
    assert result.log.termination == "time_limit"
    assert result.elapsed < 1.0


def test_measured_seeds_come_from_execution(cards, quick):
    for s in run_baseline("b2", cards, quick).pool:
        assert execute(cards, s.test_case).covered == s.actual


def test_program_without_reads():
    p = parse_program("print 1\n", "noread")
    assert len(run_baseline("b1", p).seeds) == 5


def test_unknown_arm(cards):
    with pytest.raises(ValueError):
        run_baseline("b4", cards)
