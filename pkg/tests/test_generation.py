from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from corpusgen.coverage import Program, render_annotated
from corpusgen.errors import GenerationExhausted, GenerationParseError
from corpusgen.generation import (ERROR_SCENARIOS, GenerationMode, GenerationRequest,
                                  LLMGenerator, MockGenerator, build_coverage_prompt,
                                  build_error_prompt, build_prompt, parse_generation,
                                  serialize_generation)
from corpusgen.minilang import describe_input_format, execute
from corpusgen.testcase import TestCase
from support.scripted import ScriptedTransport

PROMPTS = Path(__file__).parent / "fixtures" / "prompts"


def coverage_request(mini, lines, history=()):
    p = mini.program
    return GenerationRequest(p, GenerationMode.COVERAGE_SEEKING, describe_input_format(mini),
                             render_annotated(p, p.coverage(lines)), history)


def error_request(mini, attempt=0):
    return GenerationRequest(mini.program, GenerationMode.ERROR_SEEKING,
                             describe_input_format(mini), attempt=attempt)


def test_coverage_prompt_golden(cards):
    req = coverage_request(cards, {2, 3, 4, 5, 20, 21, 34, 35, 36, 37}, ("0", "1\nS\n1"))
    assert build_coverage_prompt(req) == (PROMPTS / "cards_coverage.txt").read_text()


def test_error_prompt_golden(cards):
    assert build_error_prompt(error_request(cards)) == (PROMPTS / "cards_error.txt").read_text()


def test_coverage_prompt_structure(cards):
    req = coverage_request(cards, {2, 3})
    text = build_coverage_prompt(req)
    marks = ["Provide only the test input without explanations", "Test Case Input:",
             "Code Coverage of Current Corpus:"]
    positions = [text.index(m) for m in marks]
    assert positions == sorted(positions)
    assert text.endswith(req.annotated.text)


def test_error_prompt_lists_scenarios_and_source(cards):
    text = build_error_prompt(error_request(cards))
    for label in ("InputMismatchException", "ArithmeticException", "NullPointerException",
                  "NumberFormatException", "IndexOutOfBoundsException",
                  "Other types of runtime errors and exceptions"):
        assert label in text
    assert len(ERROR_SCENARIOS) == 5
    assert cards.source in text
    assert text.index("Test Case Input:") < text.index(cards.source)


def test_history_shows_last_five(cards):
    history = tuple(str(i) for i in range(8))
    text = build_prompt(coverage_request(cards, {2}, history))
    assert "- 2\n" not in text and "- 3\n" in text and "- 7\n" in text


def test_request_validation(cards):
    with pytest.raises(ValueError):
        GenerationRequest(cards.program, GenerationMode.ERROR_SEEKING, "f",
                          render_annotated(cards.program, cards.program.coverage()))
    with pytest.raises(ValueError):
        GenerationRequest(cards.program, GenerationMode.COVERAGE_SEEKING, "f")


def test_coverage_prompt_refuses_full_coverage(cards):
    with pytest.raises(ValueError):
        build_coverage_prompt(coverage_request(cards, cards.program.executable))


@pytest.mark.parametrize("reply,tokens", [
    ("Test Case Input:\n3\nS 1\n", ("3", "S", "1")),
    ("Test Case Input: 5 7", ("5", "7")),
    ("Here you go.\nTest Case Input:\n```\n1 S 1\n```\nThis hits line 37.", ("1", "S", "1")),
    ("test case input:\n<input 1>\n4\n\nexplanation: 4", ("4",)),
    ("Sure:\n```text\n2 H 3\n```", ("2", "H", "3")),
    ("The input is\n2\n1 2", ("2", "1", "2")),
    ("Test Case Input:\nfirst\nTest Case Input:\nsecond", ("second",)),
])
def test_parse_generation(reply, tokens):
    assert parse_generation(reply).tokens == tokens


@pytest.mark.parametrize("reply", ["", "Test Case Input:\n<input 1>\n<input 2>...\n",
                                   "I cannot help with that request."])
def test_parse_generation_rejects(reply):
    with pytest.raises(GenerationParseError):
        parse_generation(reply)


@given(st.lists(st.text(alphabet="abcXYZ0123456789-+.!", min_size=1, max_size=5),
                min_size=1, max_size=8))
def test_serialize_parse_roundtrip(tokens):
    t = TestCase(tuple(tokens))
    assert parse_generation(serialize_generation(t)) == t


def test_mock_generator_is_pure(cards):
    req = coverage_request(cards, {2, 3, 4, 5})
    assert MockGenerator(42).generate(req) == MockGenerator(42).generate(req)
    outs = {MockGenerator(s).generate(req) for s in range(20)}
    assert len(outs) > 1


def test_mock_generator_follows_read_plan(cards):
    req = coverage_request(cards, {2, 3, 4, 5})
    for seed in range(30):
        t = MockGenerator(seed).generate(req)
        # well-formed coverage inputs never fail on type
        out = execute(cards, t)
        assert out.fault is None or out.fault.kind.value not in ("input_mismatch",)


def test_mock_error_mode_triggers_errors(cards):
    gen = MockGenerator(42)
    kinds = set()
    for attempt in range(60):
        out = execute(cards, gen.generate(error_request(cards, attempt)))
        if out.fault:
            kinds.add(out.fault.kind.value)
    assert {"input_mismatch", "input_exhausted", "index_out_of_bounds"} <= kinds


def test_mock_handles_foreign_programs():
    p = Program("java", ("class A {", "  int f(int x) { return x; }", "}"), {2})
    req = GenerationRequest(p, GenerationMode.ERROR_SEEKING, "two ints", language="Java")
    assert len(MockGenerator(1).generate(req).tokens) >= 1


def test_llm_generator_reprompts_then_succeeds(cards):
    t = ScriptedTransport(["no idea", "Test Case Input:\n1 S 1"])
    out = LLMGenerator(t).generate(error_request(cards))
    assert out.tokens == ("1", "S", "1")
    assert len(t.requests) == 2
    assert "could not be used" in t.requests[1].user
    assert t.requests[0].temperature == 0.7


def test_llm_generator_gives_up_after_three_attempts(cards):
    t = ScriptedTransport(["I am not sure what to write."] * 5)
    with pytest.raises(GenerationExhausted):
        LLMGenerator(t).generate(error_request(cards))
    assert len(t.requests) == 3
