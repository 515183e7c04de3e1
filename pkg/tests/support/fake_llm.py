"""Scripted chat-completions endpoint for offline recording and transport tests.

Generation prompts are answered by :class:`MockGenerator`; prediction prompts
by executing the program and rendering the exact annotated listing.
"""

from __future__ import annotations

import json

import httpx

from corpusgen import generation, prediction
from corpusgen.coverage import parse_annotated, render_annotated
from corpusgen.generation import GenerationMode, GenerationRequest, MockGenerator
from corpusgen.minilang import MiniProgram, describe_input_format, execute
from corpusgen.prediction import Prediction, render_prediction
from corpusgen.testcase import TestCase

LISTING_HEADER = "Code Coverage of Current Corpus:\n"
INPUT_HEADER = "Test input (whitespace-separated tokens, read in order):\n"


def completion(text: str) -> dict:
    return {"id": "cmpl-fake", "object": "chat.completion",
            "choices": [{"index": 0, "message": {"role": "assistant", "content": text},
                         "finish_reason": "stop"}]}


class FakeLLM:
    def __init__(self, mini: MiniProgram, seed: int = 42):
        self.mini = mini
        self.generator = MockGenerator(seed)
        self.generations = 0
        self.predictions = 0

    def answer_generation(self, user: str) -> str:
        program = self.mini.program
        fmt = describe_input_format(self.mini)
        if LISTING_HEADER in user:
            rows = user.split(LISTING_HEADER, 1)[1].split("\n")[:len(program.source_lines)]
            covered = parse_annotated("\n".join(rows), program)
            req = GenerationRequest(program, GenerationMode.COVERAGE_SEEKING, fmt,
                                    render_annotated(program, covered), attempt=self.generations)
        else:
            req = GenerationRequest(program, GenerationMode.ERROR_SEEKING, fmt,
                                    attempt=self.generations)
        self.generations += 1
        test = self.generator.generate(req)
        return f"{generation.INPUT_MARKER}\n{' '.join(test.tokens)}\n"

    def answer_prediction(self, user: str) -> str:
        self.predictions += 1
        text = user.split(INPUT_HEADER, 1)[1].split("\nAnswer with exactly", 1)[0]
        out = execute(self.mini, TestCase(tuple(text.split())))
        return render_prediction(self.mini.program, Prediction(out.covered, out.fault))

    def reply(self, body: dict) -> str:
        system = body["messages"][0]["content"]
        user = body["messages"][1]["content"]
        if system == prediction.SYSTEM_PROMPT:
            return self.answer_prediction(user)
        return self.answer_generation(user)

    def handler(self, request: httpx.Request) -> httpx.Response:
        body = json.loads(request.content)
        return httpx.Response(200, json=completion(self.reply(body)))

    def transport(self) -> httpx.MockTransport:
        return httpx.MockTransport(self.handler)
