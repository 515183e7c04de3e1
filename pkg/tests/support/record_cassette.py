"""Regenerate the committed replay fixture.

    python3 tests/support/record_cassette.py

Records a campaign on the bundled cards program against the scripted
endpoint, redacts the cassette and writes it next to the resulting corpus.
"""

from __future__ import annotations

import shutil
import sys
from pathlib import Path

HERE = Path(__file__).resolve().parent
sys.path.insert(0, str(HERE.parent))

from corpusgen.generation import LLMGenerator  # noqa: E402
from corpusgen.minilang import describe_input_format, load_bundled  # noqa: E402
from corpusgen.orchestrator import CampaignConfig, corpus_stats, export_ics, run_campaign  # noqa: E402
from corpusgen.prediction import LLMPredictor  # noqa: E402
from corpusgen.transport import ChatTransport, redact  # noqa: E402
from support.fake_llm import FakeLLM  # noqa: E402

FIXTURES = HERE.parent / "fixtures" / "replay"
ITERATIONS = 24


def campaign_config() -> CampaignConfig:
    return CampaignConfig(time_limit_seconds=300.0, max_iterations=ITERATIONS,
                          generator="llm", predictor="llm")


def main() -> None:
    mini = load_bundled("cards")
    fake = FakeLLM(mini)
    transport = ChatTransport("record", api_key="sk-fixture-not-a-real-key",
                              base_url="https://llm.invalid/v1",
                              http_transport=fake.transport())
    transport.cassette.metadata["recorded_at"] = "2026-01-01T00:00:00+00:00"
    corpus, log = run_campaign(mini.program, LLMGenerator(transport), LLMPredictor(transport),
                             campaign_config(), format_spec=describe_input_format(mini))
    if FIXTURES.exists():
        shutil.rmtree(FIXTURES)
    FIXTURES.mkdir(parents=True)
    redact(transport.cassette).save(FIXTURES / "cards.cassette.jsonl")
    export_ics(corpus, FIXTURES / "ics", corpus_stats(corpus, log))
    print(f"{len(transport.cassette.entries)} exchanges, {len(corpus)} seeds")


if __name__ == "__main__":
    main()
