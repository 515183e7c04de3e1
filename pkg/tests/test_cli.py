import filecmp
import io
import json
import shutil
from pathlib import Path

import pytest

from corpusgen.cli import DEFAULTS, build_parser, effective_options, main

SNAP = Path(__file__).parent / "fixtures" / "cli"
REPLAY = Path(__file__).parent / "fixtures" / "replay"
PROGRAM = str(SNAP / "cards.mini")
FAST = ["--seed", "42", "--time-limit", "60", "--max-iterations", "300"]


def same_tree(a: Path, b: Path) -> bool:
    cmp = filecmp.dircmp(a, b)
    if cmp.left_only or cmp.right_only or cmp.funny_files:
        return False
    _, mismatch, errors = filecmp.cmpfiles(a, b, cmp.common_files, shallow=False)
    return not mismatch and not errors and all(
        same_tree(a / d, b / d) for d in cmp.common_dirs)


def test_generate_snapshot(tmp_path):
    out = tmp_path / "run"
    assert main(["generate", PROGRAM, "--provider", "mock", "--oracle-coverage", *FAST,
                 "--out", str(out)]) == 0
    assert same_tree(out / "ics", SNAP / "generate_ics")
    events = [json.loads(line) for line in (out / "campaign.jsonl").read_text().splitlines()]
    assert events[0]["event"] == "effective_config"
    assert events[0]["options"]["seed"] == 42
    assert events[-1]["event"] == "arm_result"
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["arms"][0]["arm"] == "corpusgen"


def test_generate_is_reproducible(tmp_path):
    for name in ("a", "b"):
        assert main(["generate", PROGRAM, *FAST, "--out", str(tmp_path / name)]) == 0
    assert same_tree(tmp_path / "a" / "ics", tmp_path / "b" / "ics")


def test_generate_missing_program(tmp_path, capsys):
    assert main(["generate", str(tmp_path / "nope.mini"), "--out", str(tmp_path)]) == 1
    assert "cannot read program" in capsys.readouterr().err


def test_generate_parse_error(tmp_path, capsys):
    bad = tmp_path / "bad.mini"
    bad.write_text("read_int x\nif x\n")
    assert main(["generate", str(bad), "--out", str(tmp_path / "o")]) == 1
    assert "bad.mini:2" in capsys.readouterr().err


def test_default_time_limit_is_five_minutes():
    args = build_parser().parse_args(["generate", PROGRAM, "--out", "x"])
    opts = effective_options(args)
    assert opts["time_limit"] == 300.0 and opts["seed"] == 42 and opts["provider"] == "mock"


def test_config_file_and_flag_precedence(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"time_limit": 12, "seed": 7}))
    args = build_parser().parse_args(["generate", PROGRAM, "--out", "x", "--config", str(cfg),
                                      "--seed", "9"])
    opts = effective_options(args)
    assert opts["time_limit"] == 12 and opts["seed"] == 9
    assert set(opts) == set(DEFAULTS)


def test_config_with_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"speed": 3}))
    assert main(["generate", PROGRAM, "--out", str(tmp_path), "--config", str(cfg)]) == 1
    assert "unknown config keys" in capsys.readouterr().err


def test_usage_error_exit_code(capsys):
    with pytest.raises(SystemExit) as info:
        main(["generate", "--bogus"])
    assert info.value.code == 1


def test_replay_generate(tmp_path, no_network):
    out = tmp_path / "r"
    code = main(["generate", PROGRAM, "--provider", "replay", "--predictor", "llm",
                 "--cassette", str(REPLAY / "cards.cassette.jsonl"), "--time-limit", "300",
                 "--max-iterations", "24", "--simulate-latency", "--out", str(out)])
    assert code == 0
    assert same_tree(out / "ics", REPLAY / "ics")
    assert no_network == []


def test_replay_needs_cassette(tmp_path, capsys):
    assert main(["generate", PROGRAM, "--provider", "replay", "--out", str(tmp_path)]) == 1
    assert "needs --cassette" in capsys.readouterr().err


def test_replay_drift_is_a_provider_failure(tmp_path):
    other = tmp_path / "other.mini"
    other.write_text("read_int x\nprint x\n")
    code = main(["generate", str(other), "--provider", "replay", "--predictor", "llm",
                 "--cassette", str(REPLAY / "cards.cassette.jsonl"), "--out", str(tmp_path / "o")])
    assert code == 2
    assert (tmp_path / "o" / "ics" / "manifest.json").exists()


def test_replay_past_the_cassette_end_is_a_provider_failure(tmp_path, no_network):
    out = tmp_path / "o"
    code = main(["generate", PROGRAM, "--provider", "replay", "--predictor", "llm",
                 "--cassette", str(REPLAY / "cards.cassette.jsonl"), "--time-limit", "300",
                 "--max-iterations", "30", "--simulate-latency", "--out", str(out)])
    assert code == 2
    last = (out / "campaign.jsonl").read_text().splitlines()
    assert any('"cassette_exhausted"' in line for line in last)
    assert no_network == []


def test_live_without_key_is_a_provider_failure(tmp_path, monkeypatch, no_network):
    monkeypatch.delenv("CORPUSGEN_API_KEY", raising=False)
    code = main(["generate", PROGRAM, "--provider", "live", "--out", str(tmp_path / "o")])
    assert code == 2


def test_mock_provider_rejects_llm_predictor(tmp_path):
    assert main(["generate", PROGRAM, "--predictor", "llm", "--out", str(tmp_path)]) == 1


def test_baseline_snapshot(tmp_path):
    out = tmp_path / "b3"
    assert main(["baseline", "b3", PROGRAM, *FAST, "--out", str(out)]) == 0
    assert same_tree(out / "ics", SNAP / "b3_ics")


def test_baseline_bad_kind(tmp_path):
    with pytest.raises(SystemExit) as info:
        main(["baseline", "b9", PROGRAM, "--out", str(tmp_path)])
    assert info.value.code == 1


def test_baseline_b1_writes_five_seeds(tmp_path):
    assert main(["baseline", "b1", PROGRAM, "--out", str(tmp_path)]) == 0
    manifest = json.loads((tmp_path / "ics" / "manifest.json").read_text())
    assert len(manifest["seeds"]) == 5


def test_batch_mode(tmp_path):
    progs = tmp_path / "progs"
    progs.mkdir()
    shutil.copy(PROGRAM, progs / "cards.mini")
    (progs / "tiny.mini").write_text("read_int x\nprint 10 / x\n")
    out = tmp_path / "out"
    assert main(["generate", "--programs", str(progs), *FAST, "--out", str(out),
                 "--jobs", "2"]) == 0
    assert (out / "cards" / "ics" / "manifest.json").exists()
    assert (out / "tiny" / "metrics.json").exists()
    assert main(["generate", PROGRAM, "--programs", str(progs), "--out", str(out)]) == 1


def test_minimize_snapshot(tmp_path):
    src = tmp_path / "seeds"
    shutil.copytree(SNAP / "generate_ics", src)
    before = {p.name: p.read_bytes() for p in src.iterdir()}
    out = tmp_path / "min"
    assert main(["minimize", str(src), PROGRAM, "--out", str(out)]) == 0
    assert same_tree(out, SNAP / "minimized")
    assert {p.name: p.read_bytes() for p in src.iterdir()} == before


def test_minimize_refuses_in_place(tmp_path):
    src = tmp_path / "seeds"
    shutil.copytree(SNAP / "generate_ics", src)
    assert main(["minimize", str(src), PROGRAM, "--out", str(src)]) == 1


def test_minimize_missing_dir(tmp_path):
    assert main(["minimize", str(tmp_path / "none"), PROGRAM, "--out", str(tmp_path / "o")]) == 1


def test_trace_snapshot(capsys):
    assert main(["trace", PROGRAM, str(SNAP / "input.txt")]) == 0
    assert capsys.readouterr().out == (SNAP / "trace.txt").read_text()


def test_trace_missing_input(tmp_path):
    assert main(["trace", PROGRAM, str(tmp_path / "none.txt")]) == 1


def test_report_from_logs(tmp_path, capsys):
    main(["baseline", "b1", PROGRAM, "--out", str(tmp_path / "b1")])
    main(["generate", PROGRAM, *FAST, "--out", str(tmp_path / "g")])
    capsys.readouterr()
    logs = [str(tmp_path / "b1" / "campaign.jsonl"), str(tmp_path / "g" / "campaign.jsonl")]
    assert main(["report", *logs]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("| Arm | Errors per Seed (EPS)")
    assert lines[2].startswith("| Baseline 1 | ") and lines[3].startswith("| corpusgen | 4/7 = ")
    assert main(["report", *logs, "--format", "json"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert [a["arm"] for a in doc["arms"]] == ["Baseline 1", "corpusgen"]


def test_report_rejects_logs_without_results(tmp_path):
    log = tmp_path / "x.jsonl"
    log.write_text('{"t": 0, "event": "campaign_start"}\n')
    assert main(["report", str(log)]) == 1
    assert main(["report", str(tmp_path / "missing.jsonl")]) == 1


def test_bundled_program_by_name(capsys, monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setattr("sys.stdin", io.StringIO("1 S 1"))
    assert main(["trace", "cards", "-"]) == 0
    assert capsys.readouterr().out == (SNAP / "trace.txt").read_text()
