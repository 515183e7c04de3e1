"""Command line entry point: ``corpusgen <command> ...``.

Commands::

    generate  PROGRAM | --programs DIR   build a corpus with the generate/predict loop
    baseline  {b1,b2,b3} PROGRAM | --programs DIR
    minimize  SEED_DIR PROGRAM           execute seeds and keep a covering subset
    trace     PROGRAM INPUT              annotated listing and outcome of one run
    report    LOG [LOG ...]              comparison table from campaign logs

Output tree of ``generate`` and ``baseline`` (one per program under
``--programs``, in ``OUT/<program_id>/``)::

    OUT/ics/id_000000 ...   seed files
    OUT/ics/manifest.json   per-seed coverage, reasons, subsumption flags
    OUT/campaign.jsonl      event log, starting with the effective config
    OUT/metrics.json        EPS/EPC/EPT report for this run

Exit codes: 0 ok, 1 usage or input error, 2 provider failure, 3 internal
invariant violation.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

from .baselines import BaselineConfig, cmin_greedy, export_baseline, measure, run_baseline
from .coverage import CoverageMap, format_percent, percent, render_annotated
from .errors import (CassetteDrift, CorpusgenError, DegenerateInterval, DegenerateProgram,
                     OracleTooLarge, ParseError, ProgramMismatch, ProviderUnavailable)
from .generation import LLMGenerator, MockGenerator
from .ics import SeedRow, read_ics, write_ics
from .metrics import ArmResult, emit_report, report_json, unique_errors
from .minilang import (DEFAULT_STEP_LIMIT, MiniProgram, bundled_programs,
                       describe_input_format, execute, load_bundled, parse_program)
from .orchestrator import (CampaignConfig, CampaignLog, corpus_stats, export_ics,
                           run_campaign)
from .prediction import LLMPredictor, OraclePredictor
from .testcase import TestCase
from .transport import ChatTransport, SimulatedClock

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_PROVIDER = 2
EXIT_INVARIANT = 3

ARM_LABELS = {"b1": "Baseline 1", "b2": "Baseline 2", "b3": "Baseline 3", "generate": "corpusgen"}

# option name -> built-in default; a JSON config file may set any of these
DEFAULTS = {
    "provider": "mock",
    "predictor": "oracle",
    "seed": 42,
    "time_limit": 300.0,
    "max_iterations": None,
    "error_cap": 10,
    "error_tail": None,
    "step_limit": DEFAULT_STEP_LIMIT,
    "cassette": None,
    "simulate_latency": False,
    "model": None,
    "jobs": 1,
}

log = logging.getLogger("corpusgen")


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _run_options(p: argparse.ArgumentParser) -> None:
    # every default is None so file values can be told apart from flags
    p.add_argument("--config", help="JSON file with option values; flags override it")
    p.add_argument("--seed", type=int, help="rng seed (default 42)")
    p.add_argument("--time-limit", type=float, help="budget in seconds (default 300)")
    p.add_argument("--max-iterations", type=int, help="stop after this many iterations")
    p.add_argument("--step-limit", type=int, help="interpreter step budget per execution")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--programs", help="run every *.mini file in this directory")
    p.add_argument("--jobs", type=int, help="parallel programs with --programs (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = ArgumentParser(
        prog="corpusgen", description="Build and evaluate initial seed corpora for MiniLang programs.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=ArgumentParser)

    g = sub.add_parser("generate", help="build a corpus with the generate/predict loop")
    g.add_argument("program", nargs="?")
    _run_options(g)
    g.add_argument("--provider", choices=["mock", "live", "record", "replay"])
    g.add_argument("--predictor", choices=["oracle", "llm"])
    g.add_argument("--oracle-coverage", dest="predictor", action="store_const", const="oracle",
                   help="shorthand for --predictor oracle")
    g.add_argument("--cassette", help="cassette file for record/replay")
    g.add_argument("--simulate-latency", action="store_const", const=True,
                   help="in replay, charge recorded latencies instead of wall-clock time")
    g.add_argument("--model", help="model name for live/record (default from environment)")
    g.add_argument("--error-cap", type=int, help="max error-trigger seeds (default 10)")
    g.add_argument("--error-tail", type=float,
                   help="seek errors for this final share of the budget regardless of coverage")

    b = sub.add_parser("baseline", help="run a comparison arm")
    b.add_argument("kind", choices=["b1", "b2", "b3"])
    b.add_argument("program", nargs="?")
    _run_options(b)

    m = sub.add_parser("minimize", help="execute seeds and keep a covering subset")
    m.add_argument("seed_dir")
    m.add_argument("program")
    m.add_argument("--out", required=True)
    m.add_argument("--step-limit", type=int, default=DEFAULT_STEP_LIMIT)

    t = sub.add_parser("trace", help="annotated listing and outcome of one run")
    t.add_argument("program")
    t.add_argument("input", help="input file, or - for stdin")
    t.add_argument("--step-limit", type=int, default=DEFAULT_STEP_LIMIT)

    r = sub.add_parser("report", help="comparison table from campaign logs")
    r.add_argument("logs", nargs="+")
    r.add_argument("--format", choices=["markdown", "json"], default="markdown")
    r.add_argument("--places", type=int, default=3)
    r.add_argument("--truncate", action="store_true",
                   help="cut values off instead of rounding half-to-even")
    return parser


def effective_options(args: argparse.Namespace) -> dict:
    """Built-in defaults, then the config file, then explicit flags."""
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            loaded = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(loaded) - set(DEFAULTS))
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(unknown)}")
        opts.update(loaded)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            opts[key] = value
    return opts


def load_program(path) -> MiniProgram:
    """Parse a program file; a bare name of a bundled program also works."""
    path = Path(path)
    if not path.exists() and str(path) in bundled_programs():
        return load_bundled(str(path))
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read program {path}: {exc.strerror or exc}") from exc
    try:
        return parse_program(text, program_id=path.stem)
    except ParseError as exc:
        raise UsageError(f"{path}:{exc.line}:{exc.column}: {exc}") from exc


def _program_paths(args) -> List[Path]:
    if args.programs and args.program:
        raise UsageError("give either a program or --programs, not both")
    if args.programs:
        d = Path(args.programs)
        if not d.is_dir():
            raise UsageError(f"{d} is not a directory")
        paths = sorted(d.glob("*.mini"))
        if not paths:
            raise UsageError(f"no *.mini programs in {d}")
        return paths
    if not args.program:
        raise UsageError("a program path is required")
    return [Path(args.program)]


def _executed_result(arm: str, mini: MiniProgram, tests, elapsed: float, step_limit: int):
    outcomes = [execute(mini, t, step_limit) for t in tests]
    covered = CoverageMap(mini.program_id, frozenset(), mini.program.denominator)
    for o in outcomes:
        covered = covered | o.covered
    # millisecond resolution, never zero, so EPT stays defined for instant arms
    seconds = Fraction(max(1, round(elapsed * 1000)), 1000)
    return ArmResult(arm, len(outcomes), unique_errors(outcomes), percent(covered),
                     seconds, mini.program_id)


def _finish(out: Path, campaign: CampaignLog, opts: dict, result: ArmResult) -> None:
    campaign.events.insert(0, {"t": 0.0, "event": "effective_config", "options": opts})
    campaign.emit("arm_result", **result.to_json())
    campaign.write(out / "campaign.jsonl")
    (out / "metrics.json").write_text(
        json.dumps(report_json([result]), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _make_transport(opts: dict, clock) -> ChatTransport:
    provider = opts["provider"]
    if provider in ("record", "replay") and not opts["cassette"]:
        raise UsageError(f"--provider {provider} needs --cassette")
    if provider == "replay":
        path = Path(opts["cassette"])
        if not path.is_file():
            raise UsageError(f"cassette {path} not found")
        return ChatTransport("replay", cassette_path=path, clock=clock)
    return ChatTransport.from_env(provider, cassette_path=opts["cassette"])


def generate_one(path: Path, out: Path, opts: dict) -> int:
    mini = load_program(path)
    cfg = CampaignConfig(
        time_limit_seconds=float(opts["time_limit"]),
        error_mode_seed_cap=int(opts["error_cap"]),
        error_tail_fraction=opts["error_tail"],
        max_iterations=opts["max_iterations"],
        generator="mock" if opts["provider"] == "mock" else "llm",
        predictor=opts["predictor"],
        rng_seed=int(opts["seed"]),
    )
    clock = None
    if opts["provider"] == "replay" and opts["simulate_latency"]:
        clock = SimulatedClock()
    transport = None
    if opts["provider"] == "mock":
        if opts["predictor"] == "llm":
            raise UsageError("the mock provider pairs only with the oracle predictor")
        generator = MockGenerator(cfg.rng_seed)
    else:
        transport = _make_transport(opts, clock)
        generator = LLMGenerator(transport, opts["model"], attempts=cfg.generation_attempts)
    if opts["predictor"] == "llm":
        predictor = LLMPredictor(transport, opts["model"], reprompts=cfg.prediction_reprompts)
    else:
        predictor = OraclePredictor(mini, int(opts["step_limit"]))
    kwargs = {"format_spec": describe_input_format(mini)}
    if clock is not None:
        kwargs["clock"] = clock
    try:
        corpus, campaign = run_campaign(mini.program, generator, predictor, cfg, **kwargs)
    finally:
        if transport is not None:
            transport.close()
    out.mkdir(parents=True, exist_ok=True)
    export_ics(corpus, out / "ics", corpus_stats(corpus, campaign))
    elapsed = campaign.of("campaign_end")[-1]["elapsed"]
    result = _executed_result(ARM_LABELS["generate"], mini,
                              [s.test_case for s in corpus.seeds], elapsed, int(opts["step_limit"]))
    _finish(out, campaign, opts, result)
    log.info("%s: %d seeds, %s%% coverage", mini.program_id, len(corpus),
             format_percent(corpus.cumulative))
    if campaign.termination in ("provider_unavailable", "cassette_drift", "cassette_exhausted"):
        return EXIT_PROVIDER
    return EXIT_OK


def baseline_one(kind: str, path: Path, out: Path, opts: dict) -> int:
    mini = load_program(path)
    cfg = BaselineConfig(time_limit_seconds=float(opts["time_limit"]), rng_seed=int(opts["seed"]),
                         max_iterations=opts["max_iterations"], step_limit=int(opts["step_limit"]))
    result = run_baseline(kind, mini, cfg)
    out.mkdir(parents=True, exist_ok=True)
    export_baseline(result, out / "ics")
    arm = _executed_result(ARM_LABELS[kind], mini, [s.test_case for s in result.seeds],
                           result.elapsed, cfg.step_limit)
    _finish(out, result.log, opts, arm)
    return EXIT_OK


def _run_batch(fn, paths: List[Path], out: Path, opts: dict, *extra) -> int:
    if len(paths) == 1:
        return fn(*extra, paths[0], out, opts)
    jobs = max(1, int(opts["jobs"]))
    targets = [out / p.stem for p in paths]
    if jobs == 1:
        codes = [fn(*extra, p, o, opts) for p, o in zip(paths, targets)]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(fn, *extra, p, o, opts) for p, o in zip(paths, targets)]
            codes = [f.result() for f in futures]
    return max(codes)


def cmd_generate(args) -> int:
    opts = effective_options(args)
    return _run_batch(generate_one, _program_paths(args), Path(args.out), opts)


def cmd_baseline(args) -> int:
    opts = effective_options(args)
    return _run_batch(baseline_one, _program_paths(args), Path(args.out), opts, args.kind)


def _read_seed_dir(path: Path) -> List[TestCase]:
    if not path.is_dir():
        raise UsageError(f"{path} is not a directory")
    try:
        return read_ics(path)
    except ValueError as exc:
        raise UsageError(f"bad seed in {path}: {exc}") from exc


def cmd_minimize(args) -> int:
    mini = load_program(args.program)
    src, out = Path(args.seed_dir), Path(args.out)
    if out.resolve() == src.resolve():
        raise UsageError("--out must differ from the seed directory")
    tests = _read_seed_dir(src)
    measured = [measure(mini, t, args.step_limit) for t in tests]
    kept = cmin_greedy(measured)
    rows = [SeedRow(s.test_case, s.actual, "minimized", s.fault) for s in kept]
    stats = {"input_seeds": len(measured), "seeds": len(kept)}
    write_ics(out, mini.program_id, mini.program.denominator, rows, stats)
    print(f"{len(measured)} seeds -> {len(kept)} seeds")
    return EXIT_OK


def cmd_trace(args) -> int:
    mini = load_program(args.program)
    if args.input == "-":
        text = sys.stdin.read()
    else:
        try:
            text = Path(args.input).read_text(encoding="utf-8")
        except OSError as exc:
            raise UsageError(f"cannot read input {args.input}: {exc.strerror or exc}") from exc
    tokens = text.split()
    out = execute(mini, TestCase(tuple(tokens)), args.step_limit)
    sys.stdout.write(render_annotated(mini.program, out.covered).text)
    status = out.status.value
    if out.fault is not None:
        where = f" at line {out.fault.line}" if out.fault.line is not None else ""
        status = f"{status}: {out.fault.kind.value}{where}"
    print(f"status: {status}")
    print(f"coverage: {format_percent(out.covered)}% ({len(out.covered)}/"
          f"{out.covered.denominator} lines)")
    print(f"steps: {out.steps}")
    if out.output:
        print("output:")
        sys.stdout.write(out.output if out.output.endswith("\n") else out.output + "\n")
    return EXIT_OK


def cmd_report(args) -> int:
    results = []
    for path in args.logs:
        try:
            events = CampaignLog.read(path)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read log {path}: {exc}") from exc
        arms = [e for e in events if e.get("event") == "arm_result"]
        if not arms:
            raise UsageError(f"{path} holds no arm_result record")
        for e in arms:
            results.append(ArmResult.from_json(e))
    sys.stdout.write(emit_report(results, args.format, args.places, args.truncate))
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "baseline": cmd_baseline,
    "minimize": cmd_minimize,
    "trace": cmd_trace,
    "report": cmd_report,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, DegenerateProgram, DegenerateInterval, OracleTooLarge) as exc:
        print(f"corpusgen: error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ProviderUnavailable, CassetteDrift) as exc:
        print(f"corpusgen: provider failure: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (ProgramMismatch, CorpusgenError, AssertionError) as exc:
        print(f"corpusgen: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
