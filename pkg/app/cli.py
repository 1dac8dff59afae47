"""Command-line front end: ``python -m app <verb>``."""

from __future__ import annotations

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from pydantic import BaseModel

from app.config import settings
from app.exceptions import ConfigError, GubqcError
from app.schemas.bounds import AchievedRateResponse, ComparisonRowResponse, GammaBoundsResponse
from app.schemas.reports import NegativeControlReport
from app.schemas.run_config import RunConfig, SeedsConfig, TransportConfig
from app.schemas.subgroup import SubgroupSpec
from app.services.bounds import (
    SETTING_NAMES,
    achieved_rate,
    gamma_bounds,
    make_setting,
    protocol_comparison,
)
from app.services.protocol.session import serve_bob
from app.services.protocol.transcript import SessionTranscript, load_transcript, save_transcript
from app.services.runs import (
    RunOutcome,
    describe_config_keys,
    execute_run,
    load_run_config,
    parse_run_config,
    transcript_record,
)
from app.services.suites import DEFAULT_KEYS, DEFAULT_SAMPLES, DEFAULT_TRIALS, SUITES, run_suite

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_ERROR = 2


def _u64(text: str) -> int:
    try:
        value = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed {value} outside the u64 range")
    return value


def _config_epilog() -> str:
    lines = ["run config keys (JSON):"]
    lines += [f"  {key:<22} {text}" for key, text in describe_config_keys()]
    return "\n".join(lines)


def _table(headers: Sequence[str], rows: Sequence[Sequence[object]]) -> str:
    cells = [[str(h) for h in headers]] + [["" if c is None else str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells)


def _emit(payload: dict | list, fmt: str, text: str) -> None:
    if fmt == "machine":
        print(json.dumps(payload, sort_keys=True))
    else:
        print(text)


def _with_overrides(config: RunConfig, args) -> RunConfig:
    seeds = SeedsConfig(
        alice=config.seeds.alice if args.seed_alice is None else args.seed_alice,
        bob=config.seeds.bob if args.seed_bob is None else args.seed_bob,
    )
    return config.model_copy(update={"seeds": seeds})


def _transcript_path(config: RunConfig, args) -> Path:
    if getattr(args, "out", None):
        return Path(args.out)
    if config.output.transcript:
        return Path(config.output.transcript)
    return Path(settings.TRANSCRIPT_DIR) / f"session-{config.seeds.alice}-{config.seeds.bob}.json"


async def _run_and_save(config: RunConfig, args) -> tuple[RunOutcome, Path]:
    outcome = await execute_run(config)
    path = await save_transcript(transcript_record(config, outcome), _transcript_path(config, args))
    return outcome, path


def _report_run(outcome: RunOutcome, path: Path, fmt: str) -> None:
    payload = {
        "output": outcome.output_text,
        "output_mode": outcome.computation.output_mode.value,
        "fidelity": outcome.fidelity,
        "transcript": str(path),
        "digest": outcome.transcript.digest(),
    }
    lines = [f"output: {outcome.output_text}"]
    if outcome.fidelity is not None:
        lines.append(f"fidelity: {outcome.fidelity:.10f}")
    lines.append(f"transcript: {path} (sha256 {payload['digest']})")
    _emit(payload, fmt, "\n".join(lines))


def command_run(args) -> int:
    config = _with_overrides(load_run_config(args.config), args)
    outcome, path = asyncio.run(_run_and_save(config, args))
    _report_run(outcome, path, args.format)
    return EXIT_OK


def command_connect(args) -> int:
    config = _with_overrides(load_run_config(args.config), args)
    transport = TransportConfig(
        kind="socket",
        host=args.host or config.transport.host,
        port=args.port or config.transport.port,
    )
    config = config.model_copy(update={"transport": transport})
    outcome, path = asyncio.run(_run_and_save(config, args))
    _report_run(outcome, path, args.format)
    return EXIT_OK


def command_serve(args) -> int:
    host = args.host or settings.HOST
    port = args.port or settings.PORT
    concurrent = args.concurrent or settings.SERVER_CONCURRENT
    seed = 0 if args.seed_bob is None else args.seed_bob
    asyncio.run(serve_bob(host, port, seed, concurrent, args.sessions))
    return EXIT_OK


def _default_verify_config() -> RunConfig:
    return RunConfig(n=1, m=1, subgroup=SubgroupSpec(kind="discrete", block_size=1, order=8))


def command_verify(args) -> int:
    if args.config:
        config = load_run_config(args.config)
    elif args.suite in ("teleport", "controls"):
        config = _default_verify_config()
    else:
        raise ConfigError(f"the {args.suite} suite needs a run config", key="--config")
    config = _with_overrides(config, args)
    report: BaseModel = run_suite(config, args.suite, keys=args.keys, samples=args.samples, trials=args.trials)
    payload = report.model_dump()
    passed = bool(payload["passed"])

    out = args.out or config.output.report
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(report.model_dump_json(indent=2))

    lines = [f"suite: {args.suite}", f"verdict: {'PASS' if passed else 'FAIL'}"]
    if isinstance(report, NegativeControlReport):
        for check in report.checks:
            mark = "ok" if check.failed_as_expected else "MISSED"
            lines.append(f"  [{mark}] {check.name}: {check.detail}")
    else:
        lines += [f"{key}: {value}" for key, value in payload.items() if key != "passed"]
    _emit({"suite": args.suite, **payload}, args.format, "\n".join(lines))
    return EXIT_OK if passed else EXIT_CHECK_FAILED


def command_bounds(args) -> int:
    payload: dict[str, list] = {}
    text: list[str] = []

    if args.setting:
        setting = make_setting(args.setting, k=args.k, n=args.n, f=args.f, m=args.m)
        rows = [GammaBoundsResponse.from_bounds(gamma_bounds(setting, N)) for N in args.N]
        payload["bounds"] = [r.model_dump() for r in rows]
        headers = ["setting", "N", "lower", "upper"]
        table = [[r.setting, r.N, r.lower, r.upper] for r in rows]
        if any(r.coarse_upper for r in rows):
            headers.append("coarse upper")
            for line, r in zip(table, rows):
                line.append(r.coarse_upper)
        if args.manifold:
            headers.append("manifold dim")
            for line, r in zip(table, rows):
                line.append(r.manifold_dimension)
        text.append(_table(headers, table))

    if args.compare:
        comparison = []
        for N in args.N:
            rows = [ComparisonRowResponse.from_row(r) for r in protocol_comparison(N, args.n or N, args.k or 1)]
            comparison += [{"N": N, **r.model_dump()} for r in rows]
            text.append(f"\nN = {N}")
            text.append(
                _table(
                    ["protocol", "gates", "expression", "gap to 2N", "note"],
                    [[r.protocol, r.gates, r.expression, r.gap, r.note] for r in rows],
                )
            )
        payload["comparison"] = comparison

    if args.rate:
        if args.n is None or args.m is None:
            raise ConfigError("the achieved rate needs --n and --m", key="--n" if args.n is None else "--m")
        spec = SubgroupSpec(kind="continuous", block_size=args.k or 1)
        rate = AchievedRateResponse.from_rate(
            achieved_rate(spec, args.n, args.m, args.count_return_register)
        )
        payload["rate"] = [rate.model_dump()]
        text.append(
            _table(["hidden gates", "N", "rate"], [[rate.hidden_gates, rate.N, f"{rate.rate} = {rate.rate_value:.4f}"]])
        )

    if not payload:
        raise ConfigError("nothing to compute: pass --setting, --compare or --rate", key="--setting")
    _emit(payload, args.format, "\n".join(text).strip("\n"))
    return EXIT_OK


def command_replay(args) -> int:
    async def replay():
        record = await load_transcript(args.transcript)
        saved = SessionTranscript.from_record(record)
        saved.check()
        if record.config is None:
            raise ConfigError("transcript carries no run config to replay", key="config")
        config = parse_run_config(record.config)
        config = config.model_copy(
            update={
                "seeds": SeedsConfig(alice=record.alice_seed, bob=record.bob_seed),
                "transport": TransportConfig(),
            }
        )
        outcome = await execute_run(config)
        return record, saved, outcome

    record, saved, outcome = asyncio.run(replay())
    identical = outcome.transcript.frames == saved.frames
    payload = {
        "identical": identical,
        "recorded_digest": saved.digest(),
        "replayed_digest": outcome.transcript.digest(),
        "output": outcome.output_text,
    }
    lines = [
        f"replay: {'identical' if identical else 'DIFFERS'}",
        f"recorded sha256 {payload['recorded_digest']}",
        f"replayed sha256 {payload['replayed_digest']}",
    ]
    transport = (record.config or {}).get("transport") or {}
    if not identical and transport.get("kind") == "socket":
        lines.append(
            f"hint: the session ran against a socket Bob; replay assumes it served with --seed-bob {record.bob_seed}"
        )
    _emit(payload, args.format, "\n".join(lines))
    return EXIT_OK if identical else EXIT_CHECK_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="python -m app",
        description="Simulate and verify blind delegated computation over hidden diagonal layers.",
        epilog=_config_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--format", choices=("text", "machine"), default="text", help="Output format.")
    subparsers = parser.add_subparsers(dest="command", required=True)

    def seeds(p):
        p.add_argument("--seed-alice", type=_u64, default=None, help="Override the config's Alice seed.")
        p.add_argument("--seed-bob", type=_u64, default=None, help="Override the config's Bob seed.")

    def fmt(p):
        p.add_argument("--format", choices=("text", "machine"), default=argparse.SUPPRESS)

    run = subparsers.add_parser("run", help="Run one session and write its transcript.")
    run.add_argument("--config", required=True, help="Run config (JSON), relative to GUBQC_CONFIG_DIR.")
    run.add_argument("--out", help="Transcript path.")
    seeds(run)
    fmt(run)
    run.set_defaults(handler=command_run)

    verify = subparsers.add_parser("verify", help="Run a verification suite.")
    verify.add_argument("--config", help="Run config (JSON).")
    verify.add_argument("--suite", required=True, choices=SUITES)
    verify.add_argument("--keys", type=int, default=DEFAULT_KEYS, help="Secret keys per correctness check.")
    verify.add_argument("--samples", type=int, default=DEFAULT_SAMPLES, help="Samples for sampled blindness.")
    verify.add_argument("--trials", type=int, default=DEFAULT_TRIALS, help="Random inputs for the teleport suite.")
    verify.add_argument("--out", help="Report path.")
    seeds(verify)
    fmt(verify)
    verify.set_defaults(handler=command_verify)

    bounds = subparsers.add_parser("bounds", help="Tabulate Γ(N) bounds and protocol rates.")
    bounds.add_argument("--setting", choices=SETTING_NAMES)
    bounds.add_argument("--N", type=int, nargs="+", required=True, help="Transmitted qubit counts.")
    bounds.add_argument("--k", type=int)
    bounds.add_argument("--n", type=int)
    bounds.add_argument("--f", type=int, help="Gate budget f(N) for the commuting setting.")
    bounds.add_argument("--m", type=int)
    bounds.add_argument("--compare", action="store_true", help="Add the protocol comparison table.")
    bounds.add_argument("--rate", action="store_true", help="Add the achieved rate for --k/--n/--m.")
    bounds.add_argument("--count-return-register", action="store_true")
    bounds.add_argument(
        "--manifold", action="store_true", help="Add the preparable-state manifold dimension (separable settings)."
    )
    fmt(bounds)
    bounds.set_defaults(handler=command_bounds)

    serve = subparsers.add_parser("serve", help="Run Bob as a socket server.")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--sessions", type=int, default=None, help="Exit after this many sessions.")
    serve.add_argument("--concurrent", action="store_true", help="One worker thread per connection.")
    serve.add_argument("--seed-bob", type=_u64, default=None)
    serve.set_defaults(handler=command_serve)

    connect = subparsers.add_parser("connect", help="Run Alice against a Bob server.")
    connect.add_argument("--config", required=True)
    connect.add_argument("--host")
    connect.add_argument("--port", type=int)
    connect.add_argument("--out", help="Transcript path.")
    seeds(connect)
    fmt(connect)
    connect.set_defaults(handler=command_connect)

    replay = subparsers.add_parser("replay", help="Re-run a saved transcript's config and seeds.")
    replay.add_argument("transcript")
    fmt(replay)
    replay.set_defaults(handler=command_replay)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=settings.LOG_LEVEL.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.handler(args)
    except GubqcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
