"""Command-line entry points.

Exit codes: 0 success, 1 operational error (missing files, I/O, bad config),
2 user error (bad arguments, queries that fail to parse or validate).
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, load_corpus, load_stores, parse_duration
from .engine import (
    EvalContext,
    LogResult,
    execute,
    result_to_json,
)
from .gateway import (
    GatewayError,
    PromptContext,
    canned_generator,
    echo_generator,
    endpoint_generator,
    load_endpoints,
)
from .harness import (
    DatasetError,
    EvalMetrics,
    SplitSpec,
    compare_runs,
    evaluate_run,
    load_dataset,
    render_report,
    split_dataset,
)
from .ingest import CorpusManifest, IngestError, ingest
from .logql import QueryError
from .store import LogStore, labels_key
from .stubserver import StubBehavior, serve_forever
from .timefmt import ns_from_rfc3339, rfc3339_from_ns


class UserError(Exception):
    pass


def _parse_vars(pairs: list[str]) -> dict[str, str]:
    vars: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise UserError(f"--var expects name=value, got {pair!r}")
        name, _, value = pair.partition("=")
        vars[name] = value
    return vars


# ---------------------------------------------------------------------------
# Subcommands


def cmd_ingest(args: argparse.Namespace) -> int:
    manifest = CorpusManifest.load(args.manifest)
    store, report = ingest(manifest)
    store.save(args.out)
    print(json.dumps({"store": str(args.out), **report.as_dict()}, indent=2))
    return 0


def cmd_query(args: argparse.Namespace) -> int:
    store = load_corpus(Path(args.store))
    now = ns_from_rfc3339(args.now) if args.now else store.anchor_ns
    ctx = EvalContext(
        now=now,
        limit=args.limit,
        lookback=parse_duration(args.lookback),
    )
    result = execute(store, args.query, _parse_vars(args.var), ctx)
    if args.format == "json":
        print(json.dumps({"now": rfc3339_from_ns(now), "result": result_to_json(result)}, indent=2))
    else:
        print(f"now: {rfc3339_from_ns(now)}")
        if isinstance(result, LogResult):
            for row in result.rows:
                print(f"{rfc3339_from_ns(row.ts)}  {labels_key(row.labels)}  {row.line}")
            suffix = " (truncated)" if result.truncated else ""
            print(f"-- {len(result.rows)} rows{suffix}")
        else:
            for sample in result.samples:
                print(f"{labels_key(sample.labels)}  {sample.value}")
            print(f"-- {len(result.samples)} samples")
    return 0


def _make_generator(spec: str, config: RunConfig, stores):
    if spec == "echo":
        return echo_generator
    if spec.startswith("canned:"):
        mapping_path = Path(spec.split(":", 1)[1])
        try:
            mapping = json.loads(mapping_path.read_text(encoding="utf-8"))
        except OSError as exc:
            raise UserError(f"cannot read canned mapping: {exc}") from exc
        return canned_generator(dict(mapping))
    if spec.startswith("endpoint:"):
        if config.endpoints is None:
            raise UserError("config has no endpoints file; endpoint generator unavailable")
        name = spec.split(":", 1)[1]
        endpoints = load_endpoints(config.endpoints)
        if name not in endpoints:
            raise UserError(f"unknown endpoint {name!r}; configured: {sorted(endpoints)}")
        return endpoint_generator(endpoints[name], lambda app: prompt_context(stores[app]))
    raise UserError(f"unknown generator {spec!r}; use echo, canned:<file>, endpoint:<name>")


def prompt_context(store: LogStore, max_lines: int = 20) -> PromptContext:
    label_values: dict[str, list[str]] = {
        name: sorted(values) for name, values in store.index.items()
    }
    newest: list = []
    for stream in store.streams:
        newest.extend(stream.entries)
    newest.sort(key=lambda e: (e.ts, e.seq))
    samples = [e.line for e in newest[-max_lines:]]
    return PromptContext(store.application, label_values, samples)


def cmd_eval(args: argparse.Namespace) -> int:
    config = RunConfig.load(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if config.dataset is None:
        raise UserError("config has no dataset; nothing to evaluate")
    stores = load_stores(config)
    tuples = load_dataset(config.dataset)
    if args.split == "test":
        tuples = split_dataset(tuples, SplitSpec(seed=config.seed)).test
    generator = _make_generator(args.generator, config, stores)

    # With no configured instant, evaluate_run falls back to each corpus anchor.
    shared_ctx = None
    if config.now is not None:
        shared_ctx = EvalContext(now=config.now, limit=config.limit, lookback=config.lookback)
    run = evaluate_run(stores, tuples, generator, shared_ctx, parallelism=config.parallelism)

    base_name = f"{time.strftime('%Y%m%dT%H%M%S')}-{config.config_hash()}"
    run_dir = config.output_dir / base_name
    suffix = 1
    while run_dir.exists():  # same second, same config: do not overwrite
        suffix += 1
        run_dir = config.output_dir / f"{base_name}-{suffix}"
    run_dir.mkdir(parents=True)
    records_path = run_dir / "records.jsonl"
    with records_path.open("w", encoding="utf-8") as fh:
        for record in run.records:
            fh.write(
                json.dumps(record.to_json(include_latency=config.record_latency), sort_keys=True)
                + "\n"
            )
    (run_dir / "metrics.json").write_text(
        json.dumps(run.metrics.to_json(), sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    (run_dir / "report.md").write_text(render_report(run.metrics, "markdown"), encoding="utf-8")
    print(render_report(run.metrics, "markdown"))
    print(str(run_dir))
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    before = EvalMetrics.from_json(json.loads(Path(args.before).read_text(encoding="utf-8")))
    after = EvalMetrics.from_json(json.loads(Path(args.after).read_text(encoding="utf-8")))
    print(render_report(compare_runs(before, after), args.format), end="")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .service import create_app

    config = RunConfig.load(args.config)
    app = create_app(config)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_stub_llm(args: argparse.Namespace) -> int:
    behavior = StubBehavior.load(args.behavior) if args.behavior else StubBehavior()
    serve_forever(behavior, args.port)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="logqlite",
        description="LogQL engine over an embedded log store, with an NL-to-LogQL eval harness.",
    )
    parser.add_argument("--version", action="version", version=f"logqlite {__version__}")
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help="override the config seed (commands without randomness ignore it)",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="build a store file from a corpus manifest")
    p.add_argument("manifest")
    p.add_argument("out")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("query", help="run one query against a store or manifest")
    p.add_argument("store", help="path to a .store file or corpus manifest")
    p.add_argument("query")
    p.add_argument("--now", help="RFC 3339 evaluation instant (default: corpus anchor)")
    p.add_argument("--limit", type=int, default=5000)
    p.add_argument("--lookback", default="7d", help="log-query window (default 7d)")
    p.add_argument("--var", action="append", default=[], metavar="NAME=VALUE")
    p.add_argument("--format", choices=("json", "table"), default="json")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", help="run the NL-to-LogQL benchmark")
    p.add_argument("config")
    p.add_argument(
        "--generator",
        default="echo",
        help="echo | canned:<mapping.json> | endpoint:<name>",
    )
    p.add_argument("--split", choices=("test", "all"), default="all")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="before/after report from two metrics.json files")
    p.add_argument("before")
    p.add_argument("after")
    p.add_argument("--format", choices=("markdown", "json"), default="markdown")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("serve", help="HTTP API (and playground UI, when built)")
    p.add_argument("config")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("stub-llm", help="offline chat-completions stub endpoint")
    p.add_argument("--port", type=int, default=8089)
    p.add_argument("--behavior", help="JSON behavior file (replies, fallback, ...)")
    p.set_defaults(func=cmd_stub_llm)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except QueryError as exc:
        for diagnostic in exc.diagnostics:
            print(f"query error: {diagnostic}", file=sys.stderr)
        return 2
    except UserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, DatasetError, GatewayError, IngestError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
