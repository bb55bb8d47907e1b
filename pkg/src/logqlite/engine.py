"""Query execution over a LogStore, evaluated at a single instant.

Semantics notes (the oracle in naive.py mirrors these independently):

- Windows are closed on both ends: a log query covers [now-lookback, now],
  a range aggregation [now-range, now].
- Label matchers and =~/!~ label filters are fully anchored; line filters
  are case-sensitive substring / unanchored regex tests on the line.
- A missing label reads as "" for string comparisons, so `!=` and `!~`
  match streams lacking the label and `__error__=""` passes clean entries.
- Numeric label filters (>, >=, <, <=, and = / != against a number) drop
  entries whose label is missing or not a number.
- A regexp stage that fails to match sets `__error__="regexp"` and passes
  the entry through; extracted labels join the grouping key downstream.
- unwrap removes the unwrapped label from the sample's label set (it is the
  value source); unparsable or non-finite values skip the entry.
- Log results keep the newest `limit` rows (backward direction) and are
  returned ascending; cross-stream timestamp ties order by store sequence.
- topk/bottomk break value ties by canonical label-set text.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Iterator

from .logql.ast import (
    Duration,
    LabelFilter,
    LabelMatcher,
    LineFilter,
    LineFilterOp,
    LineFormatStage,
    LogQuery,
    MatchOp,
    MetricQuery,
    PipelineStage,
    QueryAst,
    RangeAgg,
    RegexpStage,
    UnwrapStage,
    VectorAgg,
)
from .logql.diagnostics import QueryValidationError
from .logql.parser import DEFAULT_INTERVAL, parse
from .logql.validate import validate
from .store import LogEntry, LogStore, Stream, labels_key
from .timefmt import rfc3339_from_ns

DEFAULT_LIMIT = 5000
DEFAULT_LOOKBACK = Duration(7, "d")


@dataclass
class EvalContext:
    now: int  # nanoseconds since epoch
    limit: int = DEFAULT_LIMIT
    lookback: Duration = DEFAULT_LOOKBACK
    direction: str = "backward"

    def __post_init__(self) -> None:
        if self.limit < 1:
            raise ValueError("limit must be >= 1")
        if self.direction != "backward":
            raise ValueError("only backward direction is supported")


@dataclass
class LogRow:
    ts: int
    labels: dict[str, str]
    line: str


@dataclass
class LogResult:
    rows: list[LogRow]
    truncated: bool = False


@dataclass
class Sample:
    labels: dict[str, str]
    value: float


@dataclass
class MetricResult:
    samples: list[Sample]
    evaluated_at: int = 0


QueryResult = LogResult | MetricResult


# ---------------------------------------------------------------------------
# Stream selection


def _fullmatch(pattern: str, value: str) -> bool:
    return re.fullmatch(pattern, value) is not None


def matcher_ok(labels: dict[str, str], m: LabelMatcher) -> bool:
    value = labels.get(m.name, "")
    if m.op is MatchOp.EQ:
        return value == m.value
    if m.op is MatchOp.NEQ:
        return value != m.value
    if m.op is MatchOp.RE:
        return _fullmatch(m.value, value)
    return not _fullmatch(m.value, value)


def select_streams(store: LogStore, matchers: Iterable[LabelMatcher]) -> list[Stream]:
    """Streams whose label sets satisfy every matcher.

    Equality matchers with a non-empty value go through the label index;
    everything else scans the surviving candidates.
    """
    matchers = list(matchers)
    if not matchers:
        raise ValueError("select_streams needs at least one matcher")
    candidates = set(range(len(store.streams)))
    rest: list[LabelMatcher] = []
    for m in matchers:
        if m.op is MatchOp.EQ and m.value != "":
            candidates &= set(store.index.get(m.name, {}).get(m.value, []))
        else:
            rest.append(m)
    return [
        store.streams[i]
        for i in sorted(candidates)
        if all(matcher_ok(store.streams[i].labels, m) for m in rest)
    ]


# ---------------------------------------------------------------------------
# Pipeline

_TEMPLATE_RE = re.compile(r"\{\{(\.[a-zA-Z_][a-zA-Z0-9_]*|__timestamp__)\}\}")


def render_line_template(template: str, labels: dict[str, str], ts: int) -> str:
    def repl(m: re.Match[str]) -> str:
        name = m.group(1)
        if name == "__timestamp__":
            return rfc3339_from_ns(ts)
        return labels.get(name[1:], "")

    return _TEMPLATE_RE.sub(repl, template)


def _label_filter_ok(stage: LabelFilter, labels: dict[str, str]) -> bool:
    if isinstance(stage.value, str):
        current = labels.get(stage.name, "")
        if stage.op == "=":
            return current == stage.value
        if stage.op == "!=":
            return current != stage.value
        if stage.op == "=~":
            return _fullmatch(stage.value, current)
        if stage.op == "!~":
            return not _fullmatch(stage.value, current)
        raise ValueError(f"comparator {stage.op} needs a numeric value")
    raw = labels.get(stage.name)
    try:
        current = float(raw) if raw is not None else math.nan
    except ValueError:
        current = math.nan
    target = float(stage.value)
    if stage.op == "=":
        return current == target
    if stage.op == "!=":
        return not math.isnan(current) and current != target
    if stage.op == ">":
        return current > target
    if stage.op == ">=":
        return current >= target
    if stage.op == "<":
        return current < target
    return current <= target  # "<="


@dataclass
class PipedEntry:
    ts: int
    seq: int
    labels: dict[str, str]
    line: str
    unwrap: str | None = None


def _apply_stages(
    entry: PipedEntry, stages: tuple[PipelineStage, ...]
) -> PipedEntry | None:
    """Run an entry through the pipeline; None means it was filtered out."""
    for stage in stages:
        if isinstance(stage, LineFilter):
            if stage.op is LineFilterOp.CONTAINS:
                ok = stage.pattern in entry.line
            elif stage.op is LineFilterOp.NOT_CONTAINS:
                ok = stage.pattern not in entry.line
            elif stage.op is LineFilterOp.MATCHES:
                ok = re.search(stage.pattern, entry.line) is not None
            else:
                ok = re.search(stage.pattern, entry.line) is None
            if not ok:
                return None
        elif isinstance(stage, LabelFilter):
            if not _label_filter_ok(stage, entry.labels):
                return None
        elif isinstance(stage, RegexpStage):
            m = re.search(stage.pattern, entry.line)
            if m is None:
                entry.labels["__error__"] = "regexp"
            else:
                for name, value in m.groupdict().items():
                    if value is not None:
                        entry.labels[name] = value
        elif isinstance(stage, LineFormatStage):
            entry.line = render_line_template(stage.template, entry.labels, entry.ts)
        elif isinstance(stage, UnwrapStage):
            entry.unwrap = stage.label
        else:  # pragma: no cover
            raise TypeError(f"not a pipeline stage: {stage!r}")
    return entry


def run_pipeline(
    entries: Iterable[LogEntry], pipeline: tuple[PipelineStage, ...]
) -> Iterator[LogEntry]:
    """Public pipeline runner over plain LogEntry values."""
    for e in entries:
        piped = _apply_stages(PipedEntry(e.ts, -1, dict(e.labels), e.line), pipeline)
        if piped is not None:
            yield LogEntry(piped.ts, piped.labels, piped.line)


# ---------------------------------------------------------------------------
# Log queries


def execute_log_query(store: LogStore, ast: LogQuery, ctx: EvalContext) -> LogResult:
    lo = ctx.now - ctx.lookback.ns
    hi = ctx.now
    collected: list[PipedEntry] = []
    for stream in select_streams(store, ast.selector):
        for e in stream.entries_between(lo, hi):
            piped = _apply_stages(
                PipedEntry(e.ts, e.seq, dict(stream.labels), e.line), ast.pipeline
            )
            if piped is not None:
                collected.append(piped)
    collected.sort(key=lambda p: (p.ts, p.seq))
    truncated = len(collected) > ctx.limit
    kept = collected[-ctx.limit :] if truncated else collected
    return LogResult([LogRow(p.ts, p.labels, p.line) for p in kept], truncated)


# ---------------------------------------------------------------------------
# Metric queries


def _range_agg_samples(store: LogStore, node: RangeAgg, ctx: EvalContext) -> list[Sample]:
    if node.range is None:
        raise QueryValidationError(validate(node))
    lo = ctx.now - node.range.ns
    hi = ctx.now
    counts: dict[str, int] = {}
    byte_sums: dict[str, int] = {}
    values: dict[str, list[float]] = {}
    group_labels: dict[str, dict[str, str]] = {}

    for stream in select_streams(store, node.inner.selector):
        for e in stream.entries_between(lo, hi):
            piped = _apply_stages(
                PipedEntry(e.ts, e.seq, dict(stream.labels), e.line), node.inner.pipeline
            )
            if piped is None:
                continue
            labels = piped.labels
            unwrapped: float | None = None
            if piped.unwrap is not None:
                raw = labels.pop(piped.unwrap, None)
                if raw is not None:
                    try:
                        candidate = float(raw)
                    except ValueError:
                        candidate = math.nan
                    if math.isfinite(candidate):
                        unwrapped = candidate
            key = labels_key(labels)
            if key not in group_labels:
                group_labels[key] = labels
                counts[key] = 0
                byte_sums[key] = 0
                values[key] = []
            counts[key] += 1
            byte_sums[key] += len(piped.line.encode("utf-8"))
            if unwrapped is not None:
                values[key].append(unwrapped)

    samples: list[Sample] = []
    for key, labels in group_labels.items():
        if node.func == "count_over_time":
            samples.append(Sample(labels, float(counts[key])))
        elif node.func == "rate":
            samples.append(Sample(labels, counts[key] / node.range.seconds))
        elif node.func == "bytes_over_time":
            samples.append(Sample(labels, float(byte_sums[key])))
        else:
            vals = values[key]
            if not vals:
                continue  # every entry in the group lacked a usable value
            if node.func == "sum_over_time":
                samples.append(Sample(labels, math.fsum(vals)))
            elif node.func == "avg_over_time":
                samples.append(Sample(labels, math.fsum(vals) / len(vals)))
            elif node.func == "min_over_time":
                samples.append(Sample(labels, min(vals)))
            else:  # max_over_time
                samples.append(Sample(labels, max(vals)))
    return samples


def _vector_agg_samples(node: VectorAgg, inner: list[Sample]) -> list[Sample]:
    groups: dict[str, tuple[dict[str, str], list[Sample]]] = {}
    for sample in inner:
        if node.grouping is None:
            key_labels: dict[str, str] = {}
        elif node.grouping.mode == "by":
            key_labels = {
                name: sample.labels[name]
                for name in node.grouping.labels
                if name in sample.labels
            }
        else:
            key_labels = {
                name: value
                for name, value in sample.labels.items()
                if name not in node.grouping.labels
            }
        key = labels_key(key_labels)
        groups.setdefault(key, (key_labels, []))[1].append(sample)

    out: list[Sample] = []
    for key_labels, members in groups.values():
        if node.func in ("topk", "bottomk"):
            if node.func == "topk":
                ranked = sorted(members, key=lambda s: (-s.value, labels_key(s.labels)))
            else:
                ranked = sorted(members, key=lambda s: (s.value, labels_key(s.labels)))
            out.extend(ranked[: node.k])
            continue
        vals = [s.value for s in members]
        if node.func == "sum":
            out.append(Sample(key_labels, math.fsum(vals)))
        elif node.func == "avg":
            out.append(Sample(key_labels, math.fsum(vals) / len(vals)))
        elif node.func == "min":
            out.append(Sample(key_labels, min(vals)))
        elif node.func == "max":
            out.append(Sample(key_labels, max(vals)))
        else:  # count
            out.append(Sample(key_labels, float(len(vals))))
    return out


def _eval_metric(store: LogStore, node: MetricQuery, ctx: EvalContext) -> list[Sample]:
    if isinstance(node, RangeAgg):
        return _range_agg_samples(store, node, ctx)
    return _vector_agg_samples(node, _eval_metric(store, node.inner, ctx))


def execute_metric_query(
    store: LogStore, ast: MetricQuery, ctx: EvalContext
) -> MetricResult:
    samples = _eval_metric(store, ast, ctx)
    samples.sort(key=lambda s: labels_key(s.labels))
    return MetricResult(samples, evaluated_at=ctx.now)


# ---------------------------------------------------------------------------
# Facade


def execute_ast(store: LogStore, ast: QueryAst, ctx: EvalContext) -> QueryResult:
    diagnostics = validate(ast)
    if diagnostics:
        raise QueryValidationError(diagnostics)
    if isinstance(ast, LogQuery):
        return execute_log_query(store, ast, ctx)
    return execute_metric_query(store, ast, ctx)


def execute(
    store: LogStore,
    text: str,
    vars: dict[str, str] | None,
    ctx: EvalContext,
    default_interval: str = DEFAULT_INTERVAL,
) -> QueryResult:
    """parse -> validate -> run; raises QueryError subclasses on bad queries."""
    ast = parse(text, vars, default_interval)
    return execute_ast(store, ast, ctx)


# ---------------------------------------------------------------------------
# Result serialization (dataset files, run records, HTTP responses)


def result_to_json(result: QueryResult) -> dict:
    if isinstance(result, LogResult):
        return {
            "type": "log",
            "truncated": result.truncated,
            "rows": [
                {"ts": r.ts, "labels": r.labels, "line": r.line} for r in result.rows
            ],
        }
    return {
        "type": "metric",
        "evaluated_at": result.evaluated_at,
        "samples": [{"labels": s.labels, "value": s.value} for s in result.samples],
    }


def result_from_json(data: dict) -> QueryResult:
    kind = data.get("type")
    if kind == "log":
        rows = [
            LogRow(int(r["ts"]), dict(r.get("labels", {})), r["line"])
            for r in data.get("rows", [])
        ]
        return LogResult(rows, bool(data.get("truncated", False)))
    if kind == "metric":
        samples = [
            Sample(dict(s.get("labels", {})), float(s["value"]))
            for s in data.get("samples", [])
        ]
        return MetricResult(samples, int(data.get("evaluated_at", 0)))
    raise ValueError(f"unknown result type {kind!r}")
