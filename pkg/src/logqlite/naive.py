"""Brute-force reference executor.

Same observable semantics as engine.py, written independently from the
definitions: no label index, no per-stream bisect, no shared pipeline code.
Every entry in the store is visited for every query.  Test oracle only —
keep this file boring and obviously correct rather than fast.
"""

from __future__ import annotations

import math
import re

from .engine import EvalContext, LogResult, LogRow, MetricResult, QueryResult, Sample
from .logql.ast import (
    LabelFilter,
    LineFilter,
    LineFormatStage,
    LogQuery,
    MatchOp,
    MetricQuery,
    QueryAst,
    RangeAgg,
    RegexpStage,
    UnwrapStage,
    VectorAgg,
)
from .store import LogStore, labels_key
from .timefmt import rfc3339_from_ns


def _matcher_holds(op: MatchOp, want: str, have: str) -> bool:
    if op is MatchOp.EQ:
        return have == want
    if op is MatchOp.NEQ:
        return have != want
    matched = re.fullmatch(want, have) is not None
    return matched if op is MatchOp.RE else not matched


def _selected(labels: dict[str, str], selector) -> bool:
    return all(_matcher_holds(m.op, m.value, labels.get(m.name, "")) for m in selector)


_PLACEHOLDER = re.compile(r"\{\{(\.([a-zA-Z_][a-zA-Z0-9_]*)|__timestamp__)\}\}")


def _format(template: str, labels: dict[str, str], ts: int) -> str:
    # Single left-to-right pass; missing labels render empty, and substituted
    # values are never re-scanned.
    parts: list[str] = []
    i = 0
    while i < len(template):
        j = template.find("{{", i)
        if j == -1:
            parts.append(template[i:])
            break
        m = _PLACEHOLDER.match(template, j)
        if m is None:
            parts.append(template[i : j + 1])
            i = j + 1
            continue
        parts.append(template[i:j])
        if m.group(1) == "__timestamp__":
            parts.append(rfc3339_from_ns(ts))
        else:
            parts.append(labels.get(m.group(2), ""))
        i = m.end()
    return "".join(parts)


def _pipe_one(
    ts: int, labels: dict[str, str], line: str, pipeline
) -> tuple[dict[str, str], str, str | None] | None:
    labels = dict(labels)
    unwrap: str | None = None
    for stage in pipeline:
        if isinstance(stage, LineFilter):
            op = stage.op.value
            if op == "|=" and stage.pattern not in line:
                return None
            if op == "!=" and stage.pattern in line:
                return None
            if op == "|~" and not re.search(stage.pattern, line):
                return None
            if op == "!~" and re.search(stage.pattern, line):
                return None
        elif isinstance(stage, LabelFilter):
            if not _label_holds(stage, labels):
                return None
        elif isinstance(stage, RegexpStage):
            m = re.search(stage.pattern, line)
            if m:
                for name, value in m.groupdict().items():
                    if value is not None:
                        labels[name] = value
            else:
                labels["__error__"] = "regexp"
        elif isinstance(stage, LineFormatStage):
            line = _format(stage.template, labels, ts)
        elif isinstance(stage, UnwrapStage):
            unwrap = stage.label
    return labels, line, unwrap


def _label_holds(stage: LabelFilter, labels: dict[str, str]) -> bool:
    if isinstance(stage.value, str):
        have = labels.get(stage.name, "")
        if stage.op == "=":
            return have == stage.value
        if stage.op == "!=":
            return have != stage.value
        found = re.fullmatch(stage.value, have) is not None
        return found if stage.op == "=~" else not found
    raw = labels.get(stage.name)
    if raw is None:
        return False
    try:
        have = float(raw)
    except ValueError:
        return False
    want = float(stage.value)
    return {
        "=": have == want,
        "!=": have != want,
        ">": have > want,
        ">=": have >= want,
        "<": have < want,
        "<=": have <= want,
    }[stage.op]


def _window_rows(store: LogStore, query: LogQuery, lo: int, hi: int):
    rows = []
    for stream in store.streams:
        if not _selected(stream.labels, query.selector):
            continue
        for entry in stream.entries:
            if entry.ts < lo or entry.ts > hi:
                continue
            piped = _pipe_one(entry.ts, stream.labels, entry.line, query.pipeline)
            if piped is not None:
                labels, line, unwrap = piped
                rows.append((entry.ts, entry.seq, labels, line, unwrap))
    rows.sort(key=lambda r: (r[0], r[1]))
    return rows


def _naive_metric(store: LogStore, node: MetricQuery, ctx: EvalContext) -> list[Sample]:
    if isinstance(node, RangeAgg):
        assert node.range is not None
        rows = _window_rows(store, node.inner, ctx.now - node.range.ns, ctx.now)
        grouped: dict[str, list[tuple[dict[str, str], str, float | None]]] = {}
        for _ts, _seq, labels, line, unwrap in rows:
            value = None
            if unwrap is not None:
                raw = labels.pop(unwrap, None)
                if raw is not None:
                    try:
                        value = float(raw)
                    except ValueError:
                        value = None
                    if value is not None and not math.isfinite(value):
                        value = None
            grouped.setdefault(labels_key(labels), []).append((labels, line, value))
        samples = []
        for members in grouped.values():
            labels = members[0][0]
            if node.func == "count_over_time":
                samples.append(Sample(labels, float(len(members))))
            elif node.func == "rate":
                samples.append(Sample(labels, len(members) / (node.range.ns / 1e9)))
            elif node.func == "bytes_over_time":
                samples.append(
                    Sample(labels, float(sum(len(line.encode("utf-8")) for _, line, _ in members)))
                )
            else:
                vals = [v for _, _, v in members if v is not None]
                if not vals:
                    continue
                if node.func == "sum_over_time":
                    samples.append(Sample(labels, math.fsum(vals)))
                elif node.func == "avg_over_time":
                    samples.append(Sample(labels, math.fsum(vals) / len(vals)))
                elif node.func == "min_over_time":
                    samples.append(Sample(labels, min(vals)))
                elif node.func == "max_over_time":
                    samples.append(Sample(labels, max(vals)))
        return samples

    assert isinstance(node, VectorAgg)
    inner = _naive_metric(store, node.inner, ctx)
    buckets: dict[str, list[Sample]] = {}
    bucket_labels: dict[str, dict[str, str]] = {}
    for sample in inner:
        if node.grouping is None:
            keep: dict[str, str] = {}
        elif node.grouping.mode == "by":
            keep = {n: sample.labels[n] for n in node.grouping.labels if n in sample.labels}
        else:
            keep = {n: v for n, v in sample.labels.items() if n not in node.grouping.labels}
        key = labels_key(keep)
        buckets.setdefault(key, []).append(sample)
        bucket_labels[key] = keep
    out: list[Sample] = []
    for key, members in buckets.items():
        if node.func == "topk":
            members = sorted(members, key=lambda s: (-s.value, labels_key(s.labels)))
            out.extend(members[: node.k])
        elif node.func == "bottomk":
            members = sorted(members, key=lambda s: (s.value, labels_key(s.labels)))
            out.extend(members[: node.k])
        else:
            vals = [s.value for s in members]
            agg = {
                "sum": lambda: math.fsum(vals),
                "avg": lambda: math.fsum(vals) / len(vals),
                "min": lambda: min(vals),
                "max": lambda: max(vals),
                "count": lambda: float(len(vals)),
            }[node.func]()
            out.append(Sample(bucket_labels[key], agg))
    return out


def naive_execute(store: LogStore, ast: QueryAst, ctx: EvalContext) -> QueryResult:
    if isinstance(ast, LogQuery):
        rows = _window_rows(store, ast, ctx.now - ctx.lookback.ns, ctx.now)
        truncated = len(rows) > ctx.limit
        if truncated:
            rows = rows[len(rows) - ctx.limit :]
        return LogResult(
            [LogRow(ts, labels, line) for ts, _seq, labels, line, _u in rows], truncated
        )
    samples = _naive_metric(store, ast, ctx)
    samples.sort(key=lambda s: labels_key(s.labels))
    return MetricResult(samples, evaluated_at=ctx.now)
