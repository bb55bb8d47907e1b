"""Deterministic JSON and markdown rendering of run metrics.

The comparison table follows the usual before/after layout: one row per
application, MQ columns carry metric-query accuracy, LQ columns carry
log-query F1, with (B)efore and (A)fter side by side plus delta tables.
"""

from __future__ import annotations

import json

from .runner import EvalMetrics, RunComparison


def _fmt(value: float | None) -> str:
    return "n/a" if value is None else f"{value:.2f}"


def _apps(metrics: EvalMetrics) -> list[str]:
    return sorted({bucket.split("/")[0] for bucket in metrics.n_per_bucket})


def _bucket(metrics: EvalMetrics, app: str, qtype: str) -> float | None:
    return metrics.bucket_scores.get(f"{app}/{qtype}")


def _metrics_markdown(metrics: EvalMetrics) -> str:
    lines = [
        "| Application | MQ (accuracy) | LQ (F1) | n |",
        "|---|---|---|---|",
    ]
    for app in _apps(metrics):
        n = sum(
            count
            for bucket, count in metrics.n_per_bucket.items()
            if bucket.startswith(f"{app}/")
        )
        lines.append(
            f"| {app} | {_fmt(_bucket(metrics, app, 'METRIC'))} "
            f"| {_fmt(_bucket(metrics, app, 'LOG'))} | {n} |"
        )
    lines += [
        "",
        f"- tuples: {metrics.n_tuples}",
        f"- metric accuracy: {_fmt(metrics.metric_accuracy)}",
        f"- log P/R/F1: {_fmt(metrics.log_precision)} / {_fmt(metrics.log_recall)} / {_fmt(metrics.log_f1)}",
        f"- exact match rate: {_fmt(metrics.exact_match_rate)}",
        f"- executability rate: {_fmt(metrics.executability_rate)}",
        f"- perplexity: {_fmt(metrics.perplexity)}",
    ]
    return "\n".join(lines) + "\n"


def _comparison_markdown(comparison: RunComparison) -> str:
    before, after = comparison.before, comparison.after
    lines = [
        "| Application | MQ (B) | MQ (A) | LQ (B) | LQ (A) |",
        "|---|---|---|---|---|",
    ]
    for app in _apps(before):
        lines.append(
            f"| {app} "
            f"| {_fmt(_bucket(before, app, 'METRIC'))} | {_fmt(_bucket(after, app, 'METRIC'))} "
            f"| {_fmt(_bucket(before, app, 'LOG'))} | {_fmt(_bucket(after, app, 'LOG'))} |"
        )
    lines += [
        "",
        "| Bucket | B | A | Delta | Delta % |",
        "|---|---|---|---|---|",
    ]
    for bucket, d in comparison.deltas().items():
        rel = "n/a" if d["relative"] is None else f"{100 * d['relative']:+.0f}%"
        lines.append(
            f"| {bucket} | {_fmt(d['before'])} | {_fmt(d['after'])} "
            f"| {d['delta']:+.2f} | {rel} |"
        )
    lines += [
        "",
        f"- exact match rate: {_fmt(before.exact_match_rate)} -> {_fmt(after.exact_match_rate)}",
        f"- executability rate: {_fmt(before.executability_rate)} -> {_fmt(after.executability_rate)}",
        f"- perplexity: {_fmt(before.perplexity)} -> {_fmt(after.perplexity)}",
    ]
    return "\n".join(lines) + "\n"


def render_report(subject: EvalMetrics | RunComparison, format: str = "markdown") -> str:
    if format == "json":
        if isinstance(subject, RunComparison):
            payload = {
                "before": subject.before.to_json(),
                "after": subject.after.to_json(),
                "deltas": subject.deltas(),
            }
        else:
            payload = subject.to_json()
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"
    if format == "markdown":
        if isinstance(subject, RunComparison):
            return _comparison_markdown(subject)
        return _metrics_markdown(subject)
    raise ValueError(f"unknown report format {format!r}")
