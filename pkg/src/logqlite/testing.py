"""Seeded random stores and queries for property tests.

Everything here is driven by a caller-supplied random.Random so failures
reproduce from a seed.  Generated queries always pass validate(); generated
stores use a small label/line vocabulary chosen so filters, extractions, and
unwraps all have a realistic hit rate.
"""

from __future__ import annotations

import random

from .logql.ast import (
    Duration,
    Grouping,
    LabelFilter,
    LabelMatcher,
    LineFilter,
    LineFilterOp,
    LineFormatStage,
    LogQuery,
    MatchOp,
    PipelineStage,
    QueryAst,
    RangeAgg,
    RegexpStage,
    UnwrapStage,
    VectorAgg,
)
from .store import LogEntry, LogStore
from .timefmt import NS_PER_SECOND

ANCHOR_NS = 1_735_787_045_000_000_000  # 2025-01-02T03:04:05Z

_APPS = ["alpha", "beta"]
_HOSTS = ["h1", "h2", "h3"]
_COMPONENTS = ["auth", "net", "disk"]
_WORDS = ["error", "503", "token", "session", "opened", "closed", "retry", "ok"]
_RANGES = [
    Duration(1, "m"),
    Duration(5, "m"),
    Duration(1, "h"),
    Duration(12, "h"),
    Duration(1, "d"),
    Duration(3, "d"),
    Duration(7, "d"),
]


def random_store(rng: random.Random, max_entries: int = 300) -> LogStore:
    n = rng.randint(1, max_entries)
    entries = []
    for _ in range(n):
        labels = {"app": rng.choice(_APPS), "host": rng.choice(_HOSTS)}
        if rng.random() < 0.7:
            labels["comp"] = rng.choice(_COMPONENTS)
        words = rng.choices(_WORDS, k=rng.randint(1, 5))
        if rng.random() < 0.5:
            words.append(f"val={rng.randint(0, 500)}")
        line = " ".join(words)
        # Spread over ~10 days behind the anchor so windows actually cut.
        ts = ANCHOR_NS - rng.randint(0, 10 * 24 * 3600) * NS_PER_SECOND
        entries.append(LogEntry(ts, labels, line))
    return LogStore.build(entries, "random", ANCHOR_NS)


def _random_selector(rng: random.Random) -> tuple[LabelMatcher, ...]:
    # First matcher never matches empty, keeping the selector valid.
    first = rng.choice(
        [
            LabelMatcher("app", MatchOp.EQ, rng.choice(_APPS)),
            LabelMatcher("host", MatchOp.EQ, rng.choice(_HOSTS)),
            LabelMatcher("app", MatchOp.RE, "alpha|beta"),
            LabelMatcher("host", MatchOp.RE, "h[12]"),
            LabelMatcher("app", MatchOp.NEQ, ""),
        ]
    )
    matchers = [first]
    if rng.random() < 0.5:
        matchers.append(
            rng.choice(
                [
                    LabelMatcher("comp", MatchOp.NEQ, rng.choice(_COMPONENTS)),
                    LabelMatcher("comp", MatchOp.RE, "auth|net"),
                    LabelMatcher("comp", MatchOp.NRE, "dis.*"),
                    LabelMatcher("host", MatchOp.NEQ, rng.choice(_HOSTS)),
                ]
            )
        )
    return tuple(matchers)


def _random_stage(rng: random.Random) -> PipelineStage:
    roll = rng.random()
    if roll < 0.45:
        op = rng.choice(list(LineFilterOp))
        if op in (LineFilterOp.MATCHES, LineFilterOp.NOT_MATCHES):
            pattern = rng.choice([r"err.r", r"val=\d+", "503|token", "session .*ed"])
        else:
            pattern = rng.choice(_WORDS)
        return LineFilter(op, pattern)
    if roll < 0.65:
        return rng.choice(
            [
                LabelFilter("comp", "=", rng.choice(_COMPONENTS)),
                LabelFilter("comp", "!=", rng.choice(_COMPONENTS)),
                LabelFilter("host", "=~", "h[13]"),
                LabelFilter("__error__", "=", ""),
                LabelFilter("num", ">", rng.randint(0, 400)),
                LabelFilter("num", "<=", rng.randint(50, 500)),
            ]
        )
    if roll < 0.85:
        return RegexpStage(r"val=(?P<num>\d+)")
    return LineFormatStage(rng.choice(["{{.host}}/{{.comp}} {{.num}}", "[{{__timestamp__}}] {{.app}}"]))


_OPPOSITE = {
    LineFilterOp.CONTAINS: LineFilterOp.NOT_CONTAINS,
    LineFilterOp.NOT_CONTAINS: LineFilterOp.CONTAINS,
    LineFilterOp.MATCHES: LineFilterOp.NOT_MATCHES,
    LineFilterOp.NOT_MATCHES: LineFilterOp.MATCHES,
}


def _drop_contradictions(stages: list[PipelineStage]) -> list[PipelineStage]:
    # validate() rejects a provably-empty filter pair; don't generate one.
    kept: list[PipelineStage] = []
    seen: set[tuple[LineFilterOp, str]] = set()
    for stage in stages:
        if isinstance(stage, LineFormatStage):
            seen.clear()
        if isinstance(stage, LineFilter):
            if (_OPPOSITE[stage.op], stage.pattern) in seen:
                continue
            seen.add((stage.op, stage.pattern))
        kept.append(stage)
    return kept


def _random_pipeline(rng: random.Random, *, with_unwrap: bool) -> tuple[PipelineStage, ...]:
    stages = _drop_contradictions([_random_stage(rng) for _ in range(rng.randint(0, 3))])
    if with_unwrap:
        # Give the unwrap label a chance to exist.
        if not any(isinstance(s, RegexpStage) for s in stages):
            stages.append(RegexpStage(r"val=(?P<num>\d+)"))
        stages.append(UnwrapStage("num"))
    return tuple(stages)


def random_log_query(rng: random.Random, *, with_unwrap: bool = False) -> LogQuery:
    return LogQuery(_random_selector(rng), _random_pipeline(rng, with_unwrap=with_unwrap))


def _random_range_agg(rng: random.Random) -> RangeAgg:
    func = rng.choice(
        [
            "count_over_time",
            "count_over_time",
            "rate",
            "bytes_over_time",
            "sum_over_time",
            "avg_over_time",
            "min_over_time",
            "max_over_time",
        ]
    )
    needs_unwrap = func.endswith("_over_time") and func.split("_")[0] in ("sum", "avg", "min", "max")
    inner = random_log_query(rng, with_unwrap=needs_unwrap)
    return RangeAgg(func, inner, rng.choice(_RANGES))


def _random_grouping(rng: random.Random) -> Grouping | None:
    roll = rng.random()
    if roll < 0.4:
        return None
    labels = rng.sample(["app", "host", "comp", "num"], k=rng.randint(1, 2))
    mode = "by" if roll < 0.8 else "without"
    return Grouping(mode, tuple(labels))


def random_metric_query(rng: random.Random, depth: int = 0) -> QueryAst:
    inner: QueryAst = _random_range_agg(rng)
    wraps = rng.randint(0, 2 - depth if depth < 2 else 0)
    for _ in range(wraps):
        func = rng.choice(["sum", "avg", "min", "max", "count", "topk", "bottomk"])
        k = rng.randint(1, 3) if func in ("topk", "bottomk") else None
        inner = VectorAgg(func, inner, k=k, grouping=_random_grouping(rng))
    return inner


def random_query(rng: random.Random) -> QueryAst:
    if rng.random() < 0.4:
        return random_log_query(rng)
    return random_metric_query(rng)
