"""AST for the supported LogQL subset, with canonicalization and printing.

Two query families exist: a log query (stream selector plus pipeline) and a
metric query (range aggregation over a log query, optionally wrapped in
vector aggregations).  Nodes are frozen; source spans are carried for
diagnostics but never take part in equality.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Union

Span = tuple[int, int]

LABEL_NAME_RE = re.compile(r"[a-zA-Z_][a-zA-Z0-9_]*\Z")

RANGE_FUNCS = (
    "count_over_time",
    "rate",
    "bytes_over_time",
    "sum_over_time",
    "avg_over_time",
    "min_over_time",
    "max_over_time",
)
UNWRAP_RANGE_FUNCS = ("sum_over_time", "avg_over_time", "min_over_time", "max_over_time")
VECTOR_FUNCS = ("sum", "avg", "min", "max", "count", "topk", "bottomk")
K_FUNCS = ("topk", "bottomk")

LABEL_FILTER_OPS = ("=", "!=", ">", ">=", "<", "<=", "=~", "!~")


class MatchOp(Enum):
    EQ = "="
    NEQ = "!="
    RE = "=~"
    NRE = "!~"


class LineFilterOp(Enum):
    CONTAINS = "|="
    NOT_CONTAINS = "!="
    MATCHES = "|~"
    NOT_MATCHES = "!~"


@dataclass(frozen=True)
class LabelMatcher:
    """One `name op "value"` pair inside a stream selector."""

    name: str
    op: MatchOp
    value: str
    span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not LABEL_NAME_RE.match(self.name):
            raise ValueError(f"invalid label name {self.name!r}")


@dataclass(frozen=True)
class LineFilter:
    op: LineFilterOp
    pattern: str
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class LabelFilter:
    """Pipeline-stage test on the current label map, e.g. `| status >= 500`."""

    name: str
    op: str
    value: str | int | float
    span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not LABEL_NAME_RE.match(self.name):
            raise ValueError(f"invalid label name {self.name!r}")
        if self.op not in LABEL_FILTER_OPS:
            raise ValueError(f"invalid label filter comparator {self.op!r}")
        if self.op in (">", ">=", "<", "<=") and isinstance(self.value, str):
            raise ValueError(f"comparator {self.op} needs a numeric value")
        if self.op in ("=~", "!~") and not isinstance(self.value, str):
            raise ValueError(f"comparator {self.op} needs a string pattern")


@dataclass(frozen=True)
class RegexpStage:
    """`| regexp "..."` — named capture groups become labels."""

    pattern: str
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class LineFormatStage:
    """`| line_format "..."` with {{.label}} / {{__timestamp__}} placeholders."""

    template: str
    span: Span | None = field(default=None, compare=False, repr=False)


@dataclass(frozen=True)
class UnwrapStage:
    """`| unwrap label` — marks the numeric source for *_over_time."""

    label: str
    span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not LABEL_NAME_RE.match(self.label):
            raise ValueError(f"invalid label name {self.label!r}")


PipelineStage = Union[LineFilter, LabelFilter, RegexpStage, LineFormatStage, UnwrapStage]


@dataclass(frozen=True)
class LogQuery:
    selector: tuple[LabelMatcher, ...]
    pipeline: tuple[PipelineStage, ...] = ()
    span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if not self.selector:
            raise ValueError("selector must contain at least one matcher")


_UNIT_NS = {
    "ms": 1_000_000,
    "s": 1_000_000_000,
    "m": 60 * 1_000_000_000,
    "h": 3600 * 1_000_000_000,
    "d": 24 * 3600 * 1_000_000_000,
    "w": 7 * 24 * 3600 * 1_000_000_000,
}
# Largest first, for canonical printing.
_UNITS_DESC = ("w", "d", "h", "m", "s", "ms")


@dataclass(frozen=True)
class Duration:
    magnitude: int
    unit: str
    span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.unit not in _UNIT_NS:
            raise ValueError(f"invalid duration unit {self.unit!r}")
        if self.magnitude <= 0:
            raise ValueError("duration magnitude must be positive")

    @property
    def ns(self) -> int:
        return self.magnitude * _UNIT_NS[self.unit]

    @property
    def seconds(self) -> float:
        return self.ns / 1e9

    def canonical(self) -> Duration:
        """Same duration in the largest unit that divides it exactly."""
        total = self.ns
        for unit in _UNITS_DESC:
            if total % _UNIT_NS[unit] == 0:
                return Duration(total // _UNIT_NS[unit], unit)
        raise AssertionError("unreachable: ms divides every duration")


@dataclass(frozen=True)
class Grouping:
    mode: str  # "by" | "without"
    labels: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.mode not in ("by", "without"):
            raise ValueError(f"invalid grouping mode {self.mode!r}")


@dataclass(frozen=True)
class RangeAgg:
    """`func({...} ... [range])`; range may be absent (validate flags it)."""

    func: str
    inner: LogQuery
    range: Duration | None
    span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.func not in RANGE_FUNCS:
            raise ValueError(f"unknown range aggregation {self.func!r}")


@dataclass(frozen=True)
class VectorAgg:
    """`func by (...) (k, inner)` — k only for topk/bottomk."""

    func: str
    inner: "MetricQuery"
    k: int | None = None
    grouping: Grouping | None = None
    span: Span | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.func not in VECTOR_FUNCS:
            raise ValueError(f"unknown vector aggregation {self.func!r}")
        if self.func in K_FUNCS:
            if self.k is None or self.k < 1:
                raise ValueError(f"{self.func} requires k >= 1")
        elif self.k is not None:
            raise ValueError(f"{self.func} does not take a k parameter")


MetricQuery = Union[RangeAgg, VectorAgg]
QueryAst = Union[LogQuery, MetricQuery]


def is_metric(ast: QueryAst) -> bool:
    return isinstance(ast, (RangeAgg, VectorAgg))


# ---------------------------------------------------------------------------
# Canonicalization and equality


def canonicalize(ast: QueryAst) -> QueryAst:
    """Normalize representation without changing meaning.

    Selector matchers sort by (name, op, value) — they commute.  Grouping
    label lists sort.  Durations move to their largest exact unit.  Pipeline
    stage order is semantic and is preserved.  Idempotent.
    """
    if isinstance(ast, LogQuery):
        matchers = tuple(
            sorted(ast.selector, key=lambda m: (m.name, m.op.value, m.value))
        )
        return replace(ast, selector=matchers)
    if isinstance(ast, RangeAgg):
        rng = ast.range.canonical() if ast.range is not None else None
        return replace(ast, inner=canonicalize(ast.inner), range=rng)
    if isinstance(ast, VectorAgg):
        grouping = ast.grouping
        if grouping is not None:
            grouping = Grouping(grouping.mode, tuple(sorted(grouping.labels)))
        return replace(ast, inner=canonicalize(ast.inner), grouping=grouping)
    raise TypeError(f"not a query AST: {ast!r}")


def ast_equal(a: QueryAst, b: QueryAst) -> bool:
    """Structural equality after canonicalization (the exact-match notion)."""
    return canonicalize(a) == canonicalize(b)


# ---------------------------------------------------------------------------
# Canonical printing


def quote(value: str) -> str:
    out = ['"']
    for ch in value:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\t":
            out.append("\\t")
        elif ch == "\r":
            out.append("\\r")
        else:
            out.append(ch)
    out.append('"')
    return "".join(out)


def _render_stage(stage: PipelineStage) -> str:
    if isinstance(stage, LineFilter):
        return f"{stage.op.value} {quote(stage.pattern)}"
    if isinstance(stage, LabelFilter):
        value = stage.value if not isinstance(stage.value, str) else quote(stage.value)
        return f"| {stage.name}{stage.op}{value}"
    if isinstance(stage, RegexpStage):
        return f"| regexp {quote(stage.pattern)}"
    if isinstance(stage, LineFormatStage):
        return f"| line_format {quote(stage.template)}"
    if isinstance(stage, UnwrapStage):
        return f"| unwrap {stage.label}"
    raise TypeError(f"not a pipeline stage: {stage!r}")


def render(ast: QueryAst) -> str:
    """Print an AST as canonical query text; parse(render(x)) is ast_equal to x."""
    if isinstance(ast, LogQuery):
        matchers = ", ".join(
            f"{m.name}{m.op.value}{quote(m.value)}" for m in ast.selector
        )
        parts = ["{" + matchers + "}"]
        parts.extend(_render_stage(s) for s in ast.pipeline)
        return " ".join(parts)
    if isinstance(ast, RangeAgg):
        inner = render(ast.inner)
        if ast.range is not None:
            rng = ast.range.canonical()
            inner = f"{inner} [{rng.magnitude}{rng.unit}]"
        return f"{ast.func}({inner})"
    if isinstance(ast, VectorAgg):
        head = ast.func
        if ast.grouping is not None:
            head += f" {ast.grouping.mode} ({', '.join(ast.grouping.labels)})"
        args = render(ast.inner)
        if ast.k is not None:
            args = f"{ast.k}, {args}"
        return f"{head}({args})"
    raise TypeError(f"not a query AST: {ast!r}")
