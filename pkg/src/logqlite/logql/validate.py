"""Semantic validation: a query passes iff the engine can execute it."""

from __future__ import annotations

import re

from .ast import (
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
    UNWRAP_RANGE_FUNCS,
    UnwrapStage,
    VectorAgg,
)
from .diagnostics import Code, Diagnostic
from .regexes import pattern_error

_PLACEHOLDER_RE = re.compile(r"\{\{(\.[a-zA-Z_][a-zA-Z0-9_]*|__timestamp__)\}\}")


def _span(node) -> tuple[int, int]:
    return node.span if node.span is not None else (0, 0)


def _matcher_matches_empty(matcher: LabelMatcher) -> bool:
    """True if the matcher accepts a missing label (treated as "")."""
    if matcher.op is MatchOp.EQ:
        return matcher.value == ""
    if matcher.op is MatchOp.NEQ:
        return matcher.value != ""
    if pattern_error(matcher.value) is not None:
        return False  # reported separately as BAD_REGEXP
    hit = re.fullmatch(matcher.value, "") is not None
    return hit if matcher.op is MatchOp.RE else not hit


def _check_selector(selector: tuple[LabelMatcher, ...], out: list[Diagnostic]) -> None:
    for m in selector:
        if m.op in (MatchOp.RE, MatchOp.NRE):
            err = pattern_error(m.value)
            if err is not None:
                out.append(Diagnostic(Code.BAD_REGEXP, _span(m), f"label matcher {m.name}: {err}"))
    if all(_matcher_matches_empty(m) for m in selector):
        out.append(
            Diagnostic(
                Code.EMPTY_SELECTOR,
                _span(selector[0]),
                "selector needs at least one matcher that does not match empty values",
            )
        )


def _check_stage(stage: PipelineStage, out: list[Diagnostic]) -> None:
    if isinstance(stage, LineFilter):
        if stage.op in (LineFilterOp.MATCHES, LineFilterOp.NOT_MATCHES):
            err = pattern_error(stage.pattern)
            if err is not None:
                out.append(Diagnostic(Code.BAD_REGEXP, _span(stage), f"line filter: {err}"))
    elif isinstance(stage, LabelFilter):
        if stage.op in ("=~", "!~"):
            err = pattern_error(str(stage.value))
            if err is not None:
                out.append(Diagnostic(Code.BAD_REGEXP, _span(stage), f"label filter {stage.name}: {err}"))
    elif isinstance(stage, RegexpStage):
        err = pattern_error(stage.pattern)
        if err is not None:
            out.append(Diagnostic(Code.BAD_REGEXP, _span(stage), f"regexp stage: {err}"))
        elif not re.compile(stage.pattern).groupindex:
            out.append(
                Diagnostic(
                    Code.BAD_REGEXP,
                    _span(stage),
                    "regexp stage needs at least one named capture group (?P<name>...)",
                )
            )
    elif isinstance(stage, LineFormatStage):
        _check_template(stage, out)


def _check_template(stage: LineFormatStage, out: list[Diagnostic]) -> None:
    pos = 0
    template = stage.template
    while True:
        start = template.find("{{", pos)
        if start == -1:
            return
        m = _PLACEHOLDER_RE.match(template, start)
        if m is None:
            end = template.find("}}", start)
            shown = template[start : end + 2] if end != -1 else template[start:]
            out.append(
                Diagnostic(
                    Code.BAD_TEMPLATE,
                    _span(stage),
                    f"invalid line_format placeholder {shown!r}; use "
                    "{{.label}} or {{__timestamp__}}",
                )
            )
            pos = start + 2
        else:
            pos = m.end()


def _check_contradictions(
    pipeline: tuple[PipelineStage, ...], out: list[Diagnostic]
) -> None:
    """Flag a filter pair that provably empties the result.

    A positive and a negative filter of the same kind with an identical
    pattern can never both pass; line_format rewrites the line, so the scan
    restarts after it.
    """
    positive: dict[tuple[str, str], PipelineStage] = {}
    negative: dict[tuple[str, str], PipelineStage] = {}
    opposite = {
        LineFilterOp.CONTAINS: ("contains", True),
        LineFilterOp.NOT_CONTAINS: ("contains", False),
        LineFilterOp.MATCHES: ("matches", True),
        LineFilterOp.NOT_MATCHES: ("matches", False),
    }
    for stage in pipeline:
        if isinstance(stage, LineFormatStage):
            positive.clear()
            negative.clear()
            continue
        if not isinstance(stage, LineFilter):
            continue
        kind, is_positive = opposite[stage.op]
        key = (kind, stage.pattern)
        bucket, counterpart = (positive, negative) if is_positive else (negative, positive)
        if key in counterpart:
            out.append(
                Diagnostic(
                    Code.EMPTY_PIPELINE_RESULT_RISK,
                    _span(stage),
                    f"filter pair on {stage.pattern!r} requires and forbids the "
                    "same text; no line can pass",
                )
            )
        bucket[key] = stage


def _check_log_query(
    query: LogQuery, out: list[Diagnostic], *, unwrap_rule: str | None
) -> None:
    _check_selector(query.selector, out)
    for stage in query.pipeline:
        _check_stage(stage, out)
    _check_contradictions(query.pipeline, out)
    unwraps = [s for s in query.pipeline if isinstance(s, UnwrapStage)]
    if unwrap_rule == "required" and not unwraps:
        out.append(
            Diagnostic(
                Code.MISSING_UNWRAP,
                _span(query),
                "this aggregation needs `| unwrap <label>` in the pipeline",
            )
        )
    elif unwrap_rule in (None, "forbidden") and unwraps:
        out.append(
            Diagnostic(
                Code.FORBIDDEN_UNWRAP,
                _span(unwraps[0]),
                "`| unwrap` is only valid inside sum/avg/min/max_over_time",
            )
        )


def validate(ast: QueryAst) -> list[Diagnostic]:
    """Return every reason the engine would refuse the query (empty = runnable)."""
    out: list[Diagnostic] = []
    if isinstance(ast, LogQuery):
        _check_log_query(ast, out, unwrap_rule=None)
        return out
    node = ast
    while isinstance(node, VectorAgg):
        node = node.inner
    if not isinstance(node, RangeAgg):  # pragma: no cover - parser can't build this
        raise TypeError(f"not a query AST: {ast!r}")
    rule = "required" if node.func in UNWRAP_RANGE_FUNCS else "forbidden"
    _check_log_query(node.inner, out, unwrap_rule=rule)
    if node.range is None:
        out.append(
            Diagnostic(
                Code.MISSING_RANGE,
                _span(node),
                f"{node.func} needs a time range like [1h]",
            )
        )
    return out
