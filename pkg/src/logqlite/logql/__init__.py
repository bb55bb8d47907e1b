"""LogQL subset: AST, parser, validator, canonical printer."""

from .ast import (
    Duration,
    Grouping,
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
    ast_equal,
    canonicalize,
    is_metric,
    render,
)
from .diagnostics import Code, Diagnostic, QueryError, QuerySyntaxError, QueryValidationError
from .parser import DEFAULT_INTERVAL, parse, substitute_variables
from .validate import validate

__all__ = [
    "Code",
    "DEFAULT_INTERVAL",
    "Diagnostic",
    "Duration",
    "Grouping",
    "LabelFilter",
    "LabelMatcher",
    "LineFilter",
    "LineFilterOp",
    "LineFormatStage",
    "LogQuery",
    "MatchOp",
    "MetricQuery",
    "PipelineStage",
    "QueryAst",
    "QueryError",
    "QuerySyntaxError",
    "QueryValidationError",
    "RangeAgg",
    "RegexpStage",
    "UnwrapStage",
    "VectorAgg",
    "ast_equal",
    "canonicalize",
    "is_metric",
    "parse",
    "render",
    "substitute_variables",
    "validate",
]
