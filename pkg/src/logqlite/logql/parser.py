"""Recursive-descent parser for the LogQL subset.

Dashboard variables (`$name`) are substituted textually before lexing, the
way Grafana expands them: every occurrence with a binding is replaced, and
`$__interval` falls back to a configurable default.  An unbound variable
outside a string literal is a VARIABLE_UNSUBSTITUTED error (its span points
into the original text); inside a string literal it stays literal, since
label values like "dfs.DataNode$DataTransfer" are legal log vocabulary.

Diagnostics raised after substitution carry spans into the substituted text.
"""

from __future__ import annotations

import re
from typing import Mapping

from .ast import (
    Duration,
    Grouping,
    K_FUNCS,
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
    RANGE_FUNCS,
    RangeAgg,
    RegexpStage,
    UnwrapStage,
    VECTOR_FUNCS,
    VectorAgg,
)
from .diagnostics import Code, Diagnostic, QuerySyntaxError
from .lexer import Token, tokenize

DEFAULT_INTERVAL = "1m"

_VAR_RE = re.compile(r"\$([a-zA-Z_][a-zA-Z0-9_]*)")

# Loki pipeline stages outside the supported subset; recognized only to
# reject them by name.
_REJECTED_STAGES = {"json", "logfmt", "pattern", "label_format", "unpack", "decolorize"}

_MATCH_OPS = {"EQ": MatchOp.EQ, "BANG_EQ": MatchOp.NEQ, "EQ_TILDE": MatchOp.RE, "BANG_TILDE": MatchOp.NRE}
_LINE_FILTER_OPS = {
    "PIPE_EQ": LineFilterOp.CONTAINS,
    "BANG_EQ": LineFilterOp.NOT_CONTAINS,
    "PIPE_TILDE": LineFilterOp.MATCHES,
    "BANG_TILDE": LineFilterOp.NOT_MATCHES,
}
_LABEL_FILTER_OPS = {
    "EQ": "=",
    "BANG_EQ": "!=",
    "GT": ">",
    "GTE": ">=",
    "LT": "<",
    "LTE": "<=",
    "EQ_TILDE": "=~",
    "BANG_TILDE": "!~",
}


def substitute_variables(
    text: str,
    vars: Mapping[str, str] | None,
    default_interval: str = DEFAULT_INTERVAL,
) -> str:
    """Expand `$name` occurrences; raise on unbound variables outside strings."""
    bindings = dict(vars or {})
    bindings.setdefault("__interval", default_interval)

    out: list[str] = []
    i = 0
    n = len(text)
    in_string = False
    while i < n:
        ch = text[i]
        if in_string:
            if ch == "\\" and i + 1 < n:
                out.append(text[i : i + 2])
                i += 2
                continue
            if ch == '"':
                in_string = False
                out.append(ch)
                i += 1
                continue
        elif ch == '"':
            in_string = True
            out.append(ch)
            i += 1
            continue
        if ch == "$":
            m = _VAR_RE.match(text, i)
            if m:
                name = m.group(1)
                if name in bindings:
                    out.append(bindings[name])
                    i = m.end()
                    continue
                if not in_string:
                    raise QuerySyntaxError(
                        [
                            Diagnostic(
                                Code.VARIABLE_UNSUBSTITUTED,
                                (m.start(), m.end()),
                                f"no binding for dashboard variable ${name}",
                            )
                        ]
                    )
        out.append(ch)
        i += 1
    return "".join(out)


class _Parser:
    def __init__(self, tokens: list[Token]):
        self.tokens = tokens
        self.i = 0

    # -- token plumbing ----------------------------------------------------

    def _peek(self, ahead: int = 0) -> Token:
        return self.tokens[min(self.i + ahead, len(self.tokens) - 1)]

    def _advance(self) -> Token:
        tok = self.tokens[self.i]
        if tok.kind != "EOF":
            self.i += 1
        return tok

    def _check(self, kind: str) -> bool:
        return self._peek().kind == kind

    def _match(self, kind: str) -> Token | None:
        if self._check(kind):
            return self._advance()
        return None

    def _expect(self, kind: str, what: str) -> Token:
        tok = self._peek()
        if tok.kind != kind:
            raise self._err(f"expected {what}", tok)
        return self._advance()

    def _err(
        self, message: str, tok: Token, code: Code = Code.SYNTAX
    ) -> QuerySyntaxError:
        shown = tok.lexeme or "end of input"
        return QuerySyntaxError(
            [Diagnostic(code, tok.span, f"{message}, found {shown!r}")]
        )

    # -- grammar -----------------------------------------------------------

    def parse_query(self) -> QueryAst:
        tok = self._peek()
        if tok.kind == "LBRACE":
            query = self.parse_log_query()
        elif tok.kind == "IDENT":
            query = self.parse_metric_query()
        else:
            raise self._err("expected a selector or an aggregation function", tok)
        trailing = self._peek()
        if trailing.kind == "LBRACKET":
            raise self._err(
                "time range not allowed here", trailing, Code.MISPLACED_RANGE
            )
        if trailing.kind != "EOF":
            raise self._err("unexpected trailing input", trailing)
        return query

    def parse_log_query(self) -> LogQuery:
        start = self._peek().pos
        selector = self._parse_selector()
        pipeline: list[PipelineStage] = []
        while True:
            stage = self._parse_stage()
            if stage is None:
                break
            pipeline.append(stage)
        end = self._peek().pos
        return LogQuery(tuple(selector), tuple(pipeline), span=(start, end))

    def _parse_selector(self) -> list[LabelMatcher]:
        lbrace = self._expect("LBRACE", "'{'")
        if self._check("RBRACE"):
            rbrace = self._advance()
            raise QuerySyntaxError(
                [
                    Diagnostic(
                        Code.EMPTY_SELECTOR,
                        (lbrace.pos, rbrace.pos + 1),
                        "selector must contain at least one matcher",
                    )
                ]
            )
        matchers = [self._parse_matcher()]
        while self._match("COMMA"):
            matchers.append(self._parse_matcher())
        self._expect("RBRACE", "'}' or ','")
        return matchers

    def _parse_matcher(self) -> LabelMatcher:
        name = self._expect("IDENT", "label name")
        op_tok = self._peek()
        op = _MATCH_OPS.get(op_tok.kind)
        if op is None:
            raise self._err("expected one of = != =~ !~", op_tok)
        self._advance()
        value = self._expect("STRING", "quoted label value")
        return LabelMatcher(
            name.value, op, value.value, span=(name.pos, value.pos + len(value.lexeme))
        )

    def _parse_stage(self) -> PipelineStage | None:
        tok = self._peek()
        if tok.kind in ("PIPE_EQ", "PIPE_TILDE", "BANG_EQ", "BANG_TILDE"):
            self._advance()
            pattern = self._expect_string_arg("line filter pattern")
            return LineFilter(
                _LINE_FILTER_OPS[tok.kind],
                pattern.value,
                span=(tok.pos, pattern.pos + len(pattern.lexeme)),
            )
        if tok.kind != "PIPE":
            return None
        self._advance()
        ident = self._expect("IDENT", "pipeline stage")
        following = self._peek()
        if following.kind in _LABEL_FILTER_OPS:
            return self._parse_label_filter(tok, ident)
        if ident.value == "regexp":
            pattern = self._expect_string_arg("regexp pattern")
            return RegexpStage(
                pattern.value, span=(tok.pos, pattern.pos + len(pattern.lexeme))
            )
        if ident.value == "line_format":
            template = self._expect_string_arg("line_format template")
            return LineFormatStage(
                template.value, span=(tok.pos, template.pos + len(template.lexeme))
            )
        if ident.value == "unwrap":
            label = self._expect("IDENT", "label name to unwrap")
            return UnwrapStage(label.value, span=(tok.pos, label.pos + len(label.lexeme)))
        if ident.value in _REJECTED_STAGES:
            raise self._err(
                f"pipeline stage '{ident.value}' is outside the supported subset",
                ident,
                Code.UNKNOWN_FUNC,
            )
        raise self._err("unknown pipeline stage", ident, Code.UNKNOWN_FUNC)

    def _parse_label_filter(self, pipe: Token, name: Token) -> LabelFilter:
        op_tok = self._advance()
        op = _LABEL_FILTER_OPS[op_tok.kind]
        val_tok = self._peek()
        if op in ("=~", "!~"):
            value_token = self._expect("STRING", "quoted regex")
            value: str | int | float = value_token.value
        elif op in (">", ">=", "<", "<="):
            if val_tok.kind == "LBRACKET" or val_tok.kind == "DURATION":
                raise self._err("time range not allowed here", val_tok, Code.MISPLACED_RANGE)
            value_token = self._expect("NUMBER", "number")
            value = value_token.value
        else:  # = or !=
            if val_tok.kind == "STRING" or val_tok.kind == "NUMBER":
                value_token = self._advance()
                value = value_token.value
            else:
                raise self._err("expected quoted string or number", val_tok)
        return LabelFilter(
            name.value,
            op,
            value,
            span=(pipe.pos, value_token.pos + len(value_token.lexeme)),
        )

    def _expect_string_arg(self, what: str) -> Token:
        tok = self._peek()
        if tok.kind in ("LBRACKET", "DURATION"):
            raise self._err("time range not allowed here", tok, Code.MISPLACED_RANGE)
        return self._expect("STRING", what)

    def parse_metric_query(self) -> MetricQuery:
        tok = self._peek()
        if tok.kind != "IDENT":
            raise self._err("expected an aggregation function", tok)
        if tok.value in RANGE_FUNCS:
            return self._parse_range_agg()
        if tok.value in VECTOR_FUNCS:
            return self._parse_vector_agg()
        if self._peek(1).kind == "LPAREN":
            raise self._err(f"unknown function '{tok.value}'", tok, Code.UNKNOWN_FUNC)
        raise self._err("expected an aggregation function", tok)

    def _parse_range_agg(self) -> RangeAgg:
        func = self._advance()
        self._expect("LPAREN", "'(' after function name")
        inner = self.parse_log_query()
        rng: Duration | None = None
        if self._check("LBRACKET"):
            lb = self._advance()
            dur = self._expect("DURATION", "duration like 30d")
            rb = self._expect("RBRACKET", "']'")
            magnitude, unit = dur.value
            rng = Duration(magnitude, unit, span=(lb.pos, rb.pos + 1))
        end = self._expect("RPAREN", "')'")
        return RangeAgg(func.value, inner, rng, span=(func.pos, end.pos + 1))

    def _parse_vector_agg(self) -> VectorAgg:
        func = self._advance()
        grouping = self._parse_grouping()
        self._expect("LPAREN", "'(' after aggregation")
        k: int | None = None
        if func.value in K_FUNCS:
            k_tok = self._expect("NUMBER", f"k parameter for {func.value}")
            if not isinstance(k_tok.value, int) or k_tok.value < 1:
                raise self._err("k must be a positive integer", k_tok)
            k = k_tok.value
            self._expect("COMMA", "',' after k")
        inner_tok = self._peek()
        if inner_tok.kind == "LBRACE":
            raise self._err(
                "vector aggregation requires a metric expression, not a log selector",
                inner_tok,
            )
        inner = self.parse_metric_query()
        end = self._expect("RPAREN", "')'")
        return VectorAgg(
            func.value, inner, k=k, grouping=grouping, span=(func.pos, end.pos + 1)
        )

    def _parse_grouping(self) -> Grouping | None:
        tok = self._peek()
        if tok.kind != "IDENT" or tok.value not in ("by", "without"):
            return None
        self._advance()
        self._expect("LPAREN", f"'(' after {tok.value}")
        labels = [self._expect("IDENT", "label name").value]
        while self._match("COMMA"):
            labels.append(self._expect("IDENT", "label name").value)
        self._expect("RPAREN", "')'")
        return Grouping(tok.value, tuple(labels))


def parse(
    text: str,
    vars: Mapping[str, str] | None = None,
    default_interval: str = DEFAULT_INTERVAL,
) -> QueryAst:
    """Parse query text into an AST, expanding dashboard variables first.

    Raises QuerySyntaxError with a span-carrying Diagnostic on failure.
    """
    if not text.strip():
        raise QuerySyntaxError(
            [Diagnostic(Code.SYNTAX, (0, max(len(text), 1)), "empty query")]
        )
    substituted = substitute_variables(text, vars, default_interval)
    return _Parser(tokenize(substituted)).parse_query()
