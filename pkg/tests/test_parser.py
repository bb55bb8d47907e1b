import pytest

from logqlite.logql import (
    Code,
    Duration,
    LabelFilter,
    LabelMatcher,
    LineFilter,
    LineFilterOp,
    LogQuery,
    MatchOp,
    QuerySyntaxError,
    RangeAgg,
    VectorAgg,
    parse,
    render,
    validate,
)

from paper_queries import GREEN_QUERIES, RED_QUERIES


def test_minimal_selector():
    ast = parse('{app="x"}')
    assert ast == LogQuery((LabelMatcher("app", MatchOp.EQ, "x"),))


def test_empty_selector_rejected():
    with pytest.raises(QuerySyntaxError) as exc:
        parse("{}")
    assert exc.value.diagnostic.code is Code.EMPTY_SELECTOR


def test_empty_text_rejected():
    with pytest.raises(QuerySyntaxError):
        parse("   ")


def test_openstack_counting_query_shape():
    ast = parse(
        'count_over_time({job="openstack", region="asia-pacific"} |= "503" '
        '|= "token validation" [30d])'
    )
    assert isinstance(ast, RangeAgg)
    assert ast.func == "count_over_time"
    assert ast.range == Duration(30, "d")
    assert [m.name for m in ast.inner.selector] == ["job", "region"]
    assert ast.inner.pipeline == (
        LineFilter(LineFilterOp.CONTAINS, "503"),
        LineFilter(LineFilterOp.CONTAINS, "token validation"),
    )


def test_dashboard_variables_substituted():
    ast = parse(
        'sum by(instance) (count_over_time({$label_name=~"$label_value"} '
        '|= "x" [$__interval]))',
        {"label_name": "job", "label_value": ".+"},
    )
    assert isinstance(ast, VectorAgg)
    assert ast.grouping.labels == ("instance",)
    inner = ast.inner
    assert inner.inner.selector == (LabelMatcher("job", MatchOp.RE, ".+"),)
    assert inner.range == Duration(1, "m")  # $__interval default


def test_unbound_variable_outside_string_errors():
    with pytest.raises(QuerySyntaxError) as exc:
        parse('{app="x"} |= "y" | unwrap $lbl')
    assert exc.value.diagnostic.code is Code.VARIABLE_UNSUBSTITUTED
    span = exc.value.diagnostic.span
    assert span == (26, 30)  # the `$lbl` token in the original text


def test_dollar_inside_string_stays_literal():
    ast = parse('{component="dfs.DataNode$DataTransfer"}')
    assert ast.selector[0].value == "dfs.DataNode$DataTransfer"


def test_unknown_function():
    with pytest.raises(QuerySyntaxError) as exc:
        parse('calculate_over_time({a="1"} [1m])')
    assert exc.value.diagnostic.code is Code.UNKNOWN_FUNC


def test_rejected_stage_names():
    for stage in ("json", "logfmt", "pattern", "label_format"):
        with pytest.raises(QuerySyntaxError) as exc:
            parse(f'{{a="1"}} | {stage}')
        assert exc.value.diagnostic.code is Code.UNKNOWN_FUNC


def test_trailing_range_on_log_query_is_misplaced():
    with pytest.raises(QuerySyntaxError) as exc:
        parse('{a="1"} |= "x" [5m]')
    assert exc.value.diagnostic.code is Code.MISPLACED_RANGE


def test_range_in_filter_position_is_misplaced():
    with pytest.raises(QuerySyntaxError) as exc:
        parse('count_over_time({a="1"} |~ [12h] "x")')
    assert exc.value.diagnostic.code is Code.MISPLACED_RANGE


def test_missing_range_parses_then_validates():
    ast = parse('count_over_time({a="1"} |= "x")')
    assert isinstance(ast, RangeAgg) and ast.range is None
    codes = [d.code for d in validate(ast)]
    assert codes == [Code.MISSING_RANGE]


def test_topk_requires_integer_k():
    with pytest.raises(QuerySyntaxError):
        parse('topk(sum(count_over_time({a="1"} [1m])))')
    with pytest.raises(QuerySyntaxError):
        parse('topk(0, sum(count_over_time({a="1"} [1m])))')
    ast = parse('topk(2, count_over_time({a="1"} [1m]))')
    assert ast.k == 2


def test_vector_agg_over_log_selector_rejected():
    with pytest.raises(QuerySyntaxError):
        parse('sum({a="1"})')


def test_label_filter_forms():
    ast = parse('{a="1"} | status>=500 | level="info" | dur=1.5')
    assert ast.pipeline == (
        LabelFilter("status", ">=", 500),
        LabelFilter("level", "=", "info"),
        LabelFilter("dur", "=", 1.5),
    )


def test_string_escapes_round_trip():
    ast = parse('{a="quote \\" backslash \\\\ tab \\t"}')
    assert ast.selector[0].value == 'quote " backslash \\ tab \t'
    assert parse(render(ast)) == ast


def test_unknown_escape_keeps_backslash():
    ast = parse('{a="1"} |~ "err\\d+"')
    assert ast.pipeline[0].pattern == "err\\d+"
    assert parse(render(ast)) == ast


def test_durations():
    for text, expected in [
        ("[30d]", Duration(30, "d")),
        ("[1m]", Duration(1, "m")),
        ("[12h]", Duration(12, "h")),
        ("[500ms]", Duration(500, "ms")),
        ("[2w]", Duration(2, "w")),
    ]:
        ast = parse(f'count_over_time({{a="1"}} {text})')
        assert ast.range == expected


def test_binary_operator_rejected():
    with pytest.raises(QuerySyntaxError):
        parse('count_over_time({a="1"} [1m]) + count_over_time({b="2"} [1m])')


# --- the paper's concrete queries ------------------------------------------


@pytest.mark.parametrize("query,vars", GREEN_QUERIES, ids=range(len(GREEN_QUERIES)))
def test_green_queries_parse_clean(query, vars):
    ast = parse(query, vars)
    assert validate(ast) == []


@pytest.mark.parametrize("query", RED_QUERIES, ids=range(len(RED_QUERIES)))
def test_red_queries_fail(query):
    try:
        ast = parse(query, {})
    except QuerySyntaxError:
        return
    assert validate(ast), f"red query parsed and validated clean: {query}"
