import pytest

from logqlite.config import parse_duration
from logqlite.engine import (
    EvalContext,
    MetricResult,
    execute,
    result_from_json,
    result_to_json,
    run_pipeline,
    select_streams,
)
from logqlite.ingest import CorpusManifest, ingest
from logqlite.logql import Code, QuerySyntaxError, QueryValidationError, parse
from logqlite.store import LogEntry, LogStore
from logqlite.timefmt import NS_PER_SECOND

from conftest import FIXTURES

ANCHOR = 1_735_787_045_000_000_000  # 2025-01-02T03:04:05Z


def build_store(rows, application="test"):
    """rows: (seconds_before_anchor, labels, line)"""
    entries = [
        LogEntry(ANCHOR - back * NS_PER_SECOND, labels, line) for back, labels, line in rows
    ]
    return LogStore.build(entries, application, ANCHOR)


def ctx(**kwargs):
    return EvalContext(now=ANCHOR, **kwargs)


@pytest.fixture(scope="module")
def ssh_store():
    store, _ = ingest(CorpusManifest.load(FIXTURES / "corpora" / "sshmini" / "manifest.json"))
    return store


# --- select_streams ---------------------------------------------------------


def test_select_eq():
    store = build_store(
        [(10, {"app": "x"}, "a"), (20, {"app": "y"}, "b")]
    )
    streams = select_streams(store, parse('{app="x"}').selector)
    assert [s.labels for s in streams] == [{"app": "x"}]


def test_select_regex_prefix():
    store = build_store([(5, {"app": "openstack-eu-west"}, "a"), (6, {"app": "other"}, "b")])
    streams = select_streams(store, parse('{app=~"openstack.*"}').selector)
    assert [s.labels["app"] for s in streams] == ["openstack-eu-west"]


def test_select_neq_matches_missing_label():
    store = build_store([(5, {"app": "x"}, "a"), (6, {"app": "y", "extra": "1"}, "b")])
    streams = select_streams(store, parse('{app=~".+", extra!="1"}').selector)
    assert [s.labels["app"] for s in streams] == ["x"]


def test_select_nre_matches_missing_label():
    store = build_store([(5, {"app": "x"}, "a"), (6, {"app": "y", "extra": "abc"}, "b")])
    streams = select_streams(store, parse('{app=~".+", extra!~"a.*"}').selector)
    assert [s.labels["app"] for s in streams] == ["x"]


def test_select_regex_is_fully_anchored():
    store = build_store([(5, {"app": "xximportantxx"}, "a")])
    assert select_streams(store, parse('{app=~"important"}').selector) == []
    assert len(select_streams(store, parse('{app=~".*important.*"}').selector)) == 1


# --- pipeline ---------------------------------------------------------------


def test_run_pipeline_contains_chain():
    line = "service returned 503 during token validation for req-1"
    entries = [LogEntry(ANCHOR, {"app": "x"}, line), LogEntry(ANCHOR, {"app": "x"}, "ok")]
    ast = parse('{app="x"} |= "503" |= "token validation"')
    out = list(run_pipeline(entries, ast.pipeline))
    assert [e.line for e in out] == [line]


def test_run_pipeline_regexp_extracts_labels():
    entries = [
        LogEntry(ANCHOR, {"app": "x"}, "Accepted password for fztu from 119.4.203.64 port 38652 ssh2")
    ]
    ast = parse('{app="x"} | regexp "(?P<source_ip>\\\\d+\\\\.\\\\d+\\\\.\\\\d+\\\\.\\\\d+)"')
    (entry,) = run_pipeline(entries, ast.pipeline)
    assert entry.labels["source_ip"] == "119.4.203.64"


def test_run_pipeline_regexp_miss_sets_error_and_passes():
    entries = [LogEntry(ANCHOR, {"app": "x"}, "no ip here")]
    ast = parse('{app="x"} | regexp "(?P<n>\\\\d+)"')
    (entry,) = run_pipeline(entries, ast.pipeline)
    assert entry.labels["__error__"] == "regexp"


def test_error_filter_drops_flagged_entries():
    entries = [
        LogEntry(ANCHOR, {"app": "x"}, "val=5"),
        LogEntry(ANCHOR, {"app": "x"}, "nothing"),
    ]
    ast = parse('{app="x"} | regexp "val=(?P<v>\\\\d+)" | __error__=""')
    out = list(run_pipeline(entries, ast.pipeline))
    assert [e.line for e in out] == ["val=5"]


def test_line_format_rewrites_line():
    entries = [LogEntry(ANCHOR, {"app": "x", "host": "h1"}, "raw")]
    ast = parse('{app="x"} | line_format "{{.host}}: {{.missing}}!"')
    (entry,) = run_pipeline(entries, ast.pipeline)
    assert entry.line == "h1: !"


def test_line_format_timestamp_placeholder():
    entries = [LogEntry(ANCHOR, {"app": "x"}, "raw")]
    ast = parse('{app="x"} | line_format "[{{__timestamp__}}]"')
    (entry,) = run_pipeline(entries, ast.pipeline)
    assert entry.line == "[2025-01-02T03:04:05Z]"


def test_label_filter_numeric_comparators():
    entries = [
        LogEntry(ANCHOR, {"app": "x", "status": "200"}, "ok"),
        LogEntry(ANCHOR, {"app": "x", "status": "503"}, "bad"),
        LogEntry(ANCHOR, {"app": "x"}, "no status"),
    ]
    ast = parse('{app="x"} | status>=500')
    out = list(run_pipeline(entries, ast.pipeline))
    assert [e.line for e in out] == ["bad"]


# --- log queries ------------------------------------------------------------


def test_log_query_empty_selector_match(ssh_store):
    result = execute(ssh_store, '{application="nope"}', {}, ctx())
    assert result.rows == [] and result.truncated is False


def test_log_query_rows_ascending_and_windowed(ssh_store):
    result = execute(ssh_store, '{application="openssh"}', {}, ctx())
    ts_list = [r.ts for r in result.rows]
    assert ts_list == sorted(ts_list)
    assert len(result.rows) == 26


def test_log_query_lookback_window(ssh_store):
    result = execute(
        ssh_store, '{application="openssh"}', {}, EvalContext(now=ANCHOR, lookback=parse_duration("1h"))
    )
    assert 0 < len(result.rows) < 26


def test_fig5b_style_query_three_formatted_rows(ssh_store):
    query = (
        '{application="openssh"} |= "Did not receive identification string from" '
        '| hostname="LabSZ-tenant-5" | line_format "`{{__timestamp__}}` - Failed to '
        'receive identification string from {{.content}}"'
    )
    result = execute(ssh_store, query, {}, ctx())
    assert len(result.rows) == 3
    assert all(r.line.startswith("`2025-01-0") for r in result.rows)


def test_limit_truncates_from_oldest(ssh_store):
    full = execute(ssh_store, '{application="openssh"}', {}, ctx())
    cut = execute(ssh_store, '{application="openssh"}', {}, ctx(limit=2))
    assert cut.truncated is True
    assert len(cut.rows) == 2
    assert [r.line for r in cut.rows] == [r.line for r in full.rows[-2:]]


# --- metric queries ---------------------------------------------------------


def test_count_over_time_sum():
    store = build_store([(i, {"app": "x"}, "hit") for i in range(5)] + [(90, {"app": "x"}, "hit")])
    result = execute(store, 'sum(count_over_time({app="x"} [1m]))', {}, ctx())
    assert [(s.labels, s.value) for s in result.samples] == [({}, 5.0)]


def test_empty_window_yields_empty_vector():
    store = build_store([(3600, {"app": "x"}, "old")])
    result = execute(store, 'count_over_time({app="x"} [1m])', {}, ctx())
    assert result.samples == []
    assert isinstance(result, MetricResult)


def test_rate_is_count_per_second():
    store = build_store([(i, {"app": "x"}, "hit") for i in range(6)])
    result = execute(store, 'rate({app="x"} [1m])', {}, ctx())
    assert [s.value for s in result.samples] == [6 / 60.0]


def test_bytes_over_time_counts_utf8_bytes():
    store = build_store([(1, {"app": "x"}, "ab"), (2, {"app": "x"}, "héllo")])
    result = execute(store, 'bytes_over_time({app="x"} [1m])', {}, ctx())
    assert [s.value for s in result.samples] == [2.0 + 6.0]


def test_topk_picks_max_and_bottomk_min():
    store = build_store(
        [(i, {"app": "a"}, "x") for i in range(3)] + [(i, {"app": "b"}, "x") for i in range(7)]
    )
    top = execute(store, 'topk(1, sum by (app) (count_over_time({app=~"a|b"} [1m])))', {}, ctx())
    assert [(s.labels, s.value) for s in top.samples] == [({"app": "b"}, 7.0)]
    bottom = execute(store, 'bottomk(1, sum by (app) (count_over_time({app=~"a|b"} [1m])))', {}, ctx())
    assert [(s.labels, s.value) for s in bottom.samples] == [({"app": "a"}, 3.0)]


def test_topk_tie_break_is_canonical_label_order():
    store = build_store(
        [(1, {"app": "a"}, "x"), (2, {"app": "b"}, "x")]
    )
    result = execute(store, 'topk(1, sum by (app) (count_over_time({app=~"a|b"} [1m])))', {}, ctx())
    assert [s.labels for s in result.samples] == [{"app": "a"}]


def test_sum_by_component_two_groups():
    store = build_store(
        [(i, {"app": "x", "component": "auth"}, "m") for i in range(2)]
        + [(i, {"app": "x", "component": "net"}, "m") for i in range(3)]
    )
    result = execute(
        store, 'sum by (component) (count_over_time({app="x"} [1h]))', {}, ctx()
    )
    assert [(s.labels, s.value) for s in result.samples] == [
        ({"component": "auth"}, 2.0),
        ({"component": "net"}, 3.0),
    ]


def test_without_grouping():
    store = build_store(
        [(1, {"app": "x", "host": "h1"}, "m"), (2, {"app": "x", "host": "h2"}, "m")]
    )
    result = execute(store, 'sum without (host) (count_over_time({app="x"} [1m]))', {}, ctx())
    assert [(s.labels, s.value) for s in result.samples] == [({"app": "x"}, 2.0)]


def test_unwrap_aggregations():
    store = build_store(
        [
            (1, {"app": "x"}, "done dur=10"),
            (2, {"app": "x"}, "done dur=30"),
            (3, {"app": "x"}, "done dur=nonsense"),
            (4, {"app": "x"}, "no duration"),
        ]
    )
    base = '{app="x"} | regexp "dur=(?P<dur>\\\\w+)" | unwrap dur'
    total = execute(store, f"sum_over_time({base} [1m])", {}, ctx())
    # Grouping key excludes the unwrapped label; entries without a usable
    # value are skipped but still share the group.
    assert [(s.labels, s.value) for s in total.samples] == [({"app": "x"}, 40.0)]
    avg = execute(store, f"avg_over_time({base} [1m])", {}, ctx())
    assert [s.value for s in avg.samples] == [20.0]
    low = execute(store, f"min_over_time({base} [1m])", {}, ctx())
    assert [s.value for s in low.samples] == [10.0]
    high = execute(store, f"max_over_time({base} [1m])", {}, ctx())
    assert [s.value for s in high.samples] == [30.0]


def test_unwrap_group_with_no_values_has_no_sample():
    store = build_store([(1, {"app": "x"}, "nothing numeric")])
    result = execute(
        store, 'sum_over_time({app="x"} | regexp "dur=(?P<dur>\\\\d+)" | unwrap dur [1m])', {}, ctx()
    )
    assert result.samples == []


def test_count_vector_agg():
    store = build_store(
        [(1, {"app": "a"}, "x"), (2, {"app": "b"}, "x"), (3, {"app": "c"}, "x")]
    )
    result = execute(store, 'count(count_over_time({app=~".+"} [1m]))', {}, ctx())
    assert [(s.labels, s.value) for s in result.samples] == [({}, 3.0)]


def test_grouping_key_includes_extracted_labels():
    store = build_store(
        [
            (1, {"app": "x"}, "code=500"),
            (2, {"app": "x"}, "code=500"),
            (3, {"app": "x"}, "code=200"),
        ]
    )
    result = execute(
        store,
        'sum by (code) (count_over_time({app="x"} | regexp "code=(?P<code>\\\\d+)" [1m]))',
        {},
        ctx(),
    )
    assert [(s.labels["code"], s.value) for s in result.samples] == [("200", 1.0), ("500", 2.0)]


# --- facade ----------------------------------------------------------------


def test_execute_dispatches_and_errors(ssh_store):
    with pytest.raises(QuerySyntaxError):
        execute(ssh_store, "", {}, ctx())
    with pytest.raises(QuerySyntaxError) as exc:
        execute(ssh_store, 'calculate_over_time({a="1"} [1m])', {}, ctx())
    assert exc.value.diagnostics[0].code is Code.UNKNOWN_FUNC
    with pytest.raises(QueryValidationError):
        execute(ssh_store, 'count_over_time({application="openssh"})', {}, ctx())
    result = execute(
        ssh_store,
        'count_over_time({application="openssh"} |= "503" |= "token validation" [30d])',
        {},
        ctx(),
    )
    assert isinstance(result, MetricResult)


def test_result_json_round_trip(ssh_store):
    for query in ('{application="openssh"}', 'sum(count_over_time({application="openssh"} [1d]))'):
        result = execute(ssh_store, query, {}, ctx())
        assert result_from_json(result_to_json(result)) == result
