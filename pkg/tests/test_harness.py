import json
import random

import pytest

from logqlite.config import RunConfig, load_stores
from logqlite.gateway import GenerationResponse, canned_generator, echo_generator
from logqlite.harness import (
    DatasetError,
    EvalMetrics,
    aggregate,
    compare_runs,
    evaluate_run,
    evaluate_tuple,
    load_dataset,
    render_report,
)

from conftest import FIXTURES


@pytest.fixture(scope="module")
def stores():
    config = RunConfig(
        corpora={
            "openssh": FIXTURES / "corpora/sshmini/manifest.json",
            "openstack": FIXTURES / "corpora/stackmini/manifest.json",
            "hdfs": FIXTURES / "corpora/hdfsmini/manifest.json",
        },
        dataset=None,
        endpoints=None,
        output_dir=FIXTURES / "runs",
        now=None,
    )
    return load_stores(config)


@pytest.fixture(scope="module")
def tuples():
    return load_dataset(FIXTURES / "dataset.jsonl")


# --- evaluate_tuple ----------------------------------------------------------


def test_candidate_equals_reference(stores, tuples):
    tup = tuples[0]
    record = evaluate_tuple(stores[tup.application], tup, tup.reference_query)
    assert record.exec_ok and record.exact_match
    assert record.metric_correct is True
    assert record.reference_matches_expected is True


def test_unknown_function_candidate_not_executable(stores, tuples):
    tup = tuples[0]
    record = evaluate_tuple(
        stores[tup.application], tup, 'calculate_over_time({application="openssh"} |= "x" [30d])'
    )
    assert not record.parse_ok and not record.exec_ok
    assert record.metric_correct is False
    assert "UNKNOWN_FUNC" in (record.error or "")


def test_reordered_matchers_still_exact_match(stores, tuples):
    tup = next(t for t in tuples if t.id == "stk-m1")
    reordered = (
        'count_over_time({region="asia-pacific", job="openstack"} '
        '|= "503" |= "token validation" [30d])'
    )
    record = evaluate_tuple(stores[tup.application], tup, reordered)
    assert record.exact_match is True
    assert record.metric_correct is True


def test_reordered_line_filters_not_exact_match_but_equivalent(stores, tuples):
    tup = next(t for t in tuples if t.id == "stk-m1")
    swapped = (
        'count_over_time({job="openstack", region="asia-pacific"} '
        '|= "token validation" |= "503" [30d])'
    )
    record = evaluate_tuple(stores[tup.application], tup, swapped)
    assert record.exact_match is False
    assert record.metric_correct is True  # execution accuracy survives the swap


def test_candidate_wrapped_in_prose(stores, tuples):
    tup = next(t for t in tuples if t.id == "ssh-m1")
    raw = f"Sure! Here is the query:\n```logql\n{tup.reference_query}\n```\nhope it helps"
    record = evaluate_tuple(stores[tup.application], tup, raw)
    assert record.exec_ok and record.metric_correct


def test_log_tuple_partial_overlap_scores_between(stores, tuples):
    tup = next(t for t in tuples if t.id == "ssh-l3")  # 3 "Connection closed" rows
    wider = '{application="openssh", hostname="LabSZ"} |= "closed"'
    record = evaluate_tuple(stores[tup.application], tup, wider)
    assert record.exec_ok
    assert record.log_recall == 1.0
    assert record.log_precision == 1.0  # same rows: "closed" only appears there
    narrower = '{application="openssh", hostname="LabSZ"} |= "Connection closed by 212"'
    record = evaluate_tuple(stores[tup.application], tup, narrower)
    assert record.log_recall < 1.0


def test_broken_reference_is_dataset_error(stores, tuples):
    tup = tuples[0]
    bad = type(tup)(**{**tup.__dict__, "reference_query": '{application="openssh"} |= "x" [$w]'})
    with pytest.raises(DatasetError):
        evaluate_tuple(stores[tup.application], bad, "{}")


# --- evaluate_run ------------------------------------------------------------


def test_echo_run_is_all_ones(stores, tuples):
    run = evaluate_run(stores, tuples, echo_generator)
    m = run.metrics
    assert m.n_tuples == 18
    assert m.metric_accuracy == 1.0
    assert m.log_f1 == 1.0 and m.log_precision == 1.0 and m.log_recall == 1.0
    assert m.exact_match_rate == 1.0
    assert m.executability_rate == 1.0
    assert m.perplexity is None


def test_always_empty_selector_generator(stores, tuples):
    run = evaluate_run(stores, tuples, lambda t: GenerationResponse(raw_text="{}"))
    m = run.metrics
    assert m.executability_rate == 0.0
    assert m.metric_accuracy == 0.0
    assert m.log_f1 == 0.0
    assert m.exact_match_rate == 0.0


def test_one_broken_in_ten_executability(stores, tuples):
    subset = sorted(tuples, key=lambda t: t.id)[:10]
    mapping = {t.id: t.reference_query for t in subset}
    broken_id = subset[3].id
    mapping[broken_id] = 'count_over_time({application="x"} |= "y" [30d]'  # unbalanced
    run = evaluate_run(stores, subset, canned_generator(mapping))
    assert run.metrics.executability_rate == pytest.approx(0.9)
    broken_record = next(r for r in run.records if r.tuple_id == broken_id)
    assert broken_record.exec_ok is False
    if broken_record.query_type == "METRIC":
        assert broken_record.metric_correct is False
    else:
        assert broken_record.log_f1 == 0.0


def test_generator_exception_recorded_not_raised(stores, tuples):
    def flaky(tup):
        if tup.id.endswith("m1"):
            raise RuntimeError("boom")
        return GenerationResponse(raw_text=tup.reference_query)

    run = evaluate_run(stores, tuples, flaky)
    failed = [r for r in run.records if r.error and "generator failed" in r.error]
    assert len(failed) == 3
    assert run.metrics.executability_rate == pytest.approx(15 / 18)


def test_run_permutation_invariant(stores, tuples):
    rng = random.Random(2)
    shuffled = tuples[:]
    rng.shuffle(shuffled)
    a = evaluate_run(stores, tuples, echo_generator).metrics
    b = evaluate_run(stores, shuffled, echo_generator).metrics
    assert a == b


def test_run_parallel_matches_serial(stores, tuples):
    serial = evaluate_run(stores, tuples, echo_generator, parallelism=1)
    parallel = evaluate_run(stores, tuples, echo_generator, parallelism=6)
    assert serial.metrics == parallel.metrics
    assert [r.tuple_id for r in serial.records] == [r.tuple_id for r in parallel.records]


def test_perplexity_pools_logprobs(stores, tuples):
    import math

    def with_lp(tup):
        return GenerationResponse(raw_text=tup.reference_query, token_logprobs=[-0.5, -1.5])

    run = evaluate_run(stores, tuples, with_lp)
    assert run.metrics.perplexity == pytest.approx(math.exp(1.0))


# --- comparison and reports ---------------------------------------------------


def test_compare_runs_delta(stores, tuples):
    echo = evaluate_run(stores, tuples, echo_generator).metrics
    mapping = json.loads((FIXTURES / "canned_broken.json").read_text(encoding="utf-8"))
    broken = evaluate_run(stores, tuples, canned_generator(mapping)).metrics
    comparison = compare_runs(broken, echo)
    deltas = comparison.deltas()
    assert deltas["openssh/METRIC"]["delta"] == pytest.approx(1 / 3)
    assert comparison.before.executability_rate == pytest.approx(16 / 18)


def test_compare_runs_rejects_mismatched_sets(stores, tuples):
    echo = evaluate_run(stores, tuples, echo_generator).metrics
    partial = evaluate_run(stores, tuples[:12], echo_generator).metrics
    with pytest.raises(ValueError):
        compare_runs(echo, partial)


def test_compare_example_delta_shape():
    def fake(mq_ssh):
        return EvalMetrics(
            n_tuples=10,
            metric_accuracy=mq_ssh,
            log_precision=None,
            log_recall=None,
            log_f1=None,
            exact_match_rate=0.0,
            executability_rate=1.0,
            perplexity=None,
            n_per_bucket={"openssh/METRIC": 10},
            bucket_scores={"openssh/METRIC": mq_ssh},
        )

    comparison = compare_runs(fake(0.21), fake(0.74))
    d = comparison.deltas()["openssh/METRIC"]
    assert d["delta"] == pytest.approx(0.53)
    assert d["relative"] == pytest.approx(0.53 / 0.21)


def test_zero_deltas_on_identical_runs(stores, tuples):
    echo = evaluate_run(stores, tuples, echo_generator).metrics
    for d in compare_runs(echo, echo).deltas().values():
        assert d["delta"] == 0.0


def test_report_matches_golden(stores, tuples):
    echo = evaluate_run(stores, tuples, echo_generator).metrics
    assert render_report(echo, "markdown") == (FIXTURES / "golden/report_metrics.md").read_text(
        encoding="utf-8"
    )
    mapping = json.loads((FIXTURES / "canned_broken.json").read_text(encoding="utf-8"))
    broken = evaluate_run(stores, tuples, canned_generator(mapping)).metrics
    comparison = compare_runs(broken, echo)
    assert render_report(comparison, "markdown") == (
        FIXTURES / "golden/report_comparison.md"
    ).read_text(encoding="utf-8")


def test_metrics_json_round_trip(stores, tuples):
    metrics = evaluate_run(stores, tuples, echo_generator).metrics
    rendered = render_report(metrics, "json")
    assert EvalMetrics.from_json(json.loads(rendered)) == metrics


def test_empty_run_report():
    metrics = aggregate([])
    text = render_report(metrics, "markdown")
    assert text.startswith("| Application ")
    assert "tuples: 0" in text
