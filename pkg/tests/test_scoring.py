import random

import pytest

from logqlite.engine import LogResult, LogRow, MetricResult, Sample
from logqlite.harness import compare_metric_result, round2, score_log_result


def metric(*pairs):
    return MetricResult([Sample(dict(labels), value) for labels, value in pairs])


def logres(*rows):
    return LogResult([LogRow(ts, {}, line) for ts, line in rows])


# --- 2-decimal rule ----------------------------------------------------------


@pytest.mark.parametrize(
    "a,b,equal",
    [
        (39700.0, 39700.0, True),
        (3.141, 3.144, True),   # both round to 3.14
        (3.144, 3.146, False),  # 3.14 vs 3.15
        (3.145, 3.15, True),    # half rounds away from zero
        (-3.145, -3.15, True),
        (-3.144, -3.146, False),
        (1.0, 1.001, True),
        (0.005, 0.004, False),  # 0.01 vs 0.00
    ],
)
def test_two_decimal_rule(a, b, equal):
    assert compare_metric_result(metric(({}, a)), metric(({}, b))) is equal


def test_round2_half_away_from_zero():
    assert str(round2(2.675)) == "2.68"  # repr-based, not binary-float floor
    assert str(round2(-2.675)) == "-2.68"
    assert str(round2(1.005)) == "1.01"


def test_empty_vs_empty_metric():
    assert compare_metric_result(metric(), metric()) is True
    assert compare_metric_result(metric(), metric(({}, 0.0))) is False


def test_label_set_mismatch():
    assert compare_metric_result(metric(({"a": "1"}, 1.0)), metric(({"b": "1"}, 1.0))) is False
    assert compare_metric_result(
        metric(({"a": "1"}, 1.0)), metric(({"a": "1"}, 1.0), ({"b": "2"}, 1.0))
    ) is False


def test_metric_compare_symmetric_reflexive():
    rng = random.Random(4)
    results = [
        metric(*[({"k": str(i)}, rng.uniform(-5, 5)) for i in range(rng.randint(0, 3))])
        for _ in range(40)
    ]
    for r in results:
        assert compare_metric_result(r, r)
    for a in results:
        for b in results:
            assert compare_metric_result(a, b) == compare_metric_result(b, a)


# --- log F1 ------------------------------------------------------------------


def test_f1_worked_example():
    expected = logres((1, "a"), (2, "b"), (3, "c"), (4, "d"))
    got = logres((1, "a"), (2, "b"), (9, "zz"))
    p, r, f1 = score_log_result(expected, got)
    assert abs(p - 2 / 3) < 1e-12
    assert abs(r - 1 / 2) < 1e-12
    assert abs(f1 - 4 / 7) < 1e-12


def test_f1_identity_and_disjoint():
    rows = logres((1, "a"), (2, "b"))
    assert score_log_result(rows, rows) == (1.0, 1.0, 1.0)
    assert score_log_result(rows, logres((5, "x"))) == (0.0, 0.0, 0.0)
    assert score_log_result(logres(), logres()) == (1.0, 1.0, 1.0)
    assert score_log_result(rows, logres()) == (0.0, 0.0, 0.0)
    assert score_log_result(logres(), rows) == (0.0, 0.0, 0.0)


def test_f1_multiset_semantics():
    expected = logres((1, "dup"), (1, "dup"))
    got = logres((1, "dup"))
    p, r, _ = score_log_result(expected, got)
    assert p == 1.0 and r == 0.5


def test_f1_ignores_order_and_labels():
    expected = LogResult([LogRow(1, {"x": "1"}, "a"), LogRow(2, {}, "b")])
    got = LogResult([LogRow(2, {"y": "2"}, "b"), LogRow(1, {}, "a")])
    assert score_log_result(expected, got) == (1.0, 1.0, 1.0)


def test_score_monotonicity():
    rng = random.Random(9)
    for _ in range(50):
        expected = logres(*[(i, f"line{i}") for i in range(rng.randint(1, 6))])
        got_rows = [(i, f"line{i}") for i in range(rng.randint(0, 4))]
        base = score_log_result(expected, logres(*got_rows))
        correct_added = score_log_result(expected, logres(*got_rows, (0, "line0")))
        assert correct_added[1] >= base[1]  # recall never drops
        wrong_added = score_log_result(expected, logres(*got_rows, (99, "junk")))
        assert wrong_added[0] <= base[0]  # precision never rises
