"""Result comparison: the execution-accuracy rules.

Metric results match when label sets are identical and each value pair is
equal after rounding to two decimals, half away from zero.  Log results are
scored by precision/recall/F1 over the multiset of (timestamp, line) rows;
ordering and labels are ignored — results are timestamp-sorted anyway, and
format/extraction stages legitimately add labels.
"""

from __future__ import annotations

from collections import Counter
from decimal import ROUND_HALF_UP, Decimal

from ..engine import LogResult, MetricResult
from ..store import labels_key


def round2(value: float) -> Decimal:
    """Two decimals, ties away from zero: 3.145 -> 3.15, -3.145 -> -3.15."""
    return Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)


def compare_metric_result(expected: MetricResult, got: MetricResult) -> bool:
    want = {labels_key(s.labels): s.value for s in expected.samples}
    have = {labels_key(s.labels): s.value for s in got.samples}
    if want.keys() != have.keys():
        return False
    return all(round2(want[k]) == round2(have[k]) for k in want)


def score_log_result(
    expected: LogResult, got: LogResult
) -> tuple[float, float, float]:
    """(precision, recall, f1); both-empty is a correct empty answer: (1,1,1)."""
    want = Counter((r.ts, r.line) for r in expected.rows)
    have = Counter((r.ts, r.line) for r in got.rows)
    if not want and not have:
        return (1.0, 1.0, 1.0)
    if not want or not have:
        return (0.0, 0.0, 0.0)
    tp = sum((want & have).values())
    precision = tp / sum(have.values())
    recall = tp / sum(want.values())
    f1 = 0.0 if tp == 0 else 2 * precision * recall / (precision + recall)
    return (precision, recall, f1)
