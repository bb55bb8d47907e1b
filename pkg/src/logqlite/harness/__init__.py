"""Benchmark dataset handling, candidate scoring, and run aggregation."""

from .dataset import (
    BenchmarkTuple,
    DatasetError,
    DatasetSplit,
    SplitSpec,
    load_dataset,
    split_dataset,
)
from .report import render_report
from .runner import (
    CandidateRecord,
    EvalMetrics,
    RunComparison,
    RunResult,
    aggregate,
    compare_runs,
    evaluate_run,
    evaluate_tuple,
)
from .scoring import compare_metric_result, round2, score_log_result

__all__ = [
    "BenchmarkTuple",
    "CandidateRecord",
    "DatasetError",
    "DatasetSplit",
    "EvalMetrics",
    "RunComparison",
    "RunResult",
    "SplitSpec",
    "aggregate",
    "compare_metric_result",
    "compare_runs",
    "evaluate_run",
    "evaluate_tuple",
    "load_dataset",
    "render_report",
    "round2",
    "score_log_result",
    "split_dataset",
]
