"""Run candidates against reference queries and aggregate the metrics.

Execution accuracy compares what the candidate query returns against what
the reference query returns on the same store; a candidate that fails to
parse, validate, or execute scores zero on its type metric and counts
against executability.  The tuple's stored expected_output is a dataset
cross-check (reference_matches_expected), not the scoring target.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

from ..engine import (
    EvalContext,
    LogResult,
    MetricResult,
    QueryResult,
    execute_ast,
    result_to_json,
)
from ..gateway import GenerationResponse, extract_query
from ..logql import QueryError, ast_equal, parse, validate
from ..store import LogStore
from .dataset import BenchmarkTuple, DatasetError
from .scoring import compare_metric_result, score_log_result


@dataclass
class CandidateRecord:
    tuple_id: str
    application: str
    query_type: str
    generated_text: str
    extracted_query: str
    parse_ok: bool = False
    validate_ok: bool = False
    exec_ok: bool = False
    result: QueryResult | None = None
    latency_ms: float = 0.0
    logprobs: list[float] | None = None
    error: str | None = None
    exact_match: bool = False
    metric_correct: bool | None = None  # METRIC tuples only
    log_precision: float | None = None  # LOG tuples only
    log_recall: float | None = None
    log_f1: float | None = None
    reference_matches_expected: bool = True

    def to_json(self, include_latency: bool = False) -> dict:
        data = asdict(self)
        data["result"] = result_to_json(self.result) if self.result is not None else None
        if not include_latency:
            del data["latency_ms"]
        return data


@dataclass
class EvalMetrics:
    n_tuples: int
    metric_accuracy: float | None
    log_precision: float | None
    log_recall: float | None
    log_f1: float | None
    exact_match_rate: float
    executability_rate: float
    perplexity: float | None
    n_per_bucket: dict[str, int]
    bucket_scores: dict[str, float]  # "app/METRIC" -> accuracy, "app/LOG" -> mean F1

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "EvalMetrics":
        return cls(**data)


def _ctx_for(store: LogStore, ctx: EvalContext | None) -> EvalContext:
    if ctx is not None:
        return ctx
    # Default evaluation instant: the corpus anchor (its newest entry).
    return EvalContext(now=store.anchor_ns)


def evaluate_tuple(
    store: LogStore,
    tup: BenchmarkTuple,
    candidate_text: str,
    ctx: EvalContext | None = None,
    *,
    latency_ms: float = 0.0,
    logprobs: list[float] | None = None,
) -> CandidateRecord:
    ctx = _ctx_for(store, ctx)
    try:
        reference_ast = parse(tup.reference_query, tup.vars)
        reference_result = execute_ast(store, reference_ast, ctx)
    except QueryError as exc:
        raise DatasetError(f"tuple {tup.id}: reference query failed: {exc}") from exc

    record = CandidateRecord(
        tuple_id=tup.id,
        application=tup.application,
        query_type=tup.query_type,
        generated_text=candidate_text,
        extracted_query=extract_query(candidate_text),
        latency_ms=latency_ms,
        logprobs=logprobs,
        reference_matches_expected=_results_agree(tup.expected_output, reference_result),
    )
    if tup.query_type == "METRIC":
        record.metric_correct = False
    else:
        record.log_precision = record.log_recall = record.log_f1 = 0.0

    try:
        candidate_ast = parse(record.extracted_query, tup.vars)
        record.parse_ok = True
    except QueryError as exc:
        record.error = str(exc)
        return record
    record.exact_match = ast_equal(candidate_ast, reference_ast)
    diagnostics = validate(candidate_ast)
    if diagnostics:
        record.error = "; ".join(str(d) for d in diagnostics)
        return record
    record.validate_ok = True
    try:
        record.result = execute_ast(store, candidate_ast, ctx)
        record.exec_ok = True
    except QueryError as exc:  # pragma: no cover - validate gates execution
        record.error = str(exc)
        return record

    if isinstance(record.result, MetricResult):
        record.metric_correct = compare_metric_result(reference_result, record.result)
    else:
        p, r, f1 = score_log_result(reference_result, record.result)
        record.log_precision, record.log_recall, record.log_f1 = p, r, f1
    return record


def _results_agree(expected: QueryResult, got: QueryResult) -> bool:
    if isinstance(expected, MetricResult) and isinstance(got, MetricResult):
        return compare_metric_result(expected, got)
    if isinstance(expected, LogResult) and isinstance(got, LogResult):
        return score_log_result(expected, got) == (1.0, 1.0, 1.0)
    return False


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def aggregate(records: list[CandidateRecord]) -> EvalMetrics:
    metric_flags = [r.metric_correct for r in records if r.query_type == "METRIC"]
    log_records = [r for r in records if r.query_type == "LOG"]
    all_logprobs = [lp for r in records if r.logprobs for lp in r.logprobs]

    n_per_bucket: dict[str, int] = {}
    bucket_values: dict[str, list[float]] = {}
    for r in records:
        bucket = f"{r.application}/{r.query_type}"
        n_per_bucket[bucket] = n_per_bucket.get(bucket, 0) + 1
        value = float(r.metric_correct) if r.query_type == "METRIC" else (r.log_f1 or 0.0)
        bucket_values.setdefault(bucket, []).append(value)

    return EvalMetrics(
        n_tuples=len(records),
        metric_accuracy=_mean([float(f) for f in metric_flags]),
        log_precision=_mean([r.log_precision or 0.0 for r in log_records]),
        log_recall=_mean([r.log_recall or 0.0 for r in log_records]),
        log_f1=_mean([r.log_f1 or 0.0 for r in log_records]),
        exact_match_rate=_mean([float(r.exact_match) for r in records]) or 0.0,
        executability_rate=_mean([float(r.exec_ok) for r in records]) or 0.0,
        perplexity=math.exp(-_mean(all_logprobs)) if all_logprobs else None,
        n_per_bucket=dict(sorted(n_per_bucket.items())),
        bucket_scores={k: _mean(v) or 0.0 for k, v in sorted(bucket_values.items())},
    )


@dataclass
class RunResult:
    metrics: EvalMetrics
    records: list[CandidateRecord] = field(default_factory=list)


def evaluate_run(
    stores: dict[str, LogStore],
    tuples: list[BenchmarkTuple],
    generator,
    ctx: EvalContext | None = None,
    parallelism: int = 1,
) -> RunResult:
    """Generate and score every tuple; generator failures never abort the run."""

    def one(tup: BenchmarkTuple) -> CandidateRecord:
        store = stores.get(tup.application)
        if store is None:
            raise DatasetError(f"tuple {tup.id}: no corpus named {tup.application!r}")
        try:
            response = generator(tup)
        except Exception as exc:  # deliberate blanket: record, don't crash the run
            record = CandidateRecord(
                tuple_id=tup.id,
                application=tup.application,
                query_type=tup.query_type,
                generated_text="",
                extracted_query="",
                error=f"generator failed: {exc}",
            )
            if tup.query_type == "METRIC":
                record.metric_correct = False
            else:
                record.log_precision = record.log_recall = record.log_f1 = 0.0
            return record
        if isinstance(response, str):
            response = GenerationResponse(raw_text=response)
        return evaluate_tuple(
            store,
            tup,
            response.raw_text,
            ctx,
            latency_ms=response.latency_ms,
            logprobs=response.token_logprobs,
        )

    if parallelism > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            records = list(pool.map(one, tuples))
    else:
        records = [one(t) for t in tuples]
    return RunResult(aggregate(records), records)


@dataclass
class RunComparison:
    before: EvalMetrics
    after: EvalMetrics

    def __post_init__(self) -> None:
        if self.before.n_per_bucket != self.after.n_per_bucket:
            raise ValueError(
                "runs cover different tuple sets: "
                f"{self.before.n_per_bucket} vs {self.after.n_per_bucket}"
            )

    def deltas(self) -> dict[str, dict[str, float | None]]:
        out: dict[str, dict[str, float | None]] = {}
        for bucket, before_score in self.before.bucket_scores.items():
            after_score = self.after.bucket_scores[bucket]
            delta = after_score - before_score
            relative = delta / before_score if before_score else None
            out[bucket] = {"before": before_score, "after": after_score, "delta": delta, "relative": relative}
        return out


def compare_runs(before: EvalMetrics, after: EvalMetrics) -> RunComparison:
    return RunComparison(before, after)
