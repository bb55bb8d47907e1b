"""Benchmark tuples: loading, validation, and stratified splitting.

Dataset files are UTF-8 JSON Lines, one tuple per line (schema in
docs/formats.md).  Every reference query must parse and validate on load;
a dataset with a broken reference is a dataset bug, not a model failure.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from pathlib import Path

from ..engine import QueryResult, result_from_json
from ..logql import QuerySyntaxError, is_metric, parse, validate


class DatasetError(Exception):
    pass


@dataclass
class BenchmarkTuple:
    id: str
    application: str  # corpus key
    use_case: str
    query_type: str  # LOG | METRIC
    nl_question: str
    reference_query: str
    expected_output: QueryResult
    vars: dict[str, str] = field(default_factory=dict)


@dataclass
class SplitSpec:
    seed: int
    test_fraction: float = 0.2
    train_fractions: tuple[float, ...] = (0.2, 0.4, 0.6, 0.8)

    def __post_init__(self) -> None:
        for f in (self.test_fraction, *self.train_fractions):
            if not 0 < f < 1:
                raise ValueError(f"fraction {f} outside (0, 1)")


@dataclass
class DatasetSplit:
    test: list[BenchmarkTuple]
    train_subsets: dict[float, list[BenchmarkTuple]]


def _check_tuple(data: dict, lineno: int) -> BenchmarkTuple:
    def fail(message: str) -> DatasetError:
        ident = data.get("id", f"line {lineno}")
        return DatasetError(f"tuple {ident}: {message}")

    for key in ("id", "application", "query_type", "nl_question", "reference_query", "expected_output"):
        if key not in data:
            raise fail(f"missing field {key!r}")
    if data["query_type"] not in ("LOG", "METRIC"):
        raise fail(f"query_type must be LOG or METRIC, got {data['query_type']!r}")
    vars = dict(data.get("vars", {}))
    try:
        ast = parse(data["reference_query"], vars)
    except QuerySyntaxError as exc:
        raise fail(f"reference_query does not parse: {exc.diagnostic}") from exc
    diagnostics = validate(ast)
    if diagnostics:
        raise fail(f"reference_query is not executable: {diagnostics[0]}")
    metric = is_metric(ast)
    if metric != (data["query_type"] == "METRIC"):
        raise fail("query_type does not match the reference query's kind")
    try:
        expected = result_from_json(data["expected_output"])
    except (KeyError, TypeError, ValueError) as exc:
        raise fail(f"bad expected_output: {exc}") from exc
    expected_metric = data["expected_output"].get("type") == "metric"
    if expected_metric != metric:
        raise fail("expected_output type does not match query_type")
    return BenchmarkTuple(
        id=str(data["id"]),
        application=data["application"],
        use_case=data.get("use_case", ""),
        query_type=data["query_type"],
        nl_question=data["nl_question"],
        reference_query=data["reference_query"],
        expected_output=expected,
        vars=vars,
    )


def load_dataset(path: str | Path) -> list[BenchmarkTuple]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"cannot read dataset {path}: {exc}") from exc
    tuples: list[BenchmarkTuple] = []
    seen: set[str] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetError(f"{path}:{lineno}: not valid JSON: {exc}") from exc
        record = _check_tuple(data, lineno)
        if record.id in seen:
            raise DatasetError(f"duplicate tuple id {record.id!r}")
        seen.add(record.id)
        tuples.append(record)
    if not tuples:
        raise DatasetError(f"dataset {path} contains no tuples")
    return tuples


def split_dataset(tuples: list[BenchmarkTuple], spec: SplitSpec) -> DatasetSplit:
    """Per-application stratified split with nested train subsets.

    Deterministic under the seed; subsets for increasing fractions are
    prefixes of one shuffled pool, so 20% ⊂ 40% ⊂ 60% ⊂ 80%.
    """
    by_app: dict[str, list[BenchmarkTuple]] = {}
    for t in tuples:
        by_app.setdefault(t.application, []).append(t)

    test: list[BenchmarkTuple] = []
    train_subsets: dict[float, list[BenchmarkTuple]] = {f: [] for f in spec.train_fractions}
    for app in sorted(by_app):
        members = sorted(by_app[app], key=lambda t: t.id)
        if len(members) < 5:
            raise DatasetError(f"application {app!r} has {len(members)} tuples; need >= 5")
        rng = random.Random(f"{spec.seed}:{app}")
        rng.shuffle(members)
        n = len(members)
        n_test = math.floor(n * spec.test_fraction + 0.5)
        if n_test < 1 or n_test >= n:
            raise DatasetError(
                f"test fraction {spec.test_fraction} infeasible for {n} tuples in {app!r}"
            )
        test.extend(members[:n_test])
        pool = members[n_test:]
        for fraction in spec.train_fractions:
            k = math.floor(n * fraction + 0.5)
            if k > len(pool):
                raise DatasetError(
                    f"train fraction {fraction} needs {k} tuples but only "
                    f"{len(pool)} remain for {app!r}"
                )
            train_subsets[fraction].extend(pool[:k])
    return DatasetSplit(test, train_subsets)
