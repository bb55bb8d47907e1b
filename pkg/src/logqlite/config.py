"""Run configuration shared by the eval command and the HTTP service."""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .engine import DEFAULT_LIMIT, DEFAULT_LOOKBACK, EvalContext
from .ingest import CorpusManifest, ingest
from .logql.ast import Duration
from .store import LogStore
from .timefmt import ns_from_rfc3339

_DURATION_RE = re.compile(r"(\d+)(ms|s|m|h|d|w)")


class ConfigError(Exception):
    pass


def parse_duration(text: str) -> Duration:
    m = _DURATION_RE.fullmatch(text.strip())
    if m is None:
        raise ConfigError(f"not a duration: {text!r} (use forms like 30m, 12h, 7d)")
    return Duration(int(m.group(1)), m.group(2))


@dataclass
class RunConfig:
    corpora: dict[str, Path]
    dataset: Path | None
    endpoints: Path | None
    output_dir: Path
    now: int | None  # ns; None means "each corpus anchor"
    limit: int = DEFAULT_LIMIT
    lookback: Duration = DEFAULT_LOOKBACK
    seed: int = 0
    parallelism: int = 1
    record_latency: bool = False
    feedback_path: Path | None = None
    ui_dir: Path | None = None
    raw_bytes: bytes = field(default=b"", repr=False)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        path = Path(path)
        try:
            raw = path.read_bytes()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON: {exc}") from exc
        base = path.parent
        corpora = {
            name: base / corpus_path
            for name, corpus_path in data.get("corpora", {}).items()
        }
        if not corpora:
            raise ConfigError(f"{path}: config lists no corpora")
        for name, corpus_path in corpora.items():
            if not corpus_path.exists():
                raise ConfigError(f"{path}: corpus {name!r} file missing: {corpus_path}")
        dataset = base / data["dataset"] if data.get("dataset") else None
        if dataset is not None and not dataset.exists():
            raise ConfigError(f"{path}: dataset file missing: {dataset}")
        endpoints = base / data["endpoints"] if data.get("endpoints") else None
        if endpoints is not None and not endpoints.exists():
            raise ConfigError(f"{path}: endpoints file missing: {endpoints}")
        return cls(
            corpora=corpora,
            dataset=dataset,
            endpoints=endpoints,
            output_dir=base / data.get("output_dir", "runs"),
            now=ns_from_rfc3339(data["now"]) if data.get("now") else None,
            limit=int(data.get("limit", DEFAULT_LIMIT)),
            lookback=parse_duration(data.get("lookback", "7d")),
            seed=int(data.get("seed", 0)),
            parallelism=int(data.get("parallelism", 1)),
            record_latency=bool(data.get("record_latency", False)),
            feedback_path=base / data["feedback_path"] if data.get("feedback_path") else None,
            ui_dir=base / data["ui_dir"] if data.get("ui_dir") else None,
            raw_bytes=raw,
        )

    def config_hash(self) -> str:
        digest = hashlib.sha256(self.raw_bytes + f":{self.seed}".encode()).hexdigest()
        return digest[:10]

    def context_for(self, store: LogStore) -> EvalContext:
        return EvalContext(
            now=self.now if self.now is not None else store.anchor_ns,
            limit=self.limit,
            lookback=self.lookback,
        )


def load_corpus(path: Path) -> LogStore:
    """A corpus is either a serialized .store file or a manifest to ingest."""
    if path.suffix == ".store":
        return LogStore.load(path)
    store, _report = ingest(CorpusManifest.load(path))
    return store


def load_stores(config: RunConfig) -> dict[str, LogStore]:
    return {name: load_corpus(path) for name, path in sorted(config.corpora.items())}
