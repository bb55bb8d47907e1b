"""HTTP API behind the CLI `serve` command and the playground UI.

Stateless between requests apart from read-only stores loaded at startup.
Every query-shaped response carries the evaluation instant (`now`) that was
used, so clients can reproduce results exactly.
"""

from __future__ import annotations

import json
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from . import __version__
from .cli import prompt_context
from .config import RunConfig, load_stores
from .engine import EvalContext, execute, result_to_json
from .gateway import build_prompt, generate, load_endpoints
from .harness import evaluate_tuple, load_dataset
from .logql import QueryError
from .store import LogStore
from .timefmt import ns_from_rfc3339, now_ns, rfc3339_from_ns


class QueryRequest(BaseModel):
    corpus: str
    query: str
    vars: dict[str, str] = Field(default_factory=dict)
    now: str | None = None
    limit: int | None = None


class GenerateRequest(BaseModel):
    corpus: str
    nl: str
    models: list[str]


class ExecuteCandidateRequest(BaseModel):
    corpus: str
    query: str
    vars: dict[str, str] = Field(default_factory=dict)
    tuple_id: str | None = None


class FeedbackRequest(BaseModel):
    nl: str
    chosen_query: str
    verdict: str  # "up" | "down"
    corrected_query: str | None = None
    model: str | None = None


def create_app(config: RunConfig) -> FastAPI:
    app = FastAPI(title="logqlite", version=__version__)
    stores: dict[str, LogStore] = load_stores(config)
    endpoints = load_endpoints(config.endpoints) if config.endpoints else {}
    tuples_by_id = {}
    if config.dataset is not None:
        tuples_by_id = {t.id: t for t in load_dataset(config.dataset)}
    feedback_path = config.feedback_path or (config.output_dir / "feedback.jsonl")
    feedback_lock = threading.Lock()

    def store_for(name: str) -> LogStore:
        store = stores.get(name)
        if store is None:
            raise HTTPException(404, f"unknown corpus {name!r}; have {sorted(stores)}")
        return store

    def context_for(store: LogStore, now: str | None, limit: int | None) -> EvalContext:
        now_ns_value = ns_from_rfc3339(now) if now else (
            config.now if config.now is not None else store.anchor_ns
        )
        return EvalContext(
            now=now_ns_value,
            limit=limit or config.limit,
            lookback=config.lookback,
        )

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    @app.get("/api/corpora")
    def corpora() -> list[dict]:
        out = []
        for name in sorted(stores):
            store = stores[name]
            out.append(
                {
                    "name": name,
                    "application": store.application,
                    "n_streams": len(store.streams),
                    "n_entries": store.n_entries,
                    "anchor": rfc3339_from_ns(store.anchor_ns),
                    "labels": {
                        label: sorted(values)[:10]
                        for label, values in sorted(store.index.items())
                    },
                }
            )
        return out

    @app.get("/api/models")
    def models() -> list[dict]:
        return [
            {"name": e.name, "model": e.model, "base_url": e.base_url}
            for e in endpoints.values()
        ]

    @app.post("/api/query")
    def query(req: QueryRequest) -> dict:
        store = store_for(req.corpus)
        ctx = context_for(store, req.now, req.limit)
        try:
            result = execute(store, req.query, req.vars, ctx)
        except QueryError as exc:
            raise HTTPException(
                400,
                detail={
                    "error": "query rejected",
                    "diagnostics": [
                        {"code": d.code.value, "span": list(d.span), "message": d.message}
                        for d in exc.diagnostics
                    ],
                },
            )
        return {"now": rfc3339_from_ns(ctx.now), "result": result_to_json(result)}

    @app.post("/api/generate")
    def generate_candidates(req: GenerateRequest) -> dict:
        store = store_for(req.corpus)
        if not req.models:
            raise HTTPException(400, "no models requested")
        missing = [m for m in req.models if m not in endpoints]
        if missing:
            raise HTTPException(404, f"unknown models {missing}; have {sorted(endpoints)}")
        prompt = build_prompt(req.nl, prompt_context(store))

        def one(name: str) -> dict:
            response = generate(endpoints[name], prompt)
            return {
                "model": name,
                "raw_text": response.raw_text,
                "query": response.extracted_query or "",
                "latency_ms": response.latency_ms,
                "error": response.error,
            }

        with ThreadPoolExecutor(max_workers=max(len(req.models), 1)) as pool:
            results = list(pool.map(one, req.models))
        return {"corpus": req.corpus, "nl": req.nl, "results": results}

    @app.post("/api/execute_candidate")
    def execute_candidate(req: ExecuteCandidateRequest) -> dict:
        store = store_for(req.corpus)
        if req.tuple_id is not None:
            tup = tuples_by_id.get(req.tuple_id)
            if tup is None:
                raise HTTPException(404, f"unknown tuple id {req.tuple_id!r}")
            ctx = context_for(store, None, None)
            record = evaluate_tuple(store, tup, req.query, ctx)
            score: dict = {
                "query_type": tup.query_type,
                "parse_ok": record.parse_ok,
                "validate_ok": record.validate_ok,
                "exec_ok": record.exec_ok,
                "exact_match": record.exact_match,
            }
            if tup.query_type == "METRIC":
                score["metric_correct"] = record.metric_correct
            else:
                score["log_precision"] = record.log_precision
                score["log_recall"] = record.log_recall
                score["log_f1"] = record.log_f1
            return {
                "now": rfc3339_from_ns(ctx.now),
                "result": result_to_json(record.result) if record.result else None,
                "error": record.error,
                "score": score,
            }
        ctx = context_for(store, None, None)
        try:
            result = execute(store, req.query, req.vars, ctx)
        except QueryError as exc:
            return {
                "now": rfc3339_from_ns(ctx.now),
                "result": None,
                "error": str(exc),
                "diagnostics": [
                    {"code": d.code.value, "span": list(d.span), "message": d.message}
                    for d in exc.diagnostics
                ],
            }
        return {"now": rfc3339_from_ns(ctx.now), "result": result_to_json(result), "error": None}

    @app.post("/api/feedback")
    def feedback(req: FeedbackRequest) -> dict:
        if req.verdict not in ("up", "down"):
            raise HTTPException(400, "verdict must be 'up' or 'down'")
        record = {
            "ts": rfc3339_from_ns(now_ns()),
            "nl": req.nl,
            "chosen_query": req.chosen_query,
            "verdict": req.verdict,
            "corrected_query": req.corrected_query,
            "model": req.model,
        }
        with feedback_lock:
            feedback_path.parent.mkdir(parents=True, exist_ok=True)
            with feedback_path.open("a", encoding="utf-8") as fh:
                fh.write(json.dumps(record, sort_keys=True) + "\n")
        return {"ok": True}

    if config.ui_dir is not None and Path(config.ui_dir).is_dir():
        app.mount("/", StaticFiles(directory=config.ui_dir, html=True), name="ui")

    return app
