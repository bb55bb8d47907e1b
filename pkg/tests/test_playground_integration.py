"""Playground round trip: the exact request sequence the UI performs.

Panel state transitions (edit invalidating results, re-run replacing them)
are covered by the frontend's own vitest suite; this exercises the serving
side: static UI mount, generation fan-out to two stub endpoints with
server-reported latencies, candidate execution, and feedback capture.
Skips when frontend/dist has not been built.
"""

import json

import pytest
from fastapi.testclient import TestClient

from logqlite.config import RunConfig
from logqlite.service import create_app
from logqlite.stubserver import StubBehavior, StubLLMServer

from conftest import FIXTURES, ROOT

UI_DIR = ROOT / "frontend" / "dist"

pytestmark = pytest.mark.skipif(
    not (UI_DIR / "index.html").exists(), reason="frontend not built"
)


@pytest.fixture()
def playground(tmp_path):
    behavior = StubBehavior.load(FIXTURES / "stub_behavior.json")
    with StubLLMServer(behavior) as a, StubLLMServer(behavior) as b:
        endpoints = {
            "endpoints": [
                {"name": "stub-a", "base_url": a.base_url, "model": "m-a", "timeout_s": 10},
                {"name": "stub-b", "base_url": b.base_url, "model": "m-b", "timeout_s": 10},
            ]
        }
        (tmp_path / "endpoints.json").write_text(json.dumps(endpoints), encoding="utf-8")
        config = RunConfig(
            corpora={"openssh": FIXTURES / "corpora/sshmini/manifest.json"},
            dataset=FIXTURES / "dataset.jsonl",
            endpoints=tmp_path / "endpoints.json",
            output_dir=tmp_path / "runs",
            now=None,
            feedback_path=tmp_path / "feedback.jsonl",
            ui_dir=UI_DIR,
        )
        yield TestClient(create_app(config)), tmp_path


def test_ui_and_assets_served(playground):
    client, _ = playground
    page = client.get("/")
    assert page.status_code == 200
    assert "LogQL playground" in page.text
    assert client.get("/main.js").status_code == 200
    assert client.get("/style.css").status_code == 200


def test_full_playground_loop(playground):
    client, tmp_path = playground
    nl = "How many times did PAM ignore max retries in the last 24 hours for openssh-eu-west?"

    # Submit one question to two models: two panels, queries + server latency.
    generated = client.post(
        "/api/generate",
        json={"corpus": "openssh", "nl": nl, "models": ["stub-a", "stub-b"]},
    ).json()["results"]
    assert len(generated) == 2
    for result in generated:
        assert result["query"].startswith("sum(count_over_time(")
        assert result["latency_ms"] > 0
        assert result["error"] is None

    # Execute the first candidate against the engine, scored against its tuple.
    executed = client.post(
        "/api/execute_candidate",
        json={"corpus": "openssh", "query": generated[0]["query"], "tuple_id": "ssh-m1"},
    ).json()
    assert executed["result"]["samples"][0]["value"] == 4.0
    assert executed["score"]["metric_correct"] is True

    # Edit the query and re-run: a fresh (different) result replaces the old.
    edited = generated[0]["query"].replace("[24h]", "[1h]")
    rerun = client.post(
        "/api/execute_candidate",
        json={"corpus": "openssh", "query": edited, "tuple_id": "ssh-m1"},
    ).json()
    assert rerun["result"] != executed["result"]
    assert rerun["score"]["exact_match"] is False

    # Feedback appends exactly one record to the candidate file.
    response = client.post(
        "/api/feedback",
        json={"nl": nl, "chosen_query": edited, "verdict": "down", "model": "stub-a"},
    )
    assert response.status_code == 200
    lines = (tmp_path / "feedback.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 1
    assert json.loads(lines[0])["chosen_query"] == edited
