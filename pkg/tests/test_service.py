import json

import pytest
from fastapi.testclient import TestClient

from logqlite.config import RunConfig, parse_duration
from logqlite.service import create_app
from logqlite.stubserver import StubBehavior, StubLLMServer

from conftest import FIXTURES


@pytest.fixture()
def stub_servers():
    behavior = StubBehavior.load(FIXTURES / "stub_behavior.json")
    slow = StubBehavior(replies=dict(behavior.replies), fallback=behavior.fallback, logprob=None)
    with StubLLMServer(behavior) as a, StubLLMServer(slow) as b:
        yield a, b


@pytest.fixture()
def client(tmp_path, stub_servers):
    a, b = stub_servers
    endpoints = {
        "endpoints": [
            {"name": "stub-a", "base_url": a.base_url, "model": "stub-model-a", "timeout_s": 10},
            {"name": "stub-b", "base_url": b.base_url, "model": "stub-model-b", "timeout_s": 10},
        ]
    }
    (tmp_path / "endpoints.json").write_text(json.dumps(endpoints), encoding="utf-8")
    config = RunConfig(
        corpora={
            "openssh": FIXTURES / "corpora/sshmini/manifest.json",
            "openstack": FIXTURES / "corpora/stackmini/manifest.json",
            "hdfs": FIXTURES / "corpora/hdfsmini/manifest.json",
        },
        dataset=FIXTURES / "dataset.jsonl",
        endpoints=tmp_path / "endpoints.json",
        output_dir=tmp_path / "runs",
        now=None,
        lookback=parse_duration("7d"),
        feedback_path=tmp_path / "feedback.jsonl",
    )
    return TestClient(create_app(config))


def test_health(client):
    response = client.get("/api/health")
    assert response.status_code == 200
    assert response.json()["status"] == "ok"


def test_corpora_listing(client):
    body = client.get("/api/corpora").json()
    names = [c["name"] for c in body]
    assert names == ["hdfs", "openssh", "openstack"]
    ssh = next(c for c in body if c["name"] == "openssh")
    assert ssh["n_entries"] == 26
    assert "hostname" in ssh["labels"]
    assert ssh["anchor"] == "2025-01-02T03:04:05Z"


def test_models_listing(client):
    names = [m["name"] for m in client.get("/api/models").json()]
    assert names == ["stub-a", "stub-b"]


def test_query_endpoint_executes(client):
    response = client.post(
        "/api/query",
        json={
            "corpus": "openstack",
            "query": 'count_over_time({job="openstack"} |= "503" |= "token validation" [30d])',
        },
    )
    assert response.status_code == 200
    body = response.json()
    assert body["now"] == "2025-01-02T03:04:05Z"
    assert body["result"]["samples"][0]["value"] == 3.0


def test_query_endpoint_reports_diagnostics(client):
    response = client.post("/api/query", json={"corpus": "openssh", "query": "{}"})
    assert response.status_code == 400
    detail = response.json()["detail"]
    assert detail["diagnostics"][0]["code"] == "EMPTY_SELECTOR"
    assert detail["diagnostics"][0]["span"] == [0, 2]


def test_query_unknown_corpus_404(client):
    response = client.post("/api/query", json={"corpus": "nope", "query": '{a="1"}'})
    assert response.status_code == 404


def test_generate_fans_out_to_models(client):
    response = client.post(
        "/api/generate",
        json={
            "corpus": "openssh",
            "nl": "How many times did PAM ignore max retries in the last 24 hours for openssh-eu-west?",
            "models": ["stub-a", "stub-b"],
        },
    )
    assert response.status_code == 200
    results = response.json()["results"]
    assert [r["model"] for r in results] == ["stub-a", "stub-b"]
    for r in results:
        assert r["query"].startswith("sum(count_over_time(")
        assert r["latency_ms"] > 0
        assert r["error"] is None


def test_generate_unknown_model_404(client):
    response = client.post(
        "/api/generate", json={"corpus": "openssh", "nl": "q", "models": ["ghost"]}
    )
    assert response.status_code == 404


def test_execute_candidate_free_form(client):
    response = client.post(
        "/api/execute_candidate",
        json={"corpus": "openssh", "query": '{application="openssh"} |= "Accepted password"'},
    )
    body = response.json()
    assert body["error"] is None
    assert len(body["result"]["rows"]) == 3


def test_execute_candidate_reports_error_inline(client):
    response = client.post(
        "/api/execute_candidate",
        json={"corpus": "openssh", "query": 'count_over_time({application="openssh"})'},
    )
    body = response.json()
    assert response.status_code == 200
    assert body["result"] is None
    assert body["diagnostics"][0]["code"] == "MISSING_RANGE"


def test_execute_candidate_scores_against_tuple(client):
    tuples = [
        json.loads(line)
        for line in (FIXTURES / "dataset.jsonl").read_text(encoding="utf-8").splitlines()
    ]
    tup = next(t for t in tuples if t["id"] == "ssh-m1")
    response = client.post(
        "/api/execute_candidate",
        json={"corpus": "openssh", "query": tup["reference_query"], "tuple_id": "ssh-m1"},
    )
    body = response.json()
    assert body["score"]["exact_match"] is True
    assert body["score"]["metric_correct"] is True

    # ssh-l1's reference extracts labels but leaves lines untouched, so a
    # wider selector recalls every expected row at lower precision.
    response = client.post(
        "/api/execute_candidate",
        json={"corpus": "openssh", "query": '{application="openssh"}', "tuple_id": "ssh-l1"},
    )
    score = response.json()["score"]
    assert score["query_type"] == "LOG"
    assert score["log_recall"] == 1.0
    assert score["log_precision"] < 1.0


def test_feedback_appends_one_record(client, tmp_path):
    payload = {
        "nl": "how many errors?",
        "chosen_query": '{application="openssh"} |= "error"',
        "verdict": "up",
        "model": "stub-a",
    }
    assert client.post("/api/feedback", json=payload).status_code == 200
    assert client.post("/api/feedback", json={**payload, "verdict": "down"}).status_code == 200
    lines = (tmp_path / "feedback.jsonl").read_text(encoding="utf-8").splitlines()
    assert len(lines) == 2
    first = json.loads(lines[0])
    assert first["chosen_query"] == payload["chosen_query"]
    assert first["verdict"] == "up"


def test_feedback_rejects_bad_verdict(client):
    response = client.post(
        "/api/feedback", json={"nl": "q", "chosen_query": "{}", "verdict": "sideways"}
    )
    assert response.status_code == 400
