"""NL -> candidate-query generation via HTTP model endpoints.

One minimal chat-completions-style wire contract covers every provider the
harness talks to; endpoints are configured in a JSON file and authenticated
through environment variables only.  Offline generators (echo, canned) give
CI full determinism without any endpoint.
"""

from __future__ import annotations

import json
import os
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import httpx

DEFAULT_TIMEOUT_S = 30.0
DEFAULT_RETRIES = 2
MAX_SAMPLE_LINES = 20

CHEAT_SHEET = """\
LogQL in brief:
- Log query: {label="value", other=~"regex"} |= "substring" |~ "regex" != "excluded"
- Pipeline stages: | label_name="value" filters on labels; | regexp "(?P<name>...)"
  extracts labels from the line; | line_format "{{.label}}" rewrites the line;
  | unwrap label feeds numeric labels to an aggregation.
- Metric query: count_over_time(<log query> [30d]), rate(...), bytes_over_time(...),
  sum/avg/min/max_over_time need | unwrap. Wrap with sum/avg/min/max/count and
  optional `by (labels)` / `without (labels)`, or topk(k, ...) / bottomk(k, ...).
- Time ranges go in square brackets at the end of the inner log query: [5m], [12h], [7d].
Answer with exactly one LogQL query in a ```logql code fence and nothing else."""


class GatewayError(Exception):
    pass


@dataclass
class ModelEndpoint:
    name: str
    base_url: str
    model: str
    auth_env: str | None = None
    prompt_template: str = "default"
    timeout_s: float = DEFAULT_TIMEOUT_S
    max_parallel: int = 4
    logprobs: bool = False
    retries: int = DEFAULT_RETRIES

    def __post_init__(self) -> None:
        if self.timeout_s <= 0:
            raise ValueError("timeout must be positive")


@dataclass
class PromptContext:
    application: str
    label_values: dict[str, list[str]] = field(default_factory=dict)
    sample_lines: list[str] = field(default_factory=list)
    cheat_sheet: str = CHEAT_SHEET
    max_sample_lines: int = MAX_SAMPLE_LINES


@dataclass
class GenerationResponse:
    raw_text: str
    extracted_query: str | None = None
    latency_ms: float = 0.0
    token_logprobs: list[float] | None = None
    error: str | None = None


def load_endpoints(path: str | Path) -> dict[str, ModelEndpoint]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    endpoints: dict[str, ModelEndpoint] = {}
    for raw in data.get("endpoints", []):
        endpoint = ModelEndpoint(**raw)
        if endpoint.name in endpoints:
            raise GatewayError(f"duplicate endpoint name {endpoint.name!r}")
        endpoints[endpoint.name] = endpoint
    return endpoints


def build_prompt(nl: str, ctx: PromptContext) -> str:
    """Deterministic prompt: instructions, corpus schema, then the question."""
    if not nl.strip():
        raise ValueError("empty question")
    lines = [
        "You translate operations questions about application logs into LogQL queries.",
        "",
        ctx.cheat_sheet,
        "",
        f"Application: {ctx.application}",
        "Known labels and example values:",
    ]
    for name in sorted(ctx.label_values):
        values = ", ".join(ctx.label_values[name][:5])
        lines.append(f"- {name}: {values}")
    if not ctx.label_values:
        lines.append("- (none known)")
    samples = ctx.sample_lines[: ctx.max_sample_lines]
    lines.append("")
    lines.append(f"Sample log lines ({len(samples)}):")
    lines.extend(f"  {s}" for s in samples)
    lines.append("")
    lines.append(f"Question: {nl.strip()}")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# Query extraction from raw model output

_FENCE_RE = re.compile(r"```[a-zA-Z]*\n(.*?)```", re.DOTALL)
_START_RE = re.compile(
    r"(?:\b(?:count_over_time|rate|bytes_over_time|sum_over_time|avg_over_time|"
    r"min_over_time|max_over_time|sum|avg|min|max|count|topk|bottomk)\b\s*"
    r"(?:by|without)?\s*\()|\{"
)
_STRING = r'"(?:[^"\\]|\\.)*"'
# Pipeline stages and a trailing range — what may legally follow `{...}`.
_TAIL_RE = re.compile(
    r"(?:"
    rf"\s*(?:\|=|\|~|!=|!~)\s*{_STRING}"
    rf"|\s*\|\s*(?:regexp|line_format)\s*{_STRING}"
    r"|\s*\|\s*unwrap\s+[A-Za-z_][A-Za-z0-9_]*"
    rf"|\s*\|\s*[A-Za-z_][A-Za-z0-9_]*\s*(?:=~|!~|>=|<=|!=|=|>|<)\s*(?:{_STRING}|\d+(?:\.\d+)?)"
    r"|\s*\[\d+(?:ms|s|m|h|d|w)\]"
    r")*"
)
_NEXT_PAREN_RE = re.compile(r"\s*\(")


def extract_query(raw_text: str) -> str:
    """Pull the first LogQL-looking span out of prose or code fences.

    Never raises; if nothing query-like is found the trimmed text comes back
    and the harness decides executability downstream.
    """
    if not isinstance(raw_text, str):
        return ""
    fence = _FENCE_RE.search(raw_text)
    if fence:
        return fence.group(1).strip()
    m = _START_RE.search(raw_text)
    if not m:
        return raw_text.strip()
    start = m.start()
    before = raw_text[:start].rstrip()
    if before.endswith("("):
        # The span is an argument of some unrecognized call (e.g. a misspelled
        # aggregation); keep the whole text so the parser reports the real error.
        return raw_text.strip()
    log_mode = raw_text[start] == "{"
    i = start
    n = len(raw_text)
    depth = 0
    in_string = False
    end = n
    while i < n:
        ch = raw_text[i]
        if in_string:
            if ch == "\\":
                i += 2
                continue
            if ch == '"':
                in_string = False
            i += 1
            continue
        if ch == '"':
            in_string = True
            i += 1
            continue
        if ch in "([{":
            depth += 1
            i += 1
            continue
        if ch in ")]}":
            depth -= 1
            i += 1
            if depth < 0:
                end = i - 1
                break
            if depth == 0:
                if log_mode:
                    tail = _TAIL_RE.match(raw_text, i)
                    end = tail.end() if tail else i
                    break
                # Function form: `sum by (a) (...)` closes twice; keep going
                # while another argument list follows.
                nxt = _NEXT_PAREN_RE.match(raw_text, i)
                if nxt:
                    i = nxt.end()
                    depth = 1
                    continue
                end = i
                break
            continue
        i += 1
    return raw_text[start:end].strip()


# ---------------------------------------------------------------------------
# HTTP generation

Generator = Callable[..., GenerationResponse]


def generate(endpoint: ModelEndpoint, prompt: str) -> GenerationResponse:
    """Call one endpoint; transient failures retry, every outcome is a response."""
    headers = {"content-type": "application/json"}
    if endpoint.auth_env:
        token = os.environ.get(endpoint.auth_env)
        if not token:
            return GenerationResponse(
                raw_text="", error=f"auth env var {endpoint.auth_env} is not set"
            )
        headers["authorization"] = f"Bearer {token}"
    body = {
        "model": endpoint.model,
        "messages": [{"role": "user", "content": prompt}],
    }
    if endpoint.logprobs:
        body["logprobs"] = True
    url = endpoint.base_url.rstrip("/") + "/chat/completions"

    start = time.perf_counter()
    last_error = "unreachable"
    for attempt in range(endpoint.retries + 1):
        try:
            response = httpx.post(url, json=body, headers=headers, timeout=endpoint.timeout_s)
        except httpx.HTTPError as exc:
            last_error = f"transport error: {exc}"
            continue
        if response.status_code >= 500:
            last_error = f"server error {response.status_code}"
            continue
        latency_ms = (time.perf_counter() - start) * 1000.0
        if response.status_code != 200:
            return GenerationResponse(
                raw_text="",
                latency_ms=latency_ms,
                error=f"endpoint returned {response.status_code}",
            )
        try:
            payload = response.json()
            choice = payload["choices"][0]
            text = choice["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            return GenerationResponse(
                raw_text="",
                latency_ms=latency_ms,
                error=f"malformed response: {exc}",
            )
        logprobs = None
        lp = choice.get("logprobs")
        if isinstance(lp, dict) and isinstance(lp.get("content"), list):
            try:
                logprobs = [float(t["logprob"]) for t in lp["content"]]
            except (KeyError, TypeError, ValueError):
                logprobs = None
        return GenerationResponse(
            raw_text=text,
            extracted_query=extract_query(text),
            latency_ms=latency_ms,
            token_logprobs=logprobs,
        )
    return GenerationResponse(
        raw_text="",
        latency_ms=(time.perf_counter() - start) * 1000.0,
        error=last_error,
    )


# ---------------------------------------------------------------------------
# Offline generators (benchmark-tuple -> response)


def echo_generator(tup) -> GenerationResponse:
    """Upper-bound generator: answers with the reference query itself."""
    return GenerationResponse(raw_text=tup.reference_query)


def canned_generator(mapping: dict[str, str], fallback: str = "{}") -> Generator:
    """Deterministic generator answering from a tuple-id -> query mapping."""

    def gen(tup) -> GenerationResponse:
        return GenerationResponse(raw_text=mapping.get(tup.id, fallback))

    return gen


def endpoint_generator(
    endpoint: ModelEndpoint, prompt_context_for: Callable[[str], PromptContext]
) -> Generator:
    """Generator that prompts a live endpoint per tuple."""

    def gen(tup) -> GenerationResponse:
        prompt = build_prompt(tup.nl_question, prompt_context_for(tup.application))
        return generate(endpoint, prompt)

    return gen
