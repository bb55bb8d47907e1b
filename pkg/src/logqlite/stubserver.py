"""Offline chat-completions stub for tests and demos.

Speaks just enough of the wire contract the gateway uses: POST
/chat/completions with {model, messages}.  The reply is chosen by scanning
the prompt for a configured NL-question substring; unmatched prompts get the
fallback.  Optional knobs simulate flaky transports (fail the first N calls
with a 500) and constant token logprobs, so retry and perplexity paths are
testable without a network.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path


@dataclass
class StubBehavior:
    replies: dict[str, str] = field(default_factory=dict)  # NL substring -> query
    fallback: str = '{app="unknown"}'
    wrap_in_fence: bool = True
    fail_first: int = 0
    logprob: float | None = None

    @classmethod
    def load(cls, path: str | Path) -> "StubBehavior":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(
            replies=dict(data.get("replies", {})),
            fallback=data.get("fallback", '{app="unknown"}'),
            wrap_in_fence=data.get("wrap_in_fence", True),
            fail_first=data.get("fail_first", 0),
            logprob=data.get("logprob"),
        )


class _Handler(BaseHTTPRequestHandler):
    behavior: StubBehavior
    state: dict

    def log_message(self, *args) -> None:  # keep test output clean
        pass

    def do_POST(self) -> None:
        if not self.path.endswith("/chat/completions"):
            self.send_error(404)
            return
        length = int(self.headers.get("content-length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        with self.state["lock"]:
            self.state["calls"] += 1
            if self.state["fail_remaining"] > 0:
                self.state["fail_remaining"] -= 1
                self.send_error(500, "stub transient failure")
                return
        prompt = ""
        for message in body.get("messages", []):
            prompt += message.get("content", "")
        query = self.behavior.fallback
        for needle, reply in self.behavior.replies.items():
            if needle in prompt:
                query = reply
                break
        text = f"```logql\n{query}\n```" if self.behavior.wrap_in_fence else query
        choice: dict = {"message": {"role": "assistant", "content": text}}
        if body.get("logprobs") and self.behavior.logprob is not None:
            choice["logprobs"] = {
                "content": [
                    {"token": tok, "logprob": self.behavior.logprob}
                    for tok in text.split()
                ]
            }
        payload = {"model": body.get("model", "stub"), "choices": [choice]}
        raw = json.dumps(payload).encode("utf-8")
        self.send_response(200)
        self.send_header("content-type", "application/json")
        self.send_header("content-length", str(len(raw)))
        self.end_headers()
        self.wfile.write(raw)


class StubLLMServer:
    """Threaded stub endpoint; use as a context manager in tests."""

    def __init__(self, behavior: StubBehavior | None = None, port: int = 0):
        self.behavior = behavior or StubBehavior()
        handler = type(
            "BoundHandler",
            (_Handler,),
            {
                "behavior": self.behavior,
                "state": {
                    "lock": threading.Lock(),
                    "calls": 0,
                    "fail_remaining": self.behavior.fail_first,
                },
            },
        )
        self._handler = handler
        self.server = ThreadingHTTPServer(("127.0.0.1", port), handler)
        self.port = self.server.server_address[1]
        self._thread = threading.Thread(target=self.server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        return f"http://127.0.0.1:{self.port}"

    @property
    def calls(self) -> int:
        return self._handler.state["calls"]

    def __enter__(self) -> "StubLLMServer":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self.server.shutdown()
        self.server.server_close()


def serve_forever(behavior: StubBehavior, port: int) -> None:
    with StubLLMServer(behavior, port=port) as server:
        print(f"stub LLM endpoint listening on {server.base_url}")
        threading.Event().wait()
