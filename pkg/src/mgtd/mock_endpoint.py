"""In-process chat-completion stand-in for offline tests and demos.

Serves the same wire shape the rephrase module speaks: POST JSON
{model, messages, temperature} answered with {"choices": [{"message":
{"content": ...}}]}.  Behavior is a pluggable responder function, so a
test can echo the source text, return canned strings, or inject
429/401 failures without any network access.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Callable, Tuple

# responder: request payload -> (http status, completion text)
Responder = Callable[[dict], Tuple[int, str]]

SOURCE_OPEN = "<<<"
SOURCE_CLOSE = ">>>"


def prompt_of(payload: dict) -> str:
    messages = payload.get("messages") or []
    return messages[0].get("content", "") if messages else ""


def extract_source(prompt: str) -> str:
    """Pull the quoted source text out of a mimic prompt, if present."""
    start = prompt.find(SOURCE_OPEN)
    end = prompt.rfind(SOURCE_CLOSE)
    if start == -1 or end == -1 or end <= start:
        return prompt
    return prompt[start + len(SOURCE_OPEN):end].strip()


def echo_source() -> Responder:
    """Answer with the human text embedded in the prompt (overlap 1.0)."""

    def respond(payload: dict) -> Tuple[int, str]:
        return 200, extract_source(prompt_of(payload))

    return respond


def fixed(text: str) -> Responder:
    def respond(payload: dict) -> Tuple[int, str]:
        return 200, text

    return respond


def partial_echo(keep: int, filler: str = "zq") -> Responder:
    """Echo the first `keep` source tokens, padding with filler tokens.

    Lets a test dial the overlap ratio: with a known source vocabulary
    the ratio is keep / |vocab| (filler chosen to stay disjoint).
    """

    def respond(payload: dict) -> Tuple[int, str]:
        words = extract_source(prompt_of(payload)).split()
        kept = words[:keep]
        return 200, " ".join(kept + [filler] * max(1, len(words) - len(kept)))

    return respond


def unauthorized() -> Responder:
    def respond(payload: dict) -> Tuple[int, str]:
        return 401, "missing or invalid key"

    return respond


def rate_limited_then(n: int, inner: Responder) -> Responder:
    """Return 429 for the first n calls, then delegate to `inner`."""
    state = {"remaining": n}
    lock = threading.Lock()

    def respond(payload: dict) -> Tuple[int, str]:
        with lock:
            if state["remaining"] > 0:
                state["remaining"] -= 1
                return 429, "slow down"
        return inner(payload)

    return respond


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw.decode("utf-8"))
        except ValueError:
            payload = {}
        status, content = self.server.respond(payload)
        if status == 200:
            body = {"choices": [{"message": {"role": "assistant", "content": content}}]}
        else:
            body = {"error": {"message": content, "code": status}}
        data = json.dumps(body).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, fmt, *args):
        pass


class _Server(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, responder: Responder):
        super().__init__(("127.0.0.1", 0), _Handler)
        self.responder = responder
        self.calls = 0
        self._lock = threading.Lock()

    def respond(self, payload: dict) -> Tuple[int, str]:
        with self._lock:
            self.calls += 1
        return self.responder(payload)


class MockEndpoint:
    """Context manager running the stand-in server on an ephemeral port."""

    def __init__(self, responder: Responder):
        self._server = _Server(responder)
        self._thread = threading.Thread(
            target=self._server.serve_forever, daemon=True
        )

    @property
    def url(self) -> str:
        host, port = self._server.server_address[:2]
        return f"http://{host}:{port}/v1/chat/completions"

    @property
    def calls(self) -> int:
        return self._server.calls

    def __enter__(self) -> "MockEndpoint":
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)
