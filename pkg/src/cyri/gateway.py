"""Chat-completion gateway over interchangeable model backends.

Two bindings: a live HTTP backend speaking the common chat-completions
JSON wire format against a configurable base URL, and a replay backend
that serves fixture files keyed by a sha256 hash of the prompt. The
gateway serializes requests per backend (a local model serves one stream
at a time) behind a bounded admission queue.

Privacy rule: prompt content is never logged above debug level.
"""

from __future__ import annotations

import hashlib
import logging
import os
import threading
import time
from dataclasses import dataclass

from .errors import (
    BackendUnreachable,
    FixtureMissing,
    GatewayError,
    Timeout,
    TruncatedOutput,
)

log = logging.getLogger(__name__)

#: Sampling defaults: analysis needs maximally stable structured output,
#: conversation tolerates slight variation.
ANALYSIS_TEMPERATURE = 0.0
CONVERSATION_TEMPERATURE = 0.2

DEFAULT_TIMEOUT_SECS = 120.0
DEFAULT_QUEUE_DEPTH = 8

#: Analysis reports are long-form; smaller budgets get cut off mid-report.
MIN_ANALYSIS_TOKENS = 256


def prompt_hash(prompt: str) -> str:
    """Stable fixture key: sha256 hex digest of the UTF-8 prompt bytes."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int
    temperature: float
    model_name: str
    request_id: str

    def __post_init__(self):
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    finished: bool  # False when the model hit the length cutoff
    latency_ms: int

    def __post_init__(self):
        if self.finished and not self.text:
            raise ValueError("finished result must carry text")


class ReplayBackend:
    """Serves {prompt_hash}.txt fixtures from a directory; fully offline."""

    def __init__(self, fixture_dir: str):
        self.fixture_dir = fixture_dir

    def complete(self, req: CompletionRequest) -> CompletionResult:
        path = os.path.join(self.fixture_dir, prompt_hash(req.prompt) + ".txt")
        started = time.monotonic()
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except FileNotFoundError:
            raise FixtureMissing(
                f"no fixture {prompt_hash(req.prompt)}.txt in {self.fixture_dir}"
            ) from None
        latency = int((time.monotonic() - started) * 1000)
        return CompletionResult(text=text, finished=True, latency_ms=latency)


class LiveBackend:
    """HTTP chat-completions backend (messages array, single user turn)."""

    def __init__(self, base_url: str, api_key: str = "",
                 timeout_secs: float = DEFAULT_TIMEOUT_SECS):
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout_secs = timeout_secs

    def request_body(self, req: CompletionRequest) -> dict:
        """The wire payload; split out so tests can pin its exact shape."""
        return {
            "model": req.model_name,
            "messages": [{"role": "user", "content": req.prompt}],
            "max_tokens": req.max_tokens,
            "temperature": req.temperature,
        }

    def complete(self, req: CompletionRequest) -> CompletionResult:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        started = time.monotonic()
        try:
            resp = requests.post(
                self.base_url + "/chat/completions",
                json=self.request_body(req),
                headers=headers,
                timeout=self.timeout_secs,
            )
        except requests.Timeout as exc:
            raise Timeout(f"backend exceeded {self.timeout_secs}s") from exc
        except requests.ConnectionError as exc:
            raise BackendUnreachable(str(exc)) from exc
        if resp.status_code != 200:
            raise BackendUnreachable(f"backend returned HTTP {resp.status_code}")
        latency = int((time.monotonic() - started) * 1000)
        try:
            choice = resp.json()["choices"][0]
            text = choice["message"]["content"]
            finish_reason = choice.get("finish_reason", "stop")
        except (KeyError, IndexError, ValueError) as exc:
            raise BackendUnreachable(f"malformed backend response: {exc}") from exc
        return CompletionResult(
            text=text,
            finished=finish_reason != "length",
            latency_ms=latency,
        )


class Gateway:
    """Serialized front door to one backend.

    Admission is bounded: at most queue_depth requests may be in flight
    or waiting; beyond that submissions are rejected rather than piling
    up behind a slow local model.
    """

    def __init__(self, backend, queue_depth: int = DEFAULT_QUEUE_DEPTH):
        self._backend = backend
        self._serial = threading.Lock()
        self._slots = threading.BoundedSemaphore(queue_depth)
        self._seen_ids: set[str] = set()
        self._seen_lock = threading.Lock()

    def complete(self, req: CompletionRequest) -> CompletionResult:
        with self._seen_lock:
            if req.request_id in self._seen_ids:
                log.debug("retry of request_id=%s", req.request_id)
            else:
                self._seen_ids.add(req.request_id)
        if not self._slots.acquire(blocking=False):
            raise GatewayError("request queue full")
        try:
            log.debug("submitting request_id=%s prompt_sha=%s len=%d",
                      req.request_id, prompt_hash(req.prompt), len(req.prompt))
            with self._serial:
                result = self._backend.complete(req)
        finally:
            self._slots.release()
        if not result.finished:
            raise TruncatedOutput(
                "model output hit the length cutoff", partial_text=result.text
            )
        return result
