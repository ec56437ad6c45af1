"""Chat-completion gateway: real provider, deterministic mock, recording.

Purpose tags carry the temperature contract: simulation runs at 1.0 for
behavioral diversity, annotation and refinement run deterministically at
0.0, unless a request overrides the temperature explicitly.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from uxprobe.errors import (
    GatewayError,
    ProviderPayloadError,
    TranscriptError,
    TransportError,
)

ROLES = ("system", "user", "assistant")
TAGS = ("simulation", "annotation", "refinement")

DEFAULT_TEMPERATURES = {
    "simulation": 1.0,
    "annotation": 0.0,
    "refinement": 0.0,
}

MAX_ATTEMPTS = 3
BACKOFF_BASE_SECONDS = 0.5


@dataclass(frozen=True)
class ChatMessage:
    role: str
    text: str


@dataclass
class ChatRequest:
    messages: list[ChatMessage]
    tag: str
    temperature: float | None = None  # None -> tag default

    def __post_init__(self) -> None:
        if not self.messages:
            raise GatewayError("chat request needs at least one message")
        for message in self.messages:
            if message.role not in ROLES:
                raise GatewayError(f"unknown message role {message.role!r}")
        if self.tag not in TAGS:
            raise GatewayError(f"unknown request tag {self.tag!r}")
        if self.temperature is not None and not 0.0 <= self.temperature <= 2.0:
            raise GatewayError(f"temperature {self.temperature} outside [0, 2]")

    @property
    def effective_temperature(self) -> float:
        if self.temperature is not None:
            return self.temperature
        return DEFAULT_TEMPERATURES[self.tag]

    @property
    def last_user_text(self) -> str:
        for message in reversed(self.messages):
            if message.role == "user":
                return message.text
        return ""


@dataclass
class ChatResponse:
    text: str
    provider_meta: dict = field(default_factory=dict)


class Gateway:
    """Uniform chat-completion interface."""

    def complete(self, request: ChatRequest) -> ChatResponse:
        raise NotImplementedError


class TokenBucket:
    """Simple blocking token-bucket rate limiter (requests per second)."""

    def __init__(self, rate: float, capacity: float | None = None) -> None:
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.rate = rate
        self.capacity = capacity if capacity is not None else rate
        self._tokens = self.capacity
        self._last = time.monotonic()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = time.monotonic()
                self._tokens = min(self.capacity, self._tokens + (now - self._last) * self.rate)
                self._last = now
                if self._tokens >= 1.0:
                    self._tokens -= 1.0
                    return
                wait = (1.0 - self._tokens) / self.rate
            time.sleep(wait)


@dataclass
class TranscriptEntry:
    """One scripted response.

    ``match`` is a substring of the last user message ("*" matches any).
    ``once`` entries are consumed by their first match; reusable entries
    keep the mock referentially transparent for repeated equal requests.
    """

    match: str
    response: str
    once: bool = False
    consumed: bool = False


def load_transcript(path: str | Path) -> list[TranscriptEntry]:
    """Load a scripted transcript file (JSON array of entries).

    Entry schema: {"match": str, "response": str} with optional
    "once": bool and "response_json": object (serialized into response).
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise GatewayError("transcript file must hold a JSON array")
    entries = []
    for i, raw in enumerate(data, start=1):
        if not isinstance(raw, dict) or "match" not in raw:
            raise GatewayError(f"transcript entry #{i} needs a 'match' key")
        if "response_json" in raw:
            response = json.dumps(raw["response_json"])
        elif "response" in raw:
            response = str(raw["response"])
        else:
            raise GatewayError(f"transcript entry #{i} needs 'response' or 'response_json'")
        entries.append(
            TranscriptEntry(
                match=str(raw["match"]),
                response=response,
                once=bool(raw.get("once", False)),
            )
        )
    return entries


class MockGateway(Gateway):
    """Deterministic in-process provider.

    Without a transcript, the response is a pure digest of the request, so
    equal requests always produce equal responses. With a transcript, each
    call scans entries in order and returns the first whose matcher matches
    the last user message; entries marked once are consumed. No matching
    entry left means the script is exhausted: hard error.
    """

    def __init__(
        self,
        transcript: list[TranscriptEntry] | None = None,
        seed: int = 0,
    ) -> None:
        self.transcript = transcript
        self.seed = seed
        self.calls: list[ChatRequest] = []
        self._lock = threading.Lock()

    def complete(self, request: ChatRequest) -> ChatResponse:
        with self._lock:
            self.calls.append(request)
            if self.transcript is None:
                return self._digest_response(request)
            return self._scripted_response(request)

    def _digest_response(self, request: ChatRequest) -> ChatResponse:
        payload = json.dumps(
            {
                "seed": self.seed,
                "temperature": request.effective_temperature,
                "messages": [[m.role, m.text] for m in request.messages],
            },
            sort_keys=True,
        )
        digest = hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]
        return ChatResponse(
            text=f"mock-completion:{digest}",
            provider_meta={"model": "mock", "digest": digest},
        )

    def _scripted_response(self, request: ChatRequest) -> ChatResponse:
        last_user = request.last_user_text
        for index, entry in enumerate(self.transcript or []):
            if entry.consumed:
                continue
            if entry.match == "*" or entry.match in last_user:
                if entry.once:
                    entry.consumed = True
                return ChatResponse(
                    text=entry.response,
                    provider_meta={"model": "mock", "transcript_index": index},
                )
        excerpt = last_user[:160].replace("\n", " ")
        raise TranscriptError(f"scripted transcript exhausted; no entry matches: {excerpt!r}")


class HttpChatGateway(Gateway):
    """Provider speaking the chat-completions HTTP schema.

    Credentials and endpoint come from the environment:
    UXPROBE_LLM_API_KEY / OPENAI_API_KEY, UXPROBE_LLM_BASE_URL,
    UXPROBE_LLM_MODEL. Transport failures and 429/5xx responses retry with
    exponential backoff; anything else malformed is a hard error.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        rate_limiter: TokenBucket | None = None,
        timeout: float = 60.0,
        client: httpx.Client | None = None,
    ) -> None:
        self.base_url = (
            base_url
            or os.environ.get("UXPROBE_LLM_BASE_URL")
            or "https://api.openai.com/v1"
        ).rstrip("/")
        self.api_key = (
            api_key
            or os.environ.get("UXPROBE_LLM_API_KEY")
            or os.environ.get("OPENAI_API_KEY")
            or ""
        )
        self.model = model or os.environ.get("UXPROBE_LLM_MODEL", "gpt-5")
        self.rate_limiter = rate_limiter
        self._client = client or httpx.Client(timeout=timeout)

    def complete(self, request: ChatRequest) -> ChatResponse:
        if self.rate_limiter is not None:
            self.rate_limiter.acquire()
        body = {
            "model": self.model,
            "messages": [{"role": m.role, "content": m.text} for m in request.messages],
            "temperature": request.effective_temperature,
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Exception | None = None
        for attempt in range(MAX_ATTEMPTS):
            try:
                response = self._client.post(
                    f"{self.base_url}/chat/completions", json=body, headers=headers
                )
            except httpx.HTTPError as exc:
                last_error = exc
                self._sleep(attempt)
                continue
            if response.status_code == 429 or response.status_code >= 500:
                last_error = TransportError(f"provider returned {response.status_code}")
                self._sleep(attempt)
                continue
            if response.status_code != 200:
                raise ProviderPayloadError(
                    f"provider returned {response.status_code}: {response.text[:200]}"
                )
            return self._parse_payload(response)
        raise TransportError(f"provider unreachable after {MAX_ATTEMPTS} attempts: {last_error}")

    @staticmethod
    def _sleep(attempt: int) -> None:
        if attempt < MAX_ATTEMPTS - 1:
            time.sleep(BACKOFF_BASE_SECONDS * (2**attempt))

    @staticmethod
    def _parse_payload(response: httpx.Response) -> ChatResponse:
        try:
            payload = response.json()
            choice = payload["choices"][0]
            text = choice["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderPayloadError(f"malformed provider payload: {exc}") from exc
        refused = text is None
        meta = {
            "model": payload.get("model"),
            "usage": payload.get("usage", {}),
            "finish_reason": choice.get("finish_reason"),
        }
        if refused:
            meta["refusal"] = True
        return ChatResponse(text=text or "", provider_meta=meta)


class RecordingGateway(Gateway):
    """Wraps a gateway and records every exchange for provenance.

    The recorder receives one dict per call with the full prompt text and
    the response, suitable for appending to a run's event log.
    """

    def __init__(self, inner: Gateway, recorder) -> None:
        self.inner = inner
        self.recorder = recorder

    def complete(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.complete(request)
        self.recorder(
            {
                "type": "llm_call",
                "tag": request.tag,
                "temperature": request.effective_temperature,
                "messages": [{"role": m.role, "text": m.text} for m in request.messages],
                "response": response.text,
                "meta": response.provider_meta,
            }
        )
        return response


def build_gateway(
    provider: str,
    transcript_path: str | Path | None = None,
    seed: int = 0,
    rate_limit: float | None = None,
) -> Gateway:
    """Construct a gateway from CLI-level settings (--llm, --transcript)."""
    if provider == "mock":
        transcript = load_transcript(transcript_path) if transcript_path else None
        return MockGateway(transcript=transcript, seed=seed)
    if provider == "openai":
        limiter = TokenBucket(rate_limit) if rate_limit else None
        return HttpChatGateway(rate_limiter=limiter)
    raise GatewayError(f"unknown provider {provider!r} (expected 'mock' or 'openai')")
