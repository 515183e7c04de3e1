"""Chat-completion transport with retries and record/replay cassettes.

Three modes share one interface, :meth:`ChatTransport.complete`:

``live``
    POST to an OpenAI-compatible ``/chat/completions`` endpoint.
``record``
    Like live, and every exchange is appended to a cassette.
``replay``
    Answer from a cassette in order.  No client is created and no socket is
    opened, so replay works with networking disabled.

Configuration is read from the environment:

* ``CORPUSGEN_API_KEY``   bearer token (required for live/record)
* ``CORPUSGEN_API_BASE``  endpoint root, default ``https://api.openai.com/v1``
* ``CORPUSGEN_MODEL``     model name, default ``gpt-4``

Cassettes are line-delimited JSON: a header record followed by one record
per exchange.
"""

from __future__ import annotations

import copy
import hashlib
import json
import logging
import os
import re
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, List, Optional

import httpx

from .errors import CassetteDrift, CassetteExhausted, ProviderUnavailable

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-4"
CASSETTE_VERSION = 1

RETRIES = 3
BACKOFF_BASE = 1.0
BACKOFF_FACTOR = 2.0
TIMEOUT_SECONDS = 60.0


@dataclass(frozen=True)
class ChatRequest:
    model: str
    system: str
    user: str
    temperature: float = 0.0
    max_tokens: int = 1024

    @property
    def fingerprint(self) -> str:
        payload = json.dumps(
            {
                "model": self.model,
                "system": self.system,
                "user": self.user,
                "temperature": float(self.temperature),
            },
            sort_keys=True,
            ensure_ascii=False,
            separators=(",", ":"),
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def body(self) -> dict:
        return {
            "model": self.model,
            "messages": [
                {"role": "system", "content": self.system},
                {"role": "user", "content": self.user},
            ],
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        }


@dataclass
class CassetteEntry:
    fingerprint: str
    response: str
    latency_ms: float
    request: Optional[dict] = None

    def to_json(self) -> dict:
        data = {"type": "entry", "fingerprint": self.fingerprint,
                "response": self.response, "latency_ms": self.latency_ms}
        if self.request is not None:
            data["request"] = self.request
        return data


@dataclass
class Cassette:
    entries: List[CassetteEntry] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def append(self, entry: CassetteEntry) -> None:
        self.entries.append(entry)

    def total_latency_seconds(self) -> float:
        return sum(e.latency_ms for e in self.entries) / 1000.0

    def dumps(self) -> str:
        header = {"type": "header", "version": CASSETTE_VERSION, **self.metadata}
        rows = [header] + [e.to_json() for e in self.entries]
        return "".join(json.dumps(r, sort_keys=True, ensure_ascii=False) + "\n" for r in rows)

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def loads(cls, text: str) -> "Cassette":
        cassette = cls()
        for n, raw in enumerate(text.splitlines(), start=1):
            if not raw.strip():
                continue
            row = json.loads(raw)
            kind = row.pop("type", None)
            if kind == "header":
                version = row.pop("version", None)
                if version != CASSETTE_VERSION:
                    raise ValueError(f"unsupported cassette version {version!r}")
                cassette.metadata = row
            elif kind == "entry":
                cassette.entries.append(CassetteEntry(
                    row["fingerprint"], row["response"], float(row["latency_ms"]),
                    row.get("request")))
            else:
                raise ValueError(f"cassette line {n}: unknown record type {kind!r}")
        return cassette

    @classmethod
    def load(cls, path) -> "Cassette":
        return cls.loads(Path(path).read_text(encoding="utf-8"))


_SECRET_KEYS = {"authorization", "api_key", "api-key", "headers", "x-api-key"}
_SECRET_PATTERNS = [
    re.compile(r"sk-[A-Za-z0-9_\-]{8,}"),
    re.compile(r"(?i)bearer\s+[A-Za-z0-9_\-\.]{8,}"),
]


def _scrub(value):
    if isinstance(value, dict):
        return {k: _scrub(v) for k, v in value.items() if k.lower() not in _SECRET_KEYS}
    if isinstance(value, list):
        return [_scrub(v) for v in value]
    if isinstance(value, str):
        for pat in _SECRET_PATTERNS:
            value = pat.sub("[REDACTED]", value)
        return value
    return value


def redact(cassette: Cassette) -> Cassette:
    """Copy of ``cassette`` with headers and key-like strings removed.

    Fingerprints and responses are left untouched so replay still matches.
    """
    out = Cassette(metadata=_scrub(copy.deepcopy(cassette.metadata)))
    for e in cassette.entries:
        request = _scrub(copy.deepcopy(e.request)) if e.request is not None else None
        out.append(CassetteEntry(e.fingerprint, e.response, e.latency_ms, request))
    return out


class SimulatedClock:
    """Monotonic clock that only moves when told to."""

    def __init__(self, start: float = 0.0):
        self.now = start

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        self.now += seconds


class ChatTransport:
    def __init__(
        self,
        mode: str = "live",
        *,
        cassette: Optional[Cassette] = None,
        cassette_path=None,
        api_key: Optional[str] = None,
        base_url: str = DEFAULT_BASE_URL,
        retries: int = RETRIES,
        backoff_base: float = BACKOFF_BASE,
        backoff_factor: float = BACKOFF_FACTOR,
        timeout: float = TIMEOUT_SECONDS,
        sleep: Callable[[float], None] = time.sleep,
        http_transport: Optional[httpx.BaseTransport] = None,
        clock: Optional[SimulatedClock] = None,
    ):
        if mode not in ("live", "record", "replay"):
            raise ValueError(f"unknown transport mode {mode!r}")
        if mode == "replay" and cassette is None:
            if cassette_path is None:
                raise ValueError("replay needs a cassette")
            cassette = Cassette.load(cassette_path)
        if mode == "record" and cassette is None:
            cassette = Cassette(metadata={
                "recorded_at": datetime.now(timezone.utc).isoformat(timespec="seconds")})
        self.mode = mode
        self.cassette = cassette
        self.cassette_path = cassette_path
        self.api_key = api_key
        self.base_url = base_url.rstrip("/")
        self.retries = retries
        self.backoff_base = backoff_base
        self.backoff_factor = backoff_factor
        self.timeout = timeout
        self.sleep = sleep
        self.clock = clock
        self._http_transport = http_transport
        self._client: Optional[httpx.Client] = None
        self._cursor = 0
        self.calls = 0

    @classmethod
    def from_env(cls, mode: str = "live", **kwargs) -> "ChatTransport":
        kwargs.setdefault("api_key", os.environ.get("CORPUSGEN_API_KEY"))
        kwargs.setdefault("base_url", os.environ.get("CORPUSGEN_API_BASE", DEFAULT_BASE_URL))
        return cls(mode, **kwargs)

    @staticmethod
    def default_model() -> str:
        return os.environ.get("CORPUSGEN_MODEL", DEFAULT_MODEL)

    def complete(self, req: ChatRequest) -> str:
        self.calls += 1
        if self.mode == "replay":
            return self._replay(req)
        started = time.monotonic()
        text = self._post_with_retries(req)
        latency_ms = round((time.monotonic() - started) * 1000.0, 3)
        if self.mode == "record":
            self.cassette.metadata.setdefault("model", req.model)
            self.cassette.append(CassetteEntry(req.fingerprint, text, latency_ms, req.body()))
            if self.cassette_path is not None:
                self.cassette.save(self.cassette_path)
        return text

    def _replay(self, req: ChatRequest) -> str:
        if self._cursor >= len(self.cassette.entries):
            raise CassetteExhausted(f"cassette has only {len(self.cassette.entries)} entries")
        entry = self.cassette.entries[self._cursor]
        if entry.fingerprint != req.fingerprint:
            raise CassetteDrift(
                f"entry {self._cursor}: recorded {entry.fingerprint[:12]}, "
                f"requested {req.fingerprint[:12]}")
        self._cursor += 1
        if self.clock is not None:
            self.clock.advance(entry.latency_ms / 1000.0)
        return entry.response

    @property
    def remaining(self) -> int:
        if self.mode != "replay":
            raise ValueError("only replay transports have a finite supply")
        return len(self.cassette.entries) - self._cursor

    def _client_for(self) -> httpx.Client:
        if self._client is None:
            if not self.api_key:
                raise ProviderUnavailable("no API key configured (set CORPUSGEN_API_KEY)")
            self._client = httpx.Client(
                base_url=self.base_url,
                timeout=self.timeout,
                transport=self._http_transport,
                headers={"Authorization": f"Bearer {self.api_key}"},
            )
        return self._client

    def _post_with_retries(self, req: ChatRequest) -> str:
        client = self._client_for()
        last_error = "no attempt made"
        for attempt in range(self.retries + 1):
            if attempt:
                delay = self.backoff_base * self.backoff_factor ** (attempt - 1)
                log.warning("chat request failed (%s), retrying in %.1fs", last_error, delay)
                self.sleep(delay)
            try:
                resp = client.post("/chat/completions", json=req.body())
            except httpx.TransportError as exc:
                last_error = f"{type(exc).__name__}: {exc}"
                continue
            if resp.status_code == 429 or resp.status_code >= 500:
                last_error = f"HTTP {resp.status_code}"
                continue
            if resp.status_code >= 400:
                raise ProviderUnavailable(f"HTTP {resp.status_code}: {resp.text[:200]}")
            try:
                return resp.json()["choices"][0]["message"]["content"]
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ProviderUnavailable(f"malformed completion payload: {exc}") from exc
        raise ProviderUnavailable(f"gave up after {self.retries} retries: {last_error}")

    def close(self) -> None:
        if self._client is not None:
            self._client.close()
            self._client = None
