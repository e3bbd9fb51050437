"""Chat-completion access to the teacher model.

:class:`TeacherClient` owns retry, backoff and the in-flight cap. The wire is
delegated to a provider object with a single ``send(payload) -> (status, body)``
method: :class:`HttpProvider` talks to any OpenAI-compatible endpoint,
:class:`MockProvider` answers deterministically from a hash of the prompt, the
provider seed and the per-request ``seed`` field.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import threading
import time
from dataclasses import asdict, dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Optional

import httpx

from .errors import (
    AuthError,
    ConfigError,
    Exhausted,
    MalformedResponse,
    RetryableStatus,
    TeacherError,
    TeacherTimeout,
    TransportError,
)
from .prompts import RECOMMENDATION_PREFIX

log = logging.getLogger(__name__)

API_KEY_ENV = "ACTSEL_TEACHER_API_KEY"
PROVIDERS = ("mock", "http")


@dataclass
class TeacherConfig:
    provider: str = "http"
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4o"
    temperature: float = 0.8
    max_in_flight: int = 4
    max_attempts: int = 3
    backoff_base: float = 1.0
    jitter: float = 0.25
    timeout: float = 60.0

    def __post_init__(self):
        if self.provider not in PROVIDERS:
            raise ConfigError(f"teacher.provider must be one of {PROVIDERS}, got {self.provider!r}")
        if self.temperature < 0:
            raise ConfigError("teacher.temperature must be >= 0")
        if self.max_attempts < 1:
            raise ConfigError("teacher.max_attempts must be >= 1")
        if self.max_in_flight < 1:
            raise ConfigError("teacher.max_in_flight must be >= 1")

    @classmethod
    def from_dict(cls, d: Optional[dict]) -> "TeacherConfig":
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown teacher config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CompletionResult:
    text: str
    usage: dict = field(default_factory=dict)
    latency: float = 0.0
    attempts: int = 1


def chat_url(endpoint: str) -> str:
    endpoint = endpoint.rstrip("/")
    if endpoint.endswith("/chat/completions"):
        return endpoint
    return endpoint + "/chat/completions"


def build_payload(prompt: str, config: TeacherConfig, seed: Optional[int] = None) -> dict:
    payload = {
        "model": config.model,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": config.temperature,
        "n": 1,
    }
    if seed is not None:
        payload["seed"] = seed
    return payload


def _first_choice_text(body) -> str:
    try:
        text = body["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponse(f"no choices[0].message.content in response: {exc!r}") from exc
    if not isinstance(text, str):
        raise MalformedResponse("choices[0].message.content is not a string")
    return text


class HttpProvider:
    def __init__(self, endpoint: str, api_key: str, timeout: float = 60.0, transport=None):
        self.url = chat_url(endpoint)
        self._client = httpx.Client(
            timeout=timeout,
            headers={"Authorization": f"Bearer {api_key}", "Content-Type": "application/json"},
            transport=transport,
        )

    def send(self, payload: dict):
        try:
            resp = self._client.post(self.url, json=payload)
        except httpx.TimeoutException as exc:
            raise TeacherTimeout(str(exc)) from exc
        except httpx.TransportError as exc:
            raise TransportError(str(exc)) from exc
        if resp.status_code != 200:
            return resp.status_code, None
        try:
            return 200, resp.json()
        except ValueError as exc:
            raise MalformedResponse("response body is not JSON") from exc

    def close(self):
        self._client.close()


class TeacherClient:
    """Thread-safe completion client; at most ``max_in_flight`` requests are outstanding."""

    def __init__(self, config: TeacherConfig, provider, sleep=time.sleep, jitter_seed=None):
        self.config = config
        self.provider = provider
        self._sleep = sleep
        self._sem = threading.BoundedSemaphore(config.max_in_flight)
        self._lock = threading.Lock()
        self._jitter = random.Random(jitter_seed)
        self.stats = {"requests": 0, "completions": 0, "retries": 0, "failures": 0}

    def _count(self, key, n=1):
        with self._lock:
            self.stats[key] += n

    def _backoff(self, attempt: int) -> float:
        with self._lock:
            u = self._jitter.random()
        return self.config.backoff_base * 2 ** (attempt - 1) * (1.0 + self.config.jitter * u)

    def complete(self, prompt: str, seed: Optional[int] = None) -> CompletionResult:
        payload = build_payload(prompt, self.config, seed)
        last = None
        start = time.monotonic()
        for attempt in range(1, self.config.max_attempts + 1):
            self._count("requests")
            try:
                with self._sem:
                    status, body = self.provider.send(payload)
                if status in (401, 403):
                    self._count("failures")
                    raise AuthError(status)
                if status == 429 or status >= 500:
                    raise RetryableStatus(status)
                if status != 200:
                    self._count("failures")
                    raise TeacherError(f"HTTP {status} from teacher endpoint")
                text = _first_choice_text(body)
            except (RetryableStatus, TransportError) as exc:
                last = exc
                if attempt < self.config.max_attempts:
                    self._count("retries")
                    delay = self._backoff(attempt)
                    log.warning("teacher attempt %d failed (%s); retrying in %.2fs", attempt, exc, delay)
                    self._sleep(delay)
                continue
            except MalformedResponse:
                self._count("failures")
                raise
            self._count("completions")
            usage = (body.get("usage") if isinstance(body, dict) else None) or {}
            return CompletionResult(text, usage, time.monotonic() - start, attempt)
        self._count("failures")
        raise Exhausted(self.config.max_attempts, last)


# --- deterministic mock ------------------------------------------------------------

_OPENERS = (
    "Can you recommend",
    "I'm looking for",
    "Any suggestions for",
    "What would you suggest for",
    "I'd love to find",
    "Could you point me to",
)
_SUBJECTS = (
    "a slow-burning thriller",
    "a heartfelt drama",
    "a witty comedy",
    "an atmospheric horror film",
    "a sweeping adventure",
    "a clever mystery",
    "a gritty crime story",
    "a gentle family movie",
)
_QUALIFIERS = (
    "with great performances",
    "that doesn't drag in the middle",
    "with a twist I won't see coming",
    "that looks gorgeous on a big screen",
    "with a soundtrack that sticks with you",
    "that isn't too predictable",
    "with characters I actually care about",
)
_ADJECTIVES = (
    "Silent", "Crimson", "Hidden", "Broken", "Golden", "Electric", "Distant", "Frozen",
    "Wild", "Last", "Midnight", "Paper", "Iron", "Velvet", "Burning", "Hollow",
    "Lucky", "Secret", "Northern", "Falling", "Glass", "Quiet", "Savage", "Lonely",
)
_NOUNS = (
    "Harbor", "Empire", "Garden", "Horizon", "Machine", "Kingdom", "River", "Letter",
    "Station", "Orchard", "Signal", "Voyage", "Mirror", "Country", "Summer", "Witness",
    "Frontier", "Island", "Circus", "Promise", "Shadow", "Engine", "Canyon", "Lantern",
)


def _digest_seed(*parts) -> int:
    h = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(h[:8], "big")


def mock_completion_text(prompt: str, seed: int = 0, request_seed=None) -> str:
    """Deterministic stand-in for a teacher answer to ``prompt``."""
    rng = random.Random(_digest_seed(seed, request_seed, prompt))
    if prompt.startswith(RECOMMENDATION_PREFIX):
        combos = rng.sample(range(len(_ADJECTIVES) * len(_NOUNS)), 20)
        lines = []
        for rank, c in enumerate(combos, start=1):
            adj, noun = _ADJECTIVES[c // len(_NOUNS)], _NOUNS[c % len(_NOUNS)]
            lines.append(f"{rank}. The {adj} {noun} ({rng.randint(1950, 2023)})")
        return "\n".join(lines)
    return f"{rng.choice(_OPENERS)} {rng.choice(_SUBJECTS)} {rng.choice(_QUALIFIERS)}?"


def mock_response_body(payload: dict, seed: int = 0) -> dict:
    prompt = payload["messages"][-1]["content"]
    text = mock_completion_text(prompt, seed, payload.get("seed"))
    digest = hashlib.sha256(f"{seed}:{payload.get('seed')}:{prompt}".encode("utf-8")).hexdigest()[:24]
    return {
        "id": f"mock-{digest}",
        "object": "chat.completion",
        "model": payload.get("model", "mock"),
        "choices": [
            {"index": 0, "message": {"role": "assistant", "content": text}, "finish_reason": "stop"}
        ],
        "usage": {
            "prompt_tokens": len(prompt.split()),
            "completion_tokens": len(text.split()),
            "total_tokens": len(prompt.split()) + len(text.split()),
        },
    }


class MockProvider:
    """In-process deterministic provider, instrumented for concurrency checks."""

    def __init__(self, seed: int = 0, delay: float = 0.0):
        self.seed = seed
        self.delay = delay
        self.calls = 0
        self.in_flight = 0
        self.max_in_flight_seen = 0
        self._lock = threading.Lock()

    def send(self, payload: dict):
        with self._lock:
            self.calls += 1
            self.in_flight += 1
            self.max_in_flight_seen = max(self.max_in_flight_seen, self.in_flight)
        try:
            if self.delay:
                time.sleep(self.delay)
            return 200, mock_response_body(payload, self.seed)
        finally:
            with self._lock:
                self.in_flight -= 1


def build_teacher(config: TeacherConfig, seed: int = 0, env=None) -> TeacherClient:
    if config.provider == "mock":
        return TeacherClient(config, MockProvider(seed), jitter_seed=seed)
    env = os.environ if env is None else env
    key = env.get(API_KEY_ENV)
    if not key:
        raise ConfigError(
            f"teacher provider 'http' needs an API key: export {API_KEY_ENV}=... "
            "or use --teacher mock"
        )
    return TeacherClient(config, HttpProvider(config.endpoint, key, config.timeout), jitter_seed=seed)


# --- mock HTTP endpoint --------------------------------------------------------------


def _make_handler(seed: int):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self):
            if not self.path.rstrip("/").endswith("/chat/completions"):
                self._reply(404, {"error": {"message": f"unknown path {self.path}"}})
                return
            length = int(self.headers.get("Content-Length") or 0)
            try:
                payload = json.loads(self.rfile.read(length))
                body = mock_response_body(payload, seed)
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                self._reply(400, {"error": {"message": f"bad request: {exc}"}})
                return
            self._reply(200, body)

        def _reply(self, status, body):
            data = json.dumps(body).encode("utf-8")
            self.send_response(status)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(data)))
            self.end_headers()
            self.wfile.write(data)

        def log_message(self, fmt, *args):
            log.debug("mock-serve: " + fmt, *args)

    return Handler


def make_mock_server(host: str = "127.0.0.1", port: int = 0, seed: int = 0) -> ThreadingHTTPServer:
    """Return a bound (not yet serving) mock server; ``port=0`` picks a free port."""
    server = ThreadingHTTPServer((host, port), _make_handler(seed))
    server.daemon_threads = True
    return server


def start_mock_server(host: str = "127.0.0.1", port: int = 0, seed: int = 0):
    """Serve the mock in a background thread; returns ``(server, base_url)``."""
    server = make_mock_server(host, port, seed)
    threading.Thread(target=server.serve_forever, daemon=True).start()
    h, p = server.server_address[:2]
    return server, f"http://{h}:{p}/v1"
