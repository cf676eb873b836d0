"""Uniform completion interface over interchangeable backends.

Three backends share the ``complete(request) -> (text, stats)`` contract:
a scripted rule-based stand-in, a transcript replayer, and a remote HTTP
chat-completions client. The scripted and replay backends are fully
deterministic, which is what the evaluation harness runs against.
"""

from __future__ import annotations

import hashlib
import json
import re
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path


class TransportError(Exception):
    """Remote backend failed to produce a response."""

    def __init__(self, message: str, backend: str = "remote"):
        super().__init__(message)
        self.backend = backend


class ReplayError(Exception):
    """Replay transcript exhausted or diverged from the live request."""


@dataclass(frozen=True)
class ChatRequest:
    user_text: str
    system_text: str = ""
    max_tokens: int = 512
    temperature: float = 0.0
    stop: tuple[str, ...] = ()
    backend_tag: str = ""

    def __post_init__(self):
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if not self.user_text:
            raise ValueError("user_text must be non-empty")


@dataclass(frozen=True)
class GenerationStats:
    output_tokens: int
    wall_latency: float

    @property
    def tokens_per_second(self) -> float:
        if self.wall_latency <= 0:
            return 0.0
        return self.output_tokens / self.wall_latency


@dataclass(frozen=True)
class StatsSummary:
    tokens_per_second_mean: float
    latency_mean: float
    latency_std: float


def count_tokens(text: str) -> int:
    """Whitespace token count, used for stats on non-remote backends."""
    return len(text.split())


def request_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


def stats_summary(runs: list[GenerationStats]) -> StatsSummary:
    """Mean tokens/s plus mean and population standard deviation of latency."""
    if len(runs) < 2:
        raise ValueError("need at least 2 runs to summarize")
    latencies = [run.wall_latency for run in runs]
    return StatsSummary(
        tokens_per_second_mean=statistics.fmean(run.tokens_per_second for run in runs),
        latency_mean=statistics.fmean(latencies),
        latency_std=statistics.pstdev(latencies),
    )


@dataclass(frozen=True)
class ScriptedRule:
    """First matching rule wins; `pattern` rules use regex search."""

    matcher: str
    response: str
    is_pattern: bool = False

    def matches(self, prompt: str) -> bool:
        if self.is_pattern:
            return re.search(self.matcher, prompt, re.IGNORECASE) is not None
        return self.matcher.lower() in prompt.lower()


class ScriptedBackend:
    """Deterministic rule lookup over the full prompt text.

    ``fixed_latency`` substitutes a synthetic wall latency into the stats
    (useful for reproducible throughput numbers); otherwise the measured
    wall time is reported.
    """

    name = "scripted"

    def __init__(self, rules=(), default_response: str = "a) Continue behavior",
                 fixed_latency: float | None = None):
        self.rules = tuple(rules)
        self.default_response = default_response
        self.fixed_latency = fixed_latency

    def complete(self, request: ChatRequest) -> tuple[str, GenerationStats]:
        started = time.perf_counter()
        prompt = request.system_text + "\n" + request.user_text
        text = self.default_response
        for rule in self.rules:
            if rule.matches(prompt):
                text = rule.response
                break
        latency = self.fixed_latency if self.fixed_latency is not None else time.perf_counter() - started
        return text, GenerationStats(output_tokens=count_tokens(text), wall_latency=latency)


class ReplayBackend:
    """Replays recorded turns strictly in order.

    A turn with a ``request_hash`` is verified against the live prompt;
    turns without one replay unconditionally. Exhaustion raises.
    """

    name = "replay"

    def __init__(self, turns: list[dict], fixed_latency: float | None = None):
        self.turns = list(turns)
        self.cursor = 0
        self.fixed_latency = fixed_latency

    @classmethod
    def from_jsonl(cls, path) -> "ReplayBackend":
        turns = []
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            line = line.strip()
            if line:
                turns.append(json.loads(line))
        return cls(turns)

    def complete(self, request: ChatRequest) -> tuple[str, GenerationStats]:
        started = time.perf_counter()
        if self.cursor >= len(self.turns):
            raise ReplayError(f"replay exhausted: no turn {self.cursor} recorded")
        turn = self.turns[self.cursor]
        recorded = turn.get("request_hash")
        if recorded:
            live = request_hash(request.user_text)
            if recorded != live:
                raise ReplayError(
                    f"replay diverged at turn {self.cursor}: recorded {recorded}, live {live}"
                )
        self.cursor += 1
        text = turn["response"]
        latency = self.fixed_latency if self.fixed_latency is not None else time.perf_counter() - started
        return text, GenerationStats(output_tokens=count_tokens(text), wall_latency=latency)


class RemoteBackend:
    """HTTP JSON chat-completions client (one retry, enforced timeout)."""

    name = "remote"

    def __init__(self, url: str, model: str, api_key: str = "", timeout: float = 30.0):
        self.url = url
        self.model = model
        self.api_key = api_key
        self.timeout = timeout

    def complete(self, request: ChatRequest) -> tuple[str, GenerationStats]:
        import httpx

        messages = []
        if request.system_text:
            messages.append({"role": "system", "content": request.system_text})
        messages.append({"role": "user", "content": request.user_text})
        payload = {
            "model": self.model,
            "messages": messages,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
        }
        if request.stop:
            payload["stop"] = list(request.stop)
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"

        last_error: Exception | None = None
        started = time.perf_counter()
        for _ in range(2):  # one retry
            try:
                response = httpx.post(self.url, json=payload, headers=headers, timeout=self.timeout)
                response.raise_for_status()
                body = response.json()
                text = body["choices"][0]["message"]["content"]
                latency = time.perf_counter() - started
                usage = body.get("usage") or {}
                tokens = usage.get("completion_tokens", count_tokens(text))
                return text, GenerationStats(output_tokens=int(tokens), wall_latency=latency)
            except Exception as exc:  # noqa: BLE001 - normalized below
                last_error = exc
        raise TransportError(f"remote completion failed: {last_error}", backend=self.name)


ENV_URL = "LANGDRIVE_LLM_URL"
ENV_MODEL = "LANGDRIVE_LLM_MODEL"
ENV_KEY = "LANGDRIVE_LLM_KEY"


def backend_from_config(config: dict, default_rules=()) -> object:
    """Build a backend from a config mapping; environment variables override
    the remote credentials."""
    import os

    kind = config.get("kind", "scripted")
    if kind == "scripted":
        rules = list(default_rules) + [
            ScriptedRule(rule["matcher"], rule["response"], rule.get("is_pattern", False))
            for rule in config.get("rules", [])
        ]
        return ScriptedBackend(
            rules=rules,
            default_response=config.get("default_response", "a) Continue behavior"),
            fixed_latency=config.get("fixed_latency"),
        )
    if kind == "replay":
        return ReplayBackend.from_jsonl(config["transcript"])
    if kind == "remote":
        url = os.environ.get(ENV_URL, config.get("url", ""))
        model = os.environ.get(ENV_MODEL, config.get("model", ""))
        key = os.environ.get(ENV_KEY, config.get("key", ""))
        if not url or not model:
            raise ValueError("remote backend needs a url and model (config or env)")
        return RemoteBackend(url=url, model=model, api_key=key, timeout=config.get("timeout", 30.0))
    raise ValueError(f"unknown backend kind {kind!r}")
