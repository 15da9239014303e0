"""Generation and judge backends: OpenAI-compatible HTTP clients with
retry/backoff and an in-flight bound, plus deterministic scripted mocks.

Secret hygiene: configs carry only the NAME of the env var holding the
API key; the value is read at request time and never stored, logged, or
serialized.
"""

from __future__ import annotations

import logging
import os
import random
import threading
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Dict, List, Optional, Protocol, Sequence, Union

import httpx

log = logging.getLogger(__name__)

DEFAULT_GEN_KEY_ENV = "MTHINKER_GEN_KEY"
DEFAULT_JUDGE_KEY_ENV = "MTHINKER_JUDGE_KEY"

# HTTP statuses worth retrying: rate limits and server-side failures
_RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})


class BackendError(RuntimeError):
    """The backend failed after all configured retry attempts."""


class BackendTimeout(BackendError):
    """The backend did not answer within the configured timeout."""


class GenerationBackend(Protocol):
    def generate_n(self, question: str, n: int) -> List[str]: ...


class JudgeBackend(Protocol):
    def judge(self, prompt: str) -> str: ...


@dataclass(frozen=True)
class RetryPolicy:
    max_attempts: int = 3
    base_backoff: float = 0.5
    max_backoff: float = 8.0


@dataclass(frozen=True)
class SamplingParams:
    temperature: float = 0.9
    top_p: float = 1.0
    max_tokens: int = 8192


@dataclass(frozen=True)
class BackendConfig:
    """Connection settings for one OpenAI-compatible endpoint."""

    endpoint_url: str = "http://localhost:8000/v1"
    model_name: str = "mock"
    api_key_env: str = DEFAULT_GEN_KEY_ENV
    max_in_flight: int = 8
    timeout: float = 120.0
    retry: RetryPolicy = field(default_factory=RetryPolicy)
    sampling: SamplingParams = field(default_factory=SamplingParams)

    def to_dict(self) -> dict:
        # env var NAME only; the key value itself must never appear
        return asdict(self)


def judge_backend_config(**overrides) -> BackendConfig:
    """BackendConfig with judge-flavored defaults (deterministic scoring)."""
    defaults = dict(
        api_key_env=DEFAULT_JUDGE_KEY_ENV,
        sampling=SamplingParams(temperature=0.0, top_p=1.0, max_tokens=64),
    )
    defaults.update(overrides)
    return BackendConfig(**defaults)


class _HttpClientBase:
    """Shared request machinery: semaphore bound, retries, backoff."""

    def __init__(self, config: BackendConfig, transport: Optional[httpx.BaseTransport] = None) -> None:
        self.config = config
        self._semaphore = threading.BoundedSemaphore(config.max_in_flight)
        self._client = httpx.Client(timeout=config.timeout, transport=transport)
        self._rng = random.Random()  # jitter only; never affects payloads

    def close(self) -> None:
        self._client.close()

    def _headers(self) -> Dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.config.api_key_env, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _completion(self, prompt: str, sampling: SamplingParams) -> str:
        payload = {
            "model": self.config.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": sampling.temperature,
            "top_p": sampling.top_p,
            "max_tokens": sampling.max_tokens,
        }
        url = self.config.endpoint_url.rstrip("/") + "/chat/completions"
        retry = self.config.retry
        last_error: Optional[Exception] = None
        for attempt in range(1, retry.max_attempts + 1):
            start = time.monotonic()
            try:
                with self._semaphore:
                    response = self._client.post(url, json=payload, headers=self._headers())
                if response.status_code in _RETRY_STATUSES:
                    raise BackendError(f"status {response.status_code}")
                response.raise_for_status()
                data = response.json()
                text = data["choices"][0]["message"]["content"]
                log.debug("completion ok in %.3fs (attempt %d)", time.monotonic() - start, attempt)
                return text
            except httpx.TimeoutException as exc:
                last_error = BackendTimeout(str(exc))
            except (httpx.TransportError, BackendError, KeyError, ValueError) as exc:
                last_error = exc
            except httpx.HTTPStatusError as exc:
                # non-retryable client errors fail fast
                raise BackendError(f"request rejected: {exc}") from exc
            log.debug("attempt %d failed after %.3fs: %s", attempt, time.monotonic() - start, last_error)
            if attempt < retry.max_attempts:
                delay = min(retry.max_backoff, retry.base_backoff * 2 ** (attempt - 1))
                time.sleep(delay * (0.5 + 0.5 * self._rng.random()))  # jittered
        if isinstance(last_error, BackendTimeout):
            raise last_error
        raise BackendError(f"backend failed after {retry.max_attempts} attempts: {last_error}")


class HttpGenerationClient(_HttpClientBase):
    """Sampled completions from an OpenAI-compatible endpoint.

    n candidates come from n independent single-choice requests; the
    in-flight semaphore bounds concurrency when callers parallelize.
    """

    def generate_n(self, question: str, n: int) -> List[str]:
        if n < 1:
            raise ValueError("n must be >= 1")
        return [self._completion(question, self.config.sampling) for _ in range(n)]


class HttpJudgeClient(_HttpClientBase):
    """Single deterministic completion used as a judge verdict."""

    def judge(self, prompt: str) -> str:
        return self._completion(prompt, self.config.sampling)


# ---------------------------------------------------------------------------
# deterministic mocks


@dataclass
class MockScript:
    """Canned responses keyed by the exact prompt string.

    For generation, each key maps to the ordered candidate list (the
    candidate index is the position). A missing key is a hard error: a
    scripted run must be total over its inputs, never silently defaulted.
    """

    generation: Dict[str, List[str]] = field(default_factory=dict)
    judge: List[str] = field(default_factory=list)

    @classmethod
    def from_file(cls, path) -> "MockScript":
        import json
        from pathlib import Path

        p = Path(path)
        if p.is_dir():
            generation = {}
            judge: List[str] = []
            gen_path = p / "generation.json"
            judge_path = p / "judge.json"
            if gen_path.exists():
                generation = json.loads(gen_path.read_text(encoding="utf-8"))
            if judge_path.exists():
                judge = json.loads(judge_path.read_text(encoding="utf-8"))
            return cls(generation=generation, judge=judge)
        data = json.loads(p.read_text(encoding="utf-8"))
        return cls(generation=data.get("generation", {}), judge=data.get("judge", []))

    def to_file(self, path) -> None:
        import json
        from pathlib import Path

        Path(path).write_text(
            json.dumps({"generation": self.generation, "judge": self.judge}, ensure_ascii=False, sort_keys=True),
            encoding="utf-8",
        )


class MockGenerationBackend:
    """Replays scripted candidates; identical inputs give identical bytes."""

    def __init__(self, script: Union[MockScript, Dict[str, List[str]]]) -> None:
        self._responses = script.generation if isinstance(script, MockScript) else script
        self.calls: List[str] = []

    def generate_n(self, question: str, n: int) -> List[str]:
        self.calls.append(question)
        if question not in self._responses:
            raise KeyError(f"no scripted responses for question: {question[:80]!r}")
        canned = self._responses[question]
        if len(canned) < n:
            raise KeyError(f"script has {len(canned)} candidates, {n} requested: {question[:80]!r}")
        return list(canned[:n])

    @property
    def call_count(self) -> int:
        return len(self.calls)


class MockJudgeBackend:
    """Scripted judge: a constant reply, a reply sequence, or a callable."""

    def __init__(self, script: Union[str, Sequence[str], Callable[[str], str]] = "<score>1.0</score>") -> None:
        self._script = script
        self._cursor = 0
        self.calls: List[str] = []

    def judge(self, prompt: str) -> str:
        self.calls.append(prompt)
        if callable(self._script):
            return self._script(prompt)
        if isinstance(self._script, str):
            return self._script
        if self._cursor >= len(self._script):
            raise KeyError("mock judge script exhausted")
        reply = self._script[self._cursor]
        self._cursor += 1
        return reply

    @property
    def call_count(self) -> int:
        return len(self.calls)
