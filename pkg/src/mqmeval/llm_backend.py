"""Uniform completion interface over LLM providers.

Besides a generic HTTP backend, two offline backends exist: a replay
backend that answers from a recorded log, and an oracle backend that
answers prompts from gold assessments so end-to-end runs are
deterministic and verifiable without any model.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

from mqmeval.errors import (
    AuthError,
    ConfigError,
    MalformedResponse,
    RateLimited,
    TransportError,
)
from mqmeval.mqm_core import SegmentAssessment, Severity
from mqmeval.prompting import ERRORS_LABEL, SCORE_LABEL, render_error_list


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    max_tokens: int = 256
    temperature: float = 0.0
    stop: tuple[str, ...] = ()
    model: str = "default"

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class BackendConfig:
    """kind: http_generic | oracle | replay.

    Credentials are referenced by environment-variable name only; the
    secret itself never enters configs, logs, or replay files.
    """

    kind: str
    endpoint: str | None = None
    api_key_env: str | None = None
    rate_limit: float | None = None  # requests/sec
    max_attempts: int = 3
    backoff: float = 0.5
    replay_path: str | None = None
    gold_path: str | None = None
    log_path: str | None = None

    def __post_init__(self):
        if self.kind == "http_generic" and not self.endpoint:
            raise ConfigError("http_generic backend requires an endpoint")
        if self.kind == "replay" and not self.replay_path:
            raise ConfigError("replay backend requires a recorded-response file")
        if self.kind == "oracle" and not self.gold_path:
            raise ConfigError("oracle backend requires a gold-assessment store")


@dataclass(frozen=True)
class CompletionOutcome:
    """One batch item: completion text, or the error that replaced it."""

    text: str | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def prompt_sha256(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class Backend:
    """Shared logging plumbing; subclasses implement _complete."""

    def __init__(self, log_path: str | None = None, model: str = "default"):
        self._log_path = log_path
        self._log_lock = threading.Lock()
        self.model = model

    def complete(self, request: CompletionRequest) -> str:
        text = self._complete(request)
        if self._log_path:
            record = {
                "prompt_sha256": prompt_sha256(request.prompt),
                "prompt": request.prompt,
                "completion": text,
                "model": request.model,
                "timestamp": time.time(),
            }
            with self._log_lock, open(self._log_path, "a", encoding="utf-8") as f:
                f.write(json.dumps(record, ensure_ascii=False) + "\n")
        return text

    def _complete(self, request: CompletionRequest) -> str:
        raise NotImplementedError


_TRANSLATION_RE = re.compile(r'translation: "(.*?)"\n(?:Score \(0-100\)|Errors):', re.DOTALL)


class OracleBackend(Backend):
    """Answers prompts from gold assessments keyed by candidate text.

    The last translation block of the prompt identifies the segment; the
    trailing output label selects score vs error-list rendering.
    """

    def __init__(self, gold: dict[str, SegmentAssessment], log_path: str | None = None):
        super().__init__(log_path=log_path, model="oracle")
        self._gold = gold

    @classmethod
    def from_pairs(cls, pairs, log_path=None):
        """pairs: iterable of (candidate text, SegmentAssessment)."""
        return cls(dict(pairs), log_path=log_path)

    def _complete(self, request: CompletionRequest) -> str:
        matches = _TRANSLATION_RE.findall(request.prompt)
        if not matches:
            raise MalformedResponse("prompt has no translation block to answer")
        candidate = matches[-1]
        assessment = self._gold.get(candidate)
        if assessment is None:
            raise MalformedResponse(f"no gold assessment for candidate {candidate[:60]!r}")
        if request.prompt.rstrip().endswith(SCORE_LABEL):
            score = assessment.score()
            if score is None:
                raise MalformedResponse("gold assessment has no score")
            return str(int(score)) if float(score).is_integer() else str(score)
        errors = [a for a in assessment.annotations if a.severity is not Severity.NEUTRAL]
        return render_error_list(errors)


class ReplayBackend(Backend):
    """Returns recorded completions, keyed by prompt hash."""

    def __init__(self, replay_path: str, log_path: str | None = None):
        super().__init__(log_path=log_path, model="replay")
        self._responses: dict[str, str] = {}
        with open(replay_path, encoding="utf-8") as f:
            for line in f:
                if line.strip():
                    record = json.loads(line)
                    self._responses[record["prompt_sha256"]] = record["completion"]

    def _complete(self, request: CompletionRequest) -> str:
        key = prompt_sha256(request.prompt)
        if key not in self._responses:
            raise TransportError(f"prompt {key[:12]} not in replay log")
        return self._responses[key]


class HttpBackend(Backend):
    """Minimal generic JSON contract: POST {prompt, max_tokens, temperature,
    stop, model} and read {"text": ...} back."""

    def __init__(self, config: BackendConfig):
        super().__init__(log_path=config.log_path)
        self._config = config
        self._last_request = 0.0
        self._rate_lock = threading.Lock()

    def _throttle(self):
        if not self._config.rate_limit:
            return
        interval = 1.0 / self._config.rate_limit
        with self._rate_lock:
            wait = self._last_request + interval - time.monotonic()
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self._config.api_key_env:
            key = os.environ.get(self._config.api_key_env)
            if not key:
                raise AuthError(f"environment variable {self._config.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def _complete(self, request: CompletionRequest) -> str:
        import requests

        payload = {
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "temperature": request.temperature,
            "stop": list(request.stop),
            "model": request.model,
        }
        last_error: Exception = TransportError("no attempts made")
        for attempt in range(self._config.max_attempts):
            self._throttle()
            try:
                resp = requests.post(
                    self._config.endpoint, json=payload, headers=self._headers(), timeout=60
                )
            except requests.RequestException as e:
                last_error = TransportError(str(e))
            else:
                if resp.status_code in (401, 403):
                    raise AuthError(f"HTTP {resp.status_code}")
                if resp.status_code == 429:
                    last_error = RateLimited("HTTP 429")
                elif resp.status_code >= 500:
                    last_error = TransportError(f"HTTP {resp.status_code}")
                else:
                    try:
                        body = resp.json()
                        return body["text"]
                    except (ValueError, KeyError, TypeError) as e:
                        raise MalformedResponse(f"bad response body: {e}") from None
            time.sleep(self._config.backoff * 2**attempt)
        raise last_error


def make_backend(config: BackendConfig) -> Backend:
    if config.kind == "http_generic":
        return HttpBackend(config)
    if config.kind == "replay":
        return ReplayBackend(config.replay_path, log_path=config.log_path)
    if config.kind == "oracle":
        from mqmeval.icl_sampler import load_pool
        from mqmeval.mqm_core import score_annotations

        pool = load_pool(config.gold_path)
        gold = {}
        for entry in pool.entries:
            gold[entry.segment.candidate] = SegmentAssessment(
                segment_key=entry.segment.key,
                rater_id="gold",
                annotations=entry.annotations,
                raw_score=entry.score,
                derived_score=score_annotations(entry.annotations),
            )
        return OracleBackend(gold, log_path=config.log_path)
    raise ConfigError(f"unknown backend kind {config.kind!r}")


def complete(request: CompletionRequest, config: BackendConfig) -> str:
    return make_backend(config).complete(request)


def batch_complete(
    requests: list[CompletionRequest],
    backend: Backend,
    parallelism: int = 1,
) -> list[CompletionOutcome]:
    """Order-preserving batch completion; failures become per-item
    error placeholders rather than aborting the batch."""
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")

    def one(request: CompletionRequest) -> CompletionOutcome:
        try:
            return CompletionOutcome(text=backend.complete(request))
        except Exception as e:  # isolation contract: never propagate per-item
            return CompletionOutcome(error=f"{type(e).__name__}: {e}")

    if not requests:
        return []
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        return list(pool.map(one, requests))
