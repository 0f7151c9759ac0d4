"""Providers answer an ExtractionRequest with the model's raw text.

``HttpProvider`` talks to an OpenAI-compatible chat-completions endpoint;
``ReplayProvider`` and ``RecordingProvider`` back deterministic offline runs
with a directory of JSON fixtures.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Protocol

import httpx

from ..corpus import ImagePayload
from ..errors import (
    AuthenticationError,
    ConfigError,
    MissingFixtureError,
    ProviderError,
    ProviderTimeoutError,
    RateLimitError,
    RequestRejectedError,
    StorageError,
    TransportError,
)
from .parsing import RawResponse
from .prompt import prompt_digest

logger = logging.getLogger(__name__)

API_KEY_ENV = "OPENAI_API_KEY"
DEFAULT_ENDPOINT = "https://api.openai.com/v1/chat/completions"


@dataclass(frozen=True)
class ModelConfig:
    model_name: str = "gpt-4o-2024-08-06"
    temperature: float = 0.0
    endpoint_url: str = DEFAULT_ENDPOINT
    request_timeout: float = 120.0
    max_retries: int = 3
    retry_base_delay: float = 1.0
    max_concurrent_requests: int = 4
    json_mode: bool = False

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ConfigError("temperature must be >= 0")
        if self.max_concurrent_requests < 1:
            raise ConfigError("max_concurrent_requests must be >= 1")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.request_timeout <= 0 or self.retry_base_delay < 0:
            raise ConfigError("request_timeout must be positive and retry_base_delay non-negative")

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)


@dataclass(frozen=True)
class ExtractionRequest:
    system_text: str
    image: ImagePayload
    config: ModelConfig = field(default_factory=ModelConfig)
    # sample identity, used only as the fixture key
    scenario: str | None = None
    variant: str | None = None

    def __post_init__(self) -> None:
        if not self.system_text:
            raise ConfigError("system prompt must not be empty")


class Provider(Protocol):
    name: str

    def execute(self, request: ExtractionRequest) -> RawResponse: ...


def build_payload(request: ExtractionRequest) -> dict[str, Any]:
    cfg = request.config
    payload: dict[str, Any] = {
        "model": cfg.model_name,
        "temperature": cfg.temperature,
        "messages": [
            {"role": "system", "content": request.system_text},
            {
                "role": "user",
                "content": [{"type": "image_url", "image_url": {"url": request.image.data_url}}],
            },
        ],
    }
    if cfg.json_mode:
        payload["response_format"] = {"type": "json_object"}
    return payload


class HttpProvider:
    """Chat-completions client with bounded exponential-backoff retries.

    429, 5xx, timeouts and connection failures are retried; 401/403 and other
    4xx answers are raised immediately.
    """

    def __init__(
        self,
        config: ModelConfig,
        credential: str,
        *,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if not credential:
            raise AuthenticationError(f"no API credential; set {API_KEY_ENV}")
        url = httpx.URL(config.endpoint_url)
        if url.scheme not in ("http", "https") or not url.host:
            raise ConfigError(f"endpoint URL is not a valid http(s) URL: {config.endpoint_url!r}")
        self.config = config
        self.name = f"http:{url.host}"
        self._sleep = sleep
        self._client = httpx.Client(
            headers={"Authorization": f"Bearer {credential}"},
            timeout=config.request_timeout,
            transport=transport,
        )

    def close(self) -> None:
        self._client.close()

    def __enter__(self) -> HttpProvider:
        return self

    def __exit__(self, *exc: object) -> None:
        self.close()

    def _attempt(self, payload: dict[str, Any]) -> tuple[str, dict[str, Any]]:
        try:
            resp = self._client.post(self.config.endpoint_url, json=payload)
        except httpx.TimeoutException as exc:
            raise ProviderTimeoutError(f"request timed out after {self.config.request_timeout}s") from exc
        except httpx.TransportError as exc:
            raise TransportError(f"transport failure: {type(exc).__name__}: {exc}") from exc
        status = resp.status_code
        if status in (401, 403):
            raise AuthenticationError(f"authentication failed (HTTP {status})")
        if status == 429:
            raise RateLimitError("rate limited (HTTP 429)")
        if status >= 500:
            raise TransportError(f"server error (HTTP {status})")
        if status >= 400:
            raise RequestRejectedError(f"request rejected (HTTP {status}): {resp.text[:300]}")
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"unexpected response body: {exc!r}") from exc
        if not isinstance(text, str):
            raise ProviderError("response message content is not text")
        meta: dict[str, Any] = {"model": body.get("model"), "id": body.get("id")}
        usage = body.get("usage")
        if isinstance(usage, dict):
            meta["prompt_tokens"] = usage.get("prompt_tokens")
            meta["completion_tokens"] = usage.get("completion_tokens")
        return text, meta

    def execute(self, request: ExtractionRequest) -> RawResponse:
        payload = build_payload(request)
        retries = 0
        start = time.monotonic()
        while True:
            try:
                text, meta = self._attempt(payload)
            except (RateLimitError, TransportError, ProviderTimeoutError) as exc:
                if retries >= self.config.max_retries:
                    raise type(exc)(f"{exc} (gave up after {retries + 1} attempts)") from exc
                delay = self.config.retry_base_delay * (2**retries)
                logger.info("retrying after %s in %.2fs", exc, delay)
                retries += 1
                self._sleep(delay)
                continue
            meta.update(provider=self.name, retries=retries, latency_s=round(time.monotonic() - start, 3))
            return RawResponse(text, meta)


def http_provider(config: ModelConfig, credential: str, **kwargs: Any) -> HttpProvider:
    return HttpProvider(config, credential, **kwargs)


def fixture_key(scenario: str, variant: str, digest: str) -> str:
    """URL-safe file stem for a (scenario, variant, prompt digest) triple."""
    blob = json.dumps([scenario, variant, digest], ensure_ascii=False)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:40]


def _request_key(request: ExtractionRequest) -> tuple[str, str, str, str]:
    if request.scenario is None or request.variant is None:
        raise ProviderError("fixture lookup needs the request's scenario and variant")
    digest = prompt_digest(request.system_text)
    return fixture_key(request.scenario, request.variant, digest), request.scenario, request.variant, digest


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class ReplayProvider:
    def __init__(self, fixture_store: str | os.PathLike[str]):
        self.store = Path(fixture_store)
        if not self.store.is_dir():
            raise ConfigError(f"fixture store {self.store} is not a directory")
        self.name = f"replay:{self.store.name}"

    def execute(self, request: ExtractionRequest) -> RawResponse:
        key, scenario, variant, digest = _request_key(request)
        path = self.store / f"{key}.json"
        try:
            entry = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise MissingFixtureError(
                f"no fixture {key} for scenario={scenario!r} variant={variant!r} prompt={digest[:12]}"
            ) from None
        except (OSError, ValueError) as exc:
            raise StorageError(f"cannot read fixture {path}: {exc}") from exc
        return RawResponse(entry["text"], entry.get("provider_meta", {}))


def replay_provider(fixture_store: str | os.PathLike[str]) -> ReplayProvider:
    return ReplayProvider(fixture_store)


class RecordingProvider:
    """Delegate to ``inner`` and persist each answer as a replayable fixture.

    Failures are stored next to the fixtures as ``<key>.error.json`` so a
    partial recording can be audited; a later successful answer removes them.
    """

    def __init__(self, inner: Provider, fixture_store: str | os.PathLike[str]):
        self.inner = inner
        self.store = Path(fixture_store)
        try:
            self.store.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise StorageError(f"cannot create fixture store {self.store}: {exc}") from exc
        self.name = f"record:{inner.name}"

    def execute(self, request: ExtractionRequest) -> RawResponse:
        key, scenario, variant, digest = _request_key(request)
        ident = {"scenario": scenario, "variant": variant, "prompt_digest": digest, "model": request.config.model_name}
        try:
            raw = self.inner.execute(request)
        except ProviderError as exc:
            self._write(self.store / f"{key}.error.json", {**ident, "error": type(exc).__name__, "message": str(exc)})
            raise
        self._write(self.store / f"{key}.json", {**ident, "text": raw.text, "provider_meta": dict(raw.provider_meta)})
        (self.store / f"{key}.error.json").unlink(missing_ok=True)
        return raw

    @staticmethod
    def _write(path: Path, entry: dict[str, Any]) -> None:
        try:
            atomic_write_text(path, json.dumps(entry, indent=2, ensure_ascii=False, sort_keys=True) + "\n")
        except OSError as exc:
            raise StorageError(f"cannot write fixture {path}: {exc}") from exc


def record_mode(inner: Provider, fixture_store: str | os.PathLike[str]) -> RecordingProvider:
    return RecordingProvider(inner, fixture_store)


def fixture_files(store: str | os.PathLike[str]) -> list[Path]:
    return sorted(p for p in Path(store).glob("*.json") if not p.name.endswith(".error.json"))


def error_files(store: str | os.PathLike[str]) -> list[Path]:
    return sorted(Path(store).glob("*.error.json"))
