"""HTTP clients for chat-completion and embedding endpoints.

Both clients speak the common ``/chat/completions`` and ``/embeddings``
JSON wire format. Transport errors and 5xx responses are retried with
exponential backoff; 4xx responses fail immediately since the request
will not get better on its own.
"""

from __future__ import annotations

import logging
import time
from typing import Any, Callable, Protocol, Sequence, runtime_checkable

import requests

from .errors import ProviderError

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT = 60.0
DEFAULT_MAX_RETRIES = 3


@runtime_checkable
class ChatProvider(Protocol):
    """Anything that can turn chat messages into completion text."""

    def complete(self, model_id: str, messages: list[dict[str, str]], temperature: float) -> str:
        ...


@runtime_checkable
class EncoderProvider(Protocol):
    """Anything that can embed a batch of strings into equal-length vectors."""

    encoder_id: str

    def encode(self, texts: Sequence[str]) -> Any:
        ...


def _call_with_retries(
    send: Callable[[], requests.Response],
    description: str,
    max_retries: int,
    backoff: float,
) -> requests.Response:
    """Run an HTTP call, retrying transport failures and 5xx responses."""
    last_error: Exception | None = None
    for attempt in range(max_retries):
        try:
            response = send()
        except requests.RequestException as exc:
            last_error = exc
        else:
            if response.status_code < 500:
                return response
            last_error = ProviderError(
                f"{description} returned HTTP {response.status_code}: {response.text[:200]}"
            )
        if attempt < max_retries - 1:
            delay = backoff * (2 ** attempt)
            logger.warning(
                "%s failed (attempt %d/%d): %s; retrying in %.1fs",
                description, attempt + 1, max_retries, last_error, delay,
            )
            if delay > 0:
                time.sleep(delay)
    raise ProviderError(f"{description} failed after {max_retries} attempts: {last_error}")


class HttpChatProvider:
    """Chat-completion client for an HTTP+JSON endpoint."""

    def __init__(
        self,
        base_url: str,
        api_key: str | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        max_retries: int = DEFAULT_MAX_RETRIES,
        backoff: float = 1.0,
        session: requests.Session | None = None,
    ):
        if not base_url:
            raise ProviderError("no API base URL configured")
        self.base_url = base_url.rstrip("/")
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self._session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def complete(self, model_id: str, messages: list[dict[str, str]], temperature: float) -> str:
        url = f"{self.base_url}/chat/completions"
        payload = {"model": model_id, "messages": messages, "temperature": temperature}
        response = _call_with_retries(
            lambda: self._session.post(url, json=payload, headers=self._headers(), timeout=self.timeout),
            f"chat completion ({model_id})",
            self.max_retries,
            self.backoff,
        )
        if response.status_code >= 400:
            raise ProviderError(
                f"chat completion rejected with HTTP {response.status_code}: {response.text[:200]}"
            )
        try:
            content = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed chat completion response: {exc}") from exc
        if not isinstance(content, str):
            raise ProviderError("chat completion content is not a string")
        return content


class HttpEncoderProvider:
    """Embedding client for an HTTP+JSON endpoint."""

    def __init__(
        self,
        base_url: str,
        model_id: str,
        api_key: str | None = None,
        timeout: float = DEFAULT_TIMEOUT,
        max_retries: int = DEFAULT_MAX_RETRIES,
        backoff: float = 1.0,
        session: requests.Session | None = None,
    ):
        if not base_url:
            raise ProviderError("no API base URL configured")
        if not model_id:
            raise ProviderError("remote encoder requires a model id")
        self.base_url = base_url.rstrip("/")
        self.model_id = model_id
        self.api_key = api_key
        self.timeout = timeout
        self.max_retries = max_retries
        self.backoff = backoff
        self.encoder_id = f"remote:{model_id}"
        self._session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        return headers

    def encode(self, texts: Sequence[str]) -> list[list[float]]:
        if not texts:
            return []
        url = f"{self.base_url}/embeddings"
        payload = {"model": self.model_id, "input": list(texts)}
        response = _call_with_retries(
            lambda: self._session.post(url, json=payload, headers=self._headers(), timeout=self.timeout),
            f"embedding ({self.model_id})",
            self.max_retries,
            self.backoff,
        )
        if response.status_code >= 400:
            raise ProviderError(
                f"embedding request rejected with HTTP {response.status_code}: {response.text[:200]}"
            )
        try:
            items = response.json()["data"]
            items = sorted(items, key=lambda item: item.get("index", 0))
            vectors = [list(map(float, item["embedding"])) for item in items]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderError(f"malformed embedding response: {exc}") from exc
        if len(vectors) != len(texts):
            raise ProviderError(
                f"embedding response has {len(vectors)} vectors for {len(texts)} inputs"
            )
        return vectors


class OfflineChatProvider:
    """Stand-in provider for --offline runs: any call is an error.

    Extraction consults the cache before the provider, so a warm cache
    still works; only cache misses reach this object.
    """

    def complete(self, model_id: str, messages: list[dict[str, str]], temperature: float) -> str:
        raise ProviderError("offline mode: cache miss would require a network call")
