"""Chat-completion and embedding clients with retry and backoff."""

from __future__ import annotations

import logging
import os
import time
from dataclasses import dataclass

import httpx

logger = logging.getLogger(__name__)

API_KEY_ENV = "ATOMKG_API_KEY"
MAX_ATTEMPTS = 3


class RemoteError(RuntimeError):
    """A remote endpoint failed after all retries."""


@dataclass(frozen=True)
class RemoteConfig:
    base_url: str
    model: str
    timeout: float = 60.0
    backoff: float = 1.0  # seconds before the first retry; doubles each time
    api_key_env: str = API_KEY_ENV

    @classmethod
    def from_dict(cls, data: dict) -> "RemoteConfig":
        return cls(
            base_url=data["base_url"],
            model=data.get("model", ""),
            timeout=float(data.get("timeout", 60.0)),
            backoff=float(data.get("backoff", 1.0)),
        )

    def headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        return headers


def _post(url: str, body: dict, config: RemoteConfig, client: httpx.Client | None) -> dict:
    owns = client is None
    client = client or httpx.Client(timeout=config.timeout)
    delay = config.backoff
    last: Exception | None = None
    try:
        for attempt in range(1, MAX_ATTEMPTS + 1):
            try:
                response = client.post(url, json=body, headers=config.headers())
                if 200 <= response.status_code < 300:
                    return response.json()
                last = RemoteError(f"{url} returned HTTP {response.status_code}")
            except (httpx.HTTPError, ValueError) as exc:
                last = exc
            if attempt < MAX_ATTEMPTS:
                logger.warning("request to %s failed (%s); retry %d in %.1fs", url, last, attempt, delay)
                time.sleep(delay)
                delay *= 2
    finally:
        if owns:
            client.close()
    raise RemoteError(f"{url} failed after {MAX_ATTEMPTS} attempts: {last}") from last


def _reply_text(payload: dict) -> str:
    choices = payload.get("choices")
    if choices:
        first = choices[0]
        message = first.get("message")
        if message and message.get("content") is not None:
            return message["content"]
        if first.get("text") is not None:
            return first["text"]
    for key in ("content", "text", "output", "response"):
        if isinstance(payload.get(key), str):
            return payload[key]
    raise RemoteError(f"response carries no generated text: {str(payload)[:200]}")


class ChatClient:
    """One-user-message chat completions at temperature 0."""

    def __init__(self, config: RemoteConfig, client: httpx.Client | None = None):
        self.config = config
        self._client = client

    @property
    def url(self) -> str:
        return self.config.base_url.rstrip("/") + "/chat/completions"

    def complete(self, prompt: str) -> str:
        body = {
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": 0,
        }
        return _reply_text(_post(self.url, body, self.config, self._client))


class EmbeddingClient:
    def __init__(self, config: RemoteConfig, client: httpx.Client | None = None):
        self.config = config
        self._client = client

    @property
    def url(self) -> str:
        return self.config.base_url.rstrip("/") + "/embeddings"

    def embed(self, text: str) -> list[float]:
        payload = _post(self.url, {"model": self.config.model, "input": text}, self.config, self._client)
        if isinstance(payload.get("data"), list) and payload["data"]:
            return [float(x) for x in payload["data"][0]["embedding"]]
        if isinstance(payload.get("embedding"), list):
            return [float(x) for x in payload["embedding"]]
        raise RemoteError("embedding response carries no vector")
