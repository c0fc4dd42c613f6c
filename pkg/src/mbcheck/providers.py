"""Provider interfaces and their HTTP bindings.

Three external services back the pipeline: a chat model, a web search
API, and an extractive question-answering model, plus a page fetcher.
Each is a small protocol so tests can substitute deterministic fakes;
the HTTP bindings here read their endpoints and credentials from the
environment (`MBC_CHAT_*`, `MBC_SEARCH_*`, `MBC_QA_*`). Credentials are
sent as bearer headers only and never enter cache keys or output records.
"""

from __future__ import annotations

import os
from typing import Protocol, runtime_checkable

import requests

from .cache import ResponseCache, TokenBucket, call_with_retries
from .errors import ConfigurationError, ProviderError, ProviderRateLimited

Messages = tuple[tuple[str, str], ...]


@runtime_checkable
class ChatProvider(Protocol):
    provider_id: str
    model: str

    def complete(self, messages: Messages, params: dict) -> str: ...


@runtime_checkable
class SearchProvider(Protocol):
    provider_id: str
    page_size: int

    def search_page(self, query_text: str, page: int) -> list[dict]: ...


@runtime_checkable
class ExtractionProvider(Protocol):
    provider_id: str
    max_context_chars: int

    def extract(self, question: str, context: str) -> tuple[str, int, float] | None: ...


@runtime_checkable
class Fetcher(Protocol):
    def fetch(self, url: str) -> str: ...


def _require(value: str | None, env_var: str) -> str:
    if not value:
        raise ConfigurationError(f"missing {env_var}")
    return value


def _check_status(response: requests.Response, what: str) -> None:
    if response.status_code == 429:
        raise ProviderRateLimited(f"{what}: rate limited")
    if response.status_code >= 400:
        raise ProviderError(f"{what}: HTTP {response.status_code}")


class HttpChatProvider:
    """Chat completion over a JSON endpoint.

    Request: POST {"model", "messages": [{"role", "content"}], **params};
    response: {"text": "..."}.
    """

    provider_id = "http-chat"

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        model: str = "default",
        session: requests.Session | None = None,
        timeout: float = 120.0,
    ) -> None:
        self.endpoint = _require(
            endpoint or os.environ.get("MBC_CHAT_ENDPOINT"), "MBC_CHAT_ENDPOINT"
        )
        self._api_key = _require(
            api_key or os.environ.get("MBC_CHAT_KEY"), "MBC_CHAT_KEY"
        )
        self.model = model
        self._session = session or requests.Session()
        self._timeout = timeout

    def complete(self, messages: Messages, params: dict) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": role, "content": content} for role, content in messages],
            **params,
        }
        try:
            response = self._session.post(
                self.endpoint,
                json=payload,
                headers={"Authorization": f"Bearer {self._api_key}"},
                timeout=self._timeout,
            )
        except requests.RequestException as exc:
            raise ProviderError(f"chat request failed: {exc}") from exc
        _check_status(response, "chat")
        try:
            return response.json()["text"]
        except (ValueError, KeyError) as exc:
            raise ProviderError(f"chat response malformed: {exc}") from exc


class HttpSearchProvider:
    """Web search over a JSON endpoint.

    Request: GET ?q=...&page=N&page_size=M; response:
    {"results": [{"url", "title", "snippet"}, ...]} in rank order.
    """

    provider_id = "http-search"

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        page_size: int = 10,
        session: requests.Session | None = None,
        timeout: float = 30.0,
    ) -> None:
        self.endpoint = _require(
            endpoint or os.environ.get("MBC_SEARCH_ENDPOINT"), "MBC_SEARCH_ENDPOINT"
        )
        self._api_key = _require(
            api_key or os.environ.get("MBC_SEARCH_KEY"), "MBC_SEARCH_KEY"
        )
        self.page_size = page_size
        self._session = session or requests.Session()
        self._timeout = timeout

    def search_page(self, query_text: str, page: int) -> list[dict]:
        try:
            response = self._session.get(
                self.endpoint,
                params={"q": query_text, "page": page, "page_size": self.page_size},
                headers={"Authorization": f"Bearer {self._api_key}"},
                timeout=self._timeout,
            )
        except requests.RequestException as exc:
            raise ProviderError(f"search request failed: {exc}") from exc
        _check_status(response, "search")
        try:
            rows = response.json()["results"]
        except (ValueError, KeyError) as exc:
            raise ProviderError(f"search response malformed: {exc}") from exc
        out = []
        for row in rows:
            if not isinstance(row, dict) or "url" not in row:
                raise ProviderError("search result row missing url")
            out.append(
                {
                    "url": row["url"],
                    "title": row.get("title", ""),
                    "snippet": row.get("snippet", ""),
                }
            )
        return out


class HttpExtractor:
    """Extractive QA over a JSON endpoint.

    Request: POST {"question", "context"}; response:
    {"answer", "start", "score"} with score in [0,1], or {"answer": null}.
    """

    provider_id = "http-qa"

    def __init__(
        self,
        endpoint: str | None = None,
        api_key: str | None = None,
        max_context_chars: int = 6000,
        session: requests.Session | None = None,
        timeout: float = 60.0,
    ) -> None:
        self.endpoint = _require(
            endpoint or os.environ.get("MBC_QA_ENDPOINT"), "MBC_QA_ENDPOINT"
        )
        self._api_key = _require(api_key or os.environ.get("MBC_QA_KEY"), "MBC_QA_KEY")
        self.max_context_chars = max_context_chars
        self._session = session or requests.Session()
        self._timeout = timeout

    def extract(self, question: str, context: str) -> tuple[str, int, float] | None:
        try:
            response = self._session.post(
                self.endpoint,
                json={"question": question, "context": context},
                headers={"Authorization": f"Bearer {self._api_key}"},
                timeout=self._timeout,
            )
        except requests.RequestException as exc:
            raise ProviderError(f"extraction request failed: {exc}") from exc
        _check_status(response, "extraction")
        try:
            payload = response.json()
        except ValueError as exc:
            raise ProviderError(f"extraction response malformed: {exc}") from exc
        if payload.get("answer") is None:
            return None
        score = min(1.0, max(0.0, float(payload.get("score", 0.0))))
        return str(payload["answer"]), int(payload.get("start", -1)), score


class HttpFetcher:
    """Best-effort page downloader; returns raw markup."""

    def __init__(
        self,
        session: requests.Session | None = None,
        timeout: float = 20.0,
        user_agent: str = "mbcheck/0.1",
    ) -> None:
        self._session = session or requests.Session()
        self._timeout = timeout
        self._user_agent = user_agent

    def fetch(self, url: str) -> str:
        try:
            response = self._session.get(
                url, headers={"User-Agent": self._user_agent}, timeout=self._timeout
            )
        except requests.RequestException as exc:
            raise ProviderError(f"fetch failed: {exc}") from exc
        _check_status(response, "fetch")
        return response.text


class CachingChatProvider:
    """Wraps a ChatProvider with the response cache, a rate limiter, and
    retries. Identical (model, messages, params) requests replay from
    disk without a network call."""

    def __init__(
        self,
        inner: ChatProvider,
        cache: ResponseCache,
        limiter: TokenBucket | None = None,
        attempts: int = 3,
        sleep=None,
    ) -> None:
        self.inner = inner
        self.cache = cache
        self.limiter = limiter
        self.attempts = attempts
        self._sleep = sleep
        self.provider_id = inner.provider_id
        self.model = inner.model

    def complete(self, messages: Messages, params: dict) -> str:
        key = {
            "provider": self.provider_id,
            "model": self.model,
            "messages": [list(m) for m in messages],
            "params": params,
        }
        cached = self.cache.get("chat", key)
        if cached is not None:
            return cached["text"]

        def attempt() -> str:
            if self.limiter is not None:
                self.limiter.acquire()
            return self.inner.complete(messages, params)

        kwargs = {"attempts": self.attempts}
        if self._sleep is not None:
            kwargs["sleep"] = self._sleep
        text = call_with_retries(attempt, **kwargs)
        self.cache.put("chat", key, {"text": text})
        return text
