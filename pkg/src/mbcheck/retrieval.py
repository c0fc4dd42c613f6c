"""Fixed query plan, search execution, and exclusion filtering.

Each source gets the same six query/question pairs with the source name
quoted verbatim. Searches run through a pluggable provider, paginate up
to the requested depth, and write every page response to the cache
before returning, so a second run replays byte-identically offline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

from .cache import ResponseCache, TokenBucket, call_with_retries
from .errors import (
    ProviderError,
    ProviderRateLimited,
    RateLimitError,
    RetrievalError,
    ValidationError,
)
from .providers import Fetcher, SearchProvider
from .textutil import html_to_text, is_absolute_url, registrable_domain

log = logging.getLogger(__name__)

DEFAULT_RESULT_DEPTH = 30

# label, query, question; {name} is the source name, kept in quotes.
_QUERY_SPECS = (
    ("ownership", '"{name}" ownership', 'Who owns "{name}"?'),
    ("funding", '"{name}" funding', 'How is "{name}" funded?'),
    ("about", '"{name}" about', 'What is "{name}"?'),
    (
        "political-leaning",
        '"{name}" political leaning',
        'What is the political leaning of "{name}"?',
    ),
    ("fact-check", '"{name}" fact-check', 'Has "{name}" failed any fact-checks?'),
    (
        "retracted-article",
        '"{name}" retracted article',
        'Has "{name}" retracted any articles?',
    ),
)


@dataclass(frozen=True)
class QueryItem:
    label: str
    query_text: str
    question_text: str


@dataclass(frozen=True)
class QueryPlan:
    source_name: str
    items: tuple[QueryItem, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ValidationError("query plan has no items")
        labels = [item.label for item in self.items]
        if len(set(labels)) != len(labels):
            raise ValidationError(f"duplicate query labels: {labels}")
        for item in self.items:
            if self.source_name not in item.query_text:
                raise ValidationError(
                    f"{item.label}: query text must quote the source name"
                )
            if self.source_name not in item.question_text:
                raise ValidationError(
                    f"{item.label}: question text must quote the source name"
                )


@dataclass(frozen=True)
class SearchResult:
    url: str
    domain: str
    title: str
    snippet: str
    body: str
    rank: int

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValidationError("rank must be 1-based")
        if not is_absolute_url(self.url):
            raise ValidationError(f"not an absolute URL: {self.url!r}")
        if self.domain != registrable_domain(self.url):
            raise ValidationError(f"domain {self.domain!r} not derived from {self.url!r}")


def build_query_plan(
    source_name: str, extra_items: Iterable[QueryItem] = ()
) -> QueryPlan:
    """The six standard query/question pairs for a source, in fixed
    order, plus any configured extras appended after them."""
    if not source_name.strip():
        raise ValidationError("source name must be non-empty")
    items = [
        QueryItem(
            label=label,
            query_text=query.format(name=source_name),
            question_text=question.format(name=source_name),
        )
        for label, query, question in _QUERY_SPECS
    ]
    items.extend(extra_items)
    return QueryPlan(source_name=source_name, items=tuple(items))


@dataclass
class SearchClient:
    """Bundles the search provider with its cache, limiter, and fetcher."""

    provider: SearchProvider
    cache: ResponseCache
    limiter: TokenBucket | None = None
    fetcher: Fetcher | None = None
    retry_attempts: int = 3
    retry_sleep: object = None  # injectable for tests

    def _retry_kwargs(self) -> dict:
        kwargs = {"attempts": self.retry_attempts}
        if self.retry_sleep is not None:
            kwargs["sleep"] = self.retry_sleep
        return kwargs


def _fetch_page(client: SearchClient, item: QueryItem, k: int, page: int) -> list[dict] | None:
    """One provider page, cache-first. Returns None when a later page
    fails after retries (the caller keeps the partial prefix)."""
    key = {
        "provider": client.provider.provider_id,
        "query": item.query_text,
        "k": k,
        "page": page,
    }
    cached = client.cache.get("search", key)
    if cached is not None:
        return cached["results"]

    def attempt() -> list[dict]:
        if client.limiter is not None:
            client.limiter.acquire()
        return client.provider.search_page(item.query_text, page)

    try:
        rows = call_with_retries(attempt, **client._retry_kwargs())
    except ProviderRateLimited as exc:
        if page > 1:
            log.warning("query %r page %d rate limited; keeping partial results",
                        item.label, page)
            return None
        raise RateLimitError(str(exc), query_label=item.label) from exc
    except ProviderError as exc:
        if page > 1:
            log.warning("query %r page %d failed (%s); keeping partial results",
                        item.label, page, exc)
            return None
        raise RetrievalError(str(exc), query_label=item.label) from exc
    client.cache.put("search", key, {"results": rows})
    return rows


def _fetch_body(client: SearchClient, url: str) -> str:
    """Best-effort page text; failures yield an empty body, and only
    successful fetches are cached."""
    if client.fetcher is None:
        return ""
    key = {"url": url}
    cached = client.cache.get("fetch", key)
    if cached is not None:
        return cached["text"]
    try:
        markup = client.fetcher.fetch(url)
    except ProviderError as exc:
        log.warning("fetch failed for %s: %s", url, exc)
        return ""
    text = html_to_text(markup)
    client.cache.put("fetch", key, {"text": text})
    return text


def search(client: SearchClient, item: QueryItem, k: int = DEFAULT_RESULT_DEPTH) -> list[SearchResult]:
    """Up to k results for one query item, rank order, URLs deduplicated."""
    if k < 1:
        raise ValidationError("k must be positive")
    results: list[SearchResult] = []
    seen: set[str] = set()
    page = 1
    while len(results) < k:
        rows = _fetch_page(client, item, k, page)
        if rows is None or not rows:
            break
        for row in rows:
            if len(results) >= k:
                break
            url = row["url"]
            if url in seen or not is_absolute_url(url):
                continue
            seen.add(url)
            results.append(
                SearchResult(
                    url=url,
                    domain=registrable_domain(url),
                    title=row.get("title", ""),
                    snippet=row.get("snippet", ""),
                    body=_fetch_body(client, url),
                    rank=len(results) + 1,
                )
            )
        if len(rows) < client.provider.page_size:
            break
        page += 1
    return results


@dataclass(frozen=True)
class ExclusionRules:
    """Domains to drop (including subdomains) and substrings whose
    presence in a result body disqualifies the page."""

    domains: tuple[str, ...] = ("mediabiasfactcheck.com",)
    mentions: tuple[str, ...] = ("mediabiasfactcheck.com", "media bias / fact check")


DEFAULT_EXCLUSIONS = ExclusionRules()


def _domain_blocked(domain: str, blocked: tuple[str, ...]) -> bool:
    return any(domain == d or domain.endswith("." + d) for d in blocked)


def apply_exclusions(
    results: Iterable[SearchResult], rules: ExclusionRules = DEFAULT_EXCLUSIONS
) -> list[SearchResult]:
    """Drop blocklisted results; survivors keep their original ranks."""
    mentions = tuple(m.casefold() for m in rules.mentions)
    kept = []
    for result in results:
        if _domain_blocked(result.domain, rules.domains):
            continue
        body = result.body.casefold()
        if any(m in body for m in mentions):
            continue
        kept.append(result)
    return kept
