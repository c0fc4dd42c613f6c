"""Distill retrieved documents into question-answer evidence.

Each search result is reduced to at most one extractive QA pair: the
provider's best span for the query's question, kept only when its
confidence clears the threshold. Responses are cached by (provider,
question, document hash) so replays are offline.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable

from .cache import ResponseCache, TokenBucket, call_with_retries
from .errors import ExtractionError, ProviderError, ValidationError
from .providers import ExtractionProvider
from .retrieval import QueryItem, SearchResult
from .textutil import sha256_hex

log = logging.getLogger(__name__)

DEFAULT_THRESHOLD = 0.5
DEFAULT_PER_QUERY_CAP = 8


@dataclass(frozen=True)
class QAPair:
    query_label: str
    question: str
    answer: str
    source_url: str
    rank: int
    score: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.score <= 1.0:
            raise ValidationError(f"score out of range: {self.score}")
        if self.rank < 1:
            raise ValidationError("rank must be 1-based")
        if not self.answer.strip():
            raise ValidationError("answer must be non-empty")


@dataclass
class ExtractClient:
    """Extraction provider plus cache, limiter, and policy knobs."""

    provider: ExtractionProvider
    cache: ResponseCache
    limiter: TokenBucket | None = None
    threshold: float = DEFAULT_THRESHOLD
    per_query_cap: int = DEFAULT_PER_QUERY_CAP
    retry_attempts: int = 3
    retry_sleep: object = None

    def _retry_kwargs(self) -> dict:
        kwargs = {"attempts": self.retry_attempts}
        if self.retry_sleep is not None:
            kwargs["sleep"] = self.retry_sleep
        return kwargs


def extract_answer(
    client: ExtractClient, question: str, document_text: str
) -> tuple[str, float] | None:
    """Top answer span and confidence, or None below the threshold.

    The document is head-truncated to the provider's input limit. The
    raw provider verdict is cached pre-threshold, so re-running with a
    different threshold reuses the same cache entries.
    """
    if not document_text:
        raise ValidationError("document_text must be non-empty")
    context = document_text[: client.provider.max_context_chars]
    key = {
        "provider": client.provider.provider_id,
        "question": question,
        "document": sha256_hex(context),
    }
    value = client.cache.get("qa", key)
    if value is None:

        def attempt() -> tuple[str, int, float] | None:
            if client.limiter is not None:
                client.limiter.acquire()
            return client.provider.extract(question, context)

        try:
            got = call_with_retries(attempt, **client._retry_kwargs())
        except ProviderError as exc:
            raise ExtractionError(f"extraction failed: {exc}") from exc
        if got is None:
            value = {"answer": None, "start": -1, "score": 0.0}
        else:
            answer, start, score = got
            value = {"answer": answer, "start": start, "score": score}
        client.cache.put("qa", key, value)
    if value["answer"] is None:
        return None
    score = float(value["score"])
    if score < client.threshold:
        return None
    return str(value["answer"]), score


def distill(
    client: ExtractClient, item: QueryItem, results: Iterable[SearchResult]
) -> list[QAPair]:
    """One QA pair per result, deduplicated and capped.

    Extraction reads the fetched body when present, else the snippet.
    Case-folded duplicate answers keep only the lowest-ranked pair, the
    output is rank-ordered, and at most `per_query_cap` pairs survive.
    """
    candidates: list[QAPair] = []
    for result in sorted(results, key=lambda r: r.rank):
        text = result.body or result.snippet
        if not text:
            continue
        got = extract_answer(client, item.question_text, text)
        if got is None:
            continue
        answer, score = got
        if answer not in text:
            # A misbehaving provider returned something that is not a span.
            log.warning(
                "dropping non-extractive answer %r from %s", answer, result.url
            )
            continue
        candidates.append(
            QAPair(
                query_label=item.label,
                question=item.question_text,
                answer=answer,
                source_url=result.url,
                rank=result.rank,
                score=score,
            )
        )
    seen: set[str] = set()
    kept: list[QAPair] = []
    for pair in candidates:
        folded = pair.answer.casefold()
        if folded in seen:
            continue
        seen.add(folded)
        kept.append(pair)
        if len(kept) >= client.per_query_cap:
            break
    return kept
