"""Draft generation: initial background check plus expansion rounds.

The pipeline asks the chat model for a first draft from the source name
alone, then walks the query plan; every round whose retrieval produced
QA evidence feeds one update call that folds the new answers into the
draft. Each prompt/response is content-addressed into the transcript so
a finished draft is fully auditable.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from typing import Sequence

from . import assets
from .errors import (
    ExpansionError,
    GenerationError,
    MalformedInputError,
    MbcError,
    PipelineError,
    ProviderError,
    ResponseParseError,
    TemplateError,
    ValidationError,
)
from .extraction import ExtractClient, QAPair, distill
from .providers import ChatProvider, Messages
from .retrieval import (
    DEFAULT_EXCLUSIONS,
    DEFAULT_RESULT_DEPTH,
    ExclusionRules,
    QueryItem,
    SearchClient,
    apply_exclusions,
    build_query_plan,
    search,
)
from .textutil import canonical_json, content_id, registrable_domain

log = logging.getLogger(__name__)

_PLACEHOLDER_RE = re.compile(r"\{([^{}]+)\}")
# Starred marker first so the unstarred fallback cannot split it.
_MARKER_RE = re.compile(r"\*\*\s*Background check\s*\*\*|Background check")


@dataclass(frozen=True)
class PromptMessages:
    messages: tuple[tuple[str, str], ...]

    def __post_init__(self) -> None:
        if not self.messages or self.messages[0][0] != "system":
            raise ValidationError("first prompt message must be the system role")

    def as_tuple(self) -> Messages:
        return self.messages


@dataclass(frozen=True)
class TranscriptEntry:
    step: str
    prompt_id: str
    response_id: str
    params_json: str  # canonical JSON of the sampling parameters


@dataclass(frozen=True)
class MBCDraft:
    source_name: str
    body: str
    revision: int
    provenance: tuple[QAPair, ...] = ()
    transcript: tuple[TranscriptEntry, ...] = ()

    def __post_init__(self) -> None:
        if self.revision < 0:
            raise ValidationError("revision must be non-negative")


def render_prompt(template_id: str, bindings: dict[str, str]) -> PromptMessages:
    """Substitute `bindings` into the stored template, byte-exact.

    Every placeholder occurring in the template must be bound; unused
    bindings are ignored.
    """
    messages = assets.prompt_messages(template_id)
    rendered: list[tuple[str, str]] = []
    for role, content in messages:
        for name in _PLACEHOLDER_RE.findall(content):
            if name not in bindings:
                raise TemplateError(
                    f"{template_id}: no binding for placeholder {{{name}}}"
                )
        for name, value in bindings.items():
            content = content.replace("{" + name + "}", value)
        rendered.append((role, content))
    return PromptMessages(tuple(rendered))


def parse_mbc_response(raw: str, strict: bool = False) -> str:
    """Body of a chat response, with everything up to and including the
    draft marker removed. Both the starred and bare marker forms count.
    Without a marker, lenient mode returns the whole trimmed text."""
    match = _MARKER_RE.search(raw)
    if match is None:
        if strict:
            raise ResponseParseError("response has no draft marker")
        log.warning("response has no draft marker; keeping whole text")
        return raw.strip()
    return raw[match.end() :].strip()


def _complete(
    chat: ChatProvider,
    step: str,
    prompt: PromptMessages,
    params: dict,
    error_cls: type[GenerationError],
) -> tuple[str, TranscriptEntry]:
    try:
        text = chat.complete(prompt.as_tuple(), params)
    except ProviderError as exc:
        raise error_cls(f"{step}: {exc}") from exc
    entry = TranscriptEntry(
        step=step,
        prompt_id=content_id(
            {"model": getattr(chat, "model", "unknown"), "messages": [list(m) for m in prompt.messages]}
        ),
        response_id=content_id({"text": text}),
        params_json=canonical_json(params),
    )
    return text, entry


def generate_initial(
    source_name: str,
    chat: ChatProvider,
    params: dict | None = None,
    strict: bool = False,
) -> MBCDraft:
    """Revision-0 draft from the source name alone."""
    if not source_name.strip():
        raise ValidationError("source name must be non-empty")
    params = params or {}
    prompt = render_prompt("initial", {"source name": source_name})
    text, entry = _complete(chat, "initial", prompt, params, GenerationError)
    return MBCDraft(
        source_name=source_name,
        body=parse_mbc_response(text, strict=strict),
        revision=0,
        provenance=(),
        transcript=(entry,),
    )


def format_qa_pairs(pairs: Sequence[QAPair]) -> str:
    return "\n".join(
        f"Q: {pair.question}\nA: {pair.answer} (source: {registrable_domain(pair.source_url)})"
        for pair in pairs
    )


def _prompt_chars(prompt: PromptMessages) -> int:
    return sum(len(content) for _, content in prompt.messages)


def _render_update(source_name: str, body: str, pairs: Sequence[QAPair]) -> PromptMessages:
    return render_prompt(
        "update",
        {
            "source name": source_name,
            "Previous background check": body,
            "Question-answer pairs": format_qa_pairs(pairs),
        },
    )


def _expand_once(
    source_name: str,
    body: str,
    pairs: list[QAPair],
    chat: ChatProvider,
    step: str,
    params: dict,
    strict: bool,
    max_prompt_chars: int | None,
) -> tuple[str, list[TranscriptEntry]]:
    prompt = _render_update(source_name, body, pairs)
    if (
        max_prompt_chars is not None
        and _prompt_chars(prompt) > max_prompt_chars
        and len(pairs) > 1
    ):
        # Over the provider limit: bisect the batch and chain the halves.
        mid = len(pairs) // 2
        body, first = _expand_once(
            source_name, body, pairs[:mid], chat, step, params, strict, max_prompt_chars
        )
        body, second = _expand_once(
            source_name, body, pairs[mid:], chat, step, params, strict, max_prompt_chars
        )
        return body, first + second
    text, entry = _complete(chat, step, prompt, params, ExpansionError)
    return parse_mbc_response(text, strict=strict), [entry]


def expand(
    draft: MBCDraft,
    qa_batch: Sequence[QAPair],
    chat: ChatProvider,
    params: dict | None = None,
    strict: bool = False,
    max_prompt_chars: int | None = None,
) -> MBCDraft:
    """One expansion round: fold a non-empty QA batch into the draft.

    Counts as a single revision even when the batch had to be bisected
    to fit the prompt limit.
    """
    if not qa_batch:
        raise ValidationError("qa_batch must be non-empty")
    params = params or {}
    step = f"expand:{qa_batch[0].query_label}"
    body, entries = _expand_once(
        draft.source_name,
        draft.body,
        list(qa_batch),
        chat,
        step,
        params,
        strict,
        max_prompt_chars,
    )
    return MBCDraft(
        source_name=draft.source_name,
        body=body,
        revision=draft.revision + 1,
        provenance=draft.provenance + tuple(qa_batch),
        transcript=draft.transcript + tuple(entries),
    )


@dataclass
class PipelineConfig:
    retrieval_enabled: bool = True
    result_depth: int = DEFAULT_RESULT_DEPTH
    strict_parse: bool = False
    per_pair_expansion: bool = False
    sampling_params: dict = field(default_factory=dict)
    max_prompt_chars: int | None = None
    exclusions: ExclusionRules = DEFAULT_EXCLUSIONS
    extra_queries: tuple[QueryItem, ...] = ()


def run_pipeline(
    source_name: str,
    chat: ChatProvider,
    search_client: SearchClient | None = None,
    extract_client: ExtractClient | None = None,
    config: PipelineConfig | None = None,
) -> MBCDraft:
    """Full generation for one source.

    With retrieval disabled this is exactly `generate_initial`. With it
    enabled, every query item runs search -> exclusion -> distill, and
    each non-empty QA batch becomes one expansion round (or one round
    per pair in per-pair mode). Stage failures raise PipelineError with
    the stage name, query label, and the last good draft attached.
    """
    config = config or PipelineConfig()

    def fail(stage: str, exc: MbcError, label: str | None, partial: MBCDraft | None):
        raise PipelineError(
            f"{stage} failed for {source_name!r}: {exc}",
            stage=stage,
            query_label=label,
            partial=partial,
        ) from exc

    try:
        draft = generate_initial(
            source_name, chat, params=config.sampling_params, strict=config.strict_parse
        )
    except MbcError as exc:
        fail("initial", exc, None, None)
    if not config.retrieval_enabled:
        return draft
    if search_client is None or extract_client is None:
        raise PipelineError(
            "retrieval enabled but search/extraction clients are missing",
            stage="configuration",
            partial=draft,
        )

    plan = build_query_plan(source_name, config.extra_queries)
    for item in plan.items:
        try:
            results = search(search_client, item, k=config.result_depth)
            kept = apply_exclusions(results, config.exclusions)
            pairs = distill(extract_client, item, kept)
        except MbcError as exc:
            fail("retrieval", exc, item.label, draft)
        if not pairs:
            continue
        batches = [[pair] for pair in pairs] if config.per_pair_expansion else [pairs]
        for batch in batches:
            try:
                draft = expand(
                    draft,
                    batch,
                    chat,
                    params=config.sampling_params,
                    strict=config.strict_parse,
                    max_prompt_chars=config.max_prompt_chars,
                )
            except MbcError as exc:
                fail("expand", exc, item.label, draft)
    return draft


def draft_to_record(draft: MBCDraft) -> dict:
    return {
        "source_name": draft.source_name,
        "body": draft.body,
        "revision": draft.revision,
        "provenance": [
            {
                "query_label": pair.query_label,
                "question": pair.question,
                "answer": pair.answer,
                "source_url": pair.source_url,
                "rank": pair.rank,
                "score": pair.score,
            }
            for pair in draft.provenance
        ],
        "transcript": [
            {
                "step": entry.step,
                "prompt_id": entry.prompt_id,
                "response_id": entry.response_id,
                "params": entry.params_json,
            }
            for entry in draft.transcript
        ],
    }


def draft_from_record(record: dict) -> MBCDraft:
    try:
        return MBCDraft(
            source_name=record["source_name"],
            body=record["body"],
            revision=record["revision"],
            provenance=tuple(
                QAPair(
                    query_label=p["query_label"],
                    question=p["question"],
                    answer=p["answer"],
                    source_url=p["source_url"],
                    rank=p["rank"],
                    score=p["score"],
                )
                for p in record["provenance"]
            ),
            transcript=tuple(
                TranscriptEntry(
                    step=t["step"],
                    prompt_id=t["prompt_id"],
                    response_id=t["response_id"],
                    params_json=t["params"],
                )
                for t in record["transcript"]
            ),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedInputError(f"bad draft record: {exc}") from exc
