"""Answer a question from one evidence document, with or without a background check.

The harness consumes curated evidence cases (question, document, origin
domain) and produces short answers through a chat provider.  When a
background check for the document's source is attached, the prompt gains a
single block introducing it; everything else is byte-identical, so paired
answers isolate the effect of the background check.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .assets import PROMPT_CHECKSUMS
from .cache import call_with_retries
from .errors import GenerationError, MalformedInputError, ProviderError, ValidationError
from .synthesis import render_prompt

PROMPT_WITHOUT_MBC = "qa_without_mbc"
PROMPT_WITH_MBC = "qa_with_mbc"

# Label strings used in presentation orders and error messages.
VARIANT_WITHOUT = "without-mbc"
VARIANT_WITH = "with-mbc"


@dataclass(frozen=True)
class EvidenceCase:
    """One curated question plus the single document it should be answered from."""

    question: str
    document: str
    domain: str
    mbc: str | None = None

    def __post_init__(self) -> None:
        if not self.question.strip():
            raise ValidationError("question must be non-empty")
        if not self.document.strip():
            raise ValidationError("document must be non-empty")
        if not self.domain.strip():
            raise ValidationError("domain must be non-empty")
        object.__setattr__(self, "domain", self.domain.strip().lower())
        if self.mbc is not None and not self.mbc.strip():
            raise ValidationError("mbc, when present, must be non-empty")

    def with_mbc(self, mbc: str) -> "EvidenceCase":
        return EvidenceCase(
            question=self.question, document=self.document, domain=self.domain, mbc=mbc
        )


def case_prompt(case: EvidenceCase):
    """Render the chat messages for a case, picking the variant by case.mbc."""
    bindings = {
        "question": case.question,
        "source document": case.document,
        "domain name of source document": case.domain,
    }
    if case.mbc is None:
        return render_prompt(PROMPT_WITHOUT_MBC, bindings)
    bindings["background check"] = case.mbc
    return render_prompt(PROMPT_WITH_MBC, bindings)


def answer_with_evidence(
    case: EvidenceCase,
    chat,
    *,
    params: dict | None = None,
    retry_attempts: int = 3,
    retry_sleep=None,
) -> str:
    """Answer the case's question from its document; returns the reply verbatim.

    Caching is the chat provider's concern: pass a caching provider to get
    request caching.
    """
    messages = case_prompt(case).as_tuple()
    call_params = dict(params or {})
    try:
        return call_with_retries(
            lambda: chat.complete(messages, call_params),
            attempts=retry_attempts,
            sleep=retry_sleep,
        )
    except ProviderError as exc:
        variant = VARIANT_WITHOUT if case.mbc is None else VARIANT_WITH
        raise GenerationError(f"{variant} answer failed: {exc}") from exc


@dataclass(frozen=True)
class Comparison:
    """Both answers for one case, plus the seed fixing their blinded order."""

    answer_without: str
    answer_with: str
    order_seed: int

    def presentation(self) -> tuple[str, str]:
        """Variant labels in the order an annotator should see the answers."""
        if random.Random(self.order_seed).getrandbits(1):
            return (VARIANT_WITH, VARIANT_WITHOUT)
        return (VARIANT_WITHOUT, VARIANT_WITH)

    def presented_answers(self) -> tuple[str, str]:
        order = self.presentation()
        by_variant = {VARIANT_WITHOUT: self.answer_without, VARIANT_WITH: self.answer_with}
        return (by_variant[order[0]], by_variant[order[1]])


def build_comparison(
    case_base: EvidenceCase,
    mbc: str,
    chat,
    *,
    order_seed: int | None = None,
    rng: random.Random | None = None,
    params: dict | None = None,
    retry_attempts: int = 3,
    retry_sleep=None,
) -> Comparison:
    """Answer one case twice, with and without the background check.

    The base case must not already carry a background check; the pair would
    otherwise not share its "without" half.
    """
    if case_base.mbc is not None:
        raise ValidationError("case_base must not already carry a background check")
    if order_seed is None:
        order_seed = (rng or random.Random()).randrange(2**32)

    answer_without = answer_with_evidence(
        case_base, chat, params=params, retry_attempts=retry_attempts, retry_sleep=retry_sleep
    )
    answer_with = answer_with_evidence(
        case_base.with_mbc(mbc),
        chat,
        params=params,
        retry_attempts=retry_attempts,
        retry_sleep=retry_sleep,
    )
    return Comparison(
        answer_without=answer_without, answer_with=answer_with, order_seed=order_seed
    )


def case_to_record(case: EvidenceCase) -> dict:
    record = {"question": case.question, "document": case.document, "domain": case.domain}
    if case.mbc is not None:
        record["mbc"] = case.mbc
    return record


def case_from_record(record: dict) -> EvidenceCase:
    try:
        return EvidenceCase(
            question=record["question"],
            document=record["document"],
            domain=record["domain"],
            mbc=record.get("mbc"),
        )
    except KeyError as exc:
        raise MalformedInputError(f"evidence case record missing key: {exc}") from exc
    except TypeError as exc:
        raise MalformedInputError(f"malformed evidence case record: {exc}") from exc


def answer_to_record(
    case: EvidenceCase, answer: str, *, model: str | None = None, params: dict | None = None
) -> dict:
    """Exportable record for a single-variant answer."""
    variant = PROMPT_WITHOUT_MBC if case.mbc is None else PROMPT_WITH_MBC
    return {
        "case": case_to_record(case),
        "answer": answer,
        "prompt_checksums": {variant: PROMPT_CHECKSUMS[variant]},
        "model": model,
        "params": dict(params or {}),
    }


def comparison_to_record(
    case: EvidenceCase, comparison: Comparison, *, model: str | None = None, params: dict | None = None
) -> dict:
    """Exportable record: the case, both answers, and the blinded order."""
    return {
        "case": case_to_record(case),
        "answer_without": comparison.answer_without,
        "answer_with": comparison.answer_with,
        "order_seed": comparison.order_seed,
        "presentation": list(comparison.presentation()),
        "prompt_checksums": {
            PROMPT_WITHOUT_MBC: PROMPT_CHECKSUMS[PROMPT_WITHOUT_MBC],
            PROMPT_WITH_MBC: PROMPT_CHECKSUMS[PROMPT_WITH_MBC],
        },
        "model": model,
        "params": dict(params or {}),
    }
