"""Atomic-fact scoring of a generated background check against a gold one.

The gold text is decomposed into template-based atomic facts, each fact is
judged by a 4-vote entailment ensemble, and a generated text is scored by
how often it receives the same verdicts (fact recall) and how often the two
texts take opposite polarities on the same fact (error rate).
"""

from __future__ import annotations

import logging
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field

from .assets import fact_template_patterns, prompt_messages
from .cache import call_with_retries
from .corpus import BackgroundCheck
from .errors import MalformedInputError, ProviderError, ValidationError
from .providers import ChatProvider, Messages
from .synthesis import render_prompt
from .textutil import nfc

log = logging.getLogger(__name__)

TRUE = "TRUE"
FALSE = "FALSE"
NEI = "NEI"
LABELS = (TRUE, FALSE, NEI)

# The long form appears in prompts and raw judge responses; NEI is the
# canonical short form everywhere else.
NEI_RESPONSE = "NOT ENOUGH EVIDENCE"

_VERDICT_RE = re.compile(r"\b(NOT ENOUGH EVIDENCE|TRUE|FALSE)\b")

VOTES_PER_FACT = 4
_LENGTH_CAP_FACTOR = 3


@dataclass(frozen=True)
class FactTemplate:
    """One of the 42 fact patterns, identified by its 1-based position."""

    template_id: int
    pattern: str

    def __post_init__(self) -> None:
        if self.template_id < 1:
            raise ValidationError("template_id must be positive")
        if not self.pattern.strip():
            raise ValidationError("template pattern must be non-empty")

    @property
    def has_blank(self) -> bool:
        return "_" in self.pattern

    def instantiate_name(self, source_name: str) -> str:
        return self.pattern.replace("{source name}", source_name)


def load_fact_templates() -> tuple[FactTemplate, ...]:
    patterns = fact_template_patterns()
    return tuple(
        FactTemplate(template_id=i, pattern=p) for i, p in enumerate(patterns, start=1)
    )


@dataclass(frozen=True)
class EntailmentVerdict:
    label: str
    votes: tuple[str, ...]
    rationales: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "votes", tuple(self.votes))
        object.__setattr__(self, "rationales", tuple(self.rationales))
        if self.label not in LABELS:
            raise ValidationError(f"unknown verdict label: {self.label!r}")
        if not self.votes:
            raise ValidationError("verdict needs at least one vote")
        for vote in self.votes:
            if vote not in LABELS:
                raise ValidationError(f"unknown vote label: {vote!r}")
        if len(self.rationales) != len(self.votes):
            raise ValidationError("one rationale per vote required")


@dataclass(frozen=True)
class AtomicFact:
    template_id: int
    statement: str
    gold_verdict: EntailmentVerdict

    def __post_init__(self) -> None:
        if not self.statement.strip():
            raise ValidationError("fact statement must be non-empty")


def majority_label(votes: tuple[str, ...] | list[str]) -> str:
    """Strict-majority class of the votes; any tie for the top resolves to NEI."""
    counts = Counter(votes)
    ranked = counts.most_common()
    if not ranked:
        return NEI
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return NEI
    return ranked[0][0]


def parse_verdict(response: str) -> str:
    """Map a raw judge response to a label via its last standalone verdict token."""
    matches = _VERDICT_RE.findall(response)
    if not matches:
        return NEI
    last = matches[-1]
    return NEI if last == NEI_RESPONSE else last


def _normalized_tokens(text: str) -> list[str]:
    tokens = []
    for raw in nfc(text).casefold().split():
        cleaned = "".join(ch for ch in raw if ch.isalnum())
        if cleaned:
            tokens.append(cleaned)
    return tokens


def _contains_sublist(haystack: list[str], needle: list[str]) -> bool:
    if not needle:
        return True
    n = len(needle)
    for i in range(len(haystack) - n + 1):
        if haystack[i : i + n] == needle:
            return True
    return False


_NEGATORS = frozenset({"not", "never"})


def _without_negators(tokens: list[str]) -> tuple[list[str], int]:
    kept = [t for t in tokens if t not in _NEGATORS]
    return kept, len(tokens) - len(kept)


def oracle_label(premise: str, statement: str) -> tuple[str, str]:
    """Deterministic entailment rule: (label, reason).

    TRUE when the normalized statement occurs verbatim in the normalized
    premise; FALSE when the two sides differ only by a "not"/"never" token
    on either side; NEI otherwise.  Normalization casefolds and strips
    punctuation, so quoting and sentence-final periods do not matter.
    """
    p_tokens = _normalized_tokens(premise)
    s_tokens = _normalized_tokens(statement)
    if _contains_sublist(p_tokens, s_tokens):
        return TRUE, "statement found in premise"
    s_stripped, s_negs = _without_negators(s_tokens)
    if s_negs and _contains_sublist(p_tokens, s_stripped):
        return FALSE, "statement negates a claim made by the premise"
    p_stripped, p_negs = _without_negators(p_tokens)
    if p_negs and _contains_sublist(p_stripped, s_tokens):
        return FALSE, "premise negates the statement"
    return NEI, "no normalized match"


class OracleJudge:
    """Rule-based judge for tests and CI; emits 4 identical votes."""

    def judge(self, premise: str, statement: str) -> EntailmentVerdict:
        if not premise.strip() or not statement.strip():
            raise ValidationError("judge requires non-empty premise and statement")
        label, reason = oracle_label(premise, statement)
        rationale = f"oracle: {reason}"
        return EntailmentVerdict(
            label=label,
            votes=(label,) * VOTES_PER_FACT,
            rationales=(rationale,) * VOTES_PER_FACT,
        )


class ChatJudge:
    """Entailment judge backed by a chat provider, majority over 4 samples.

    Each vote is issued with a distinct `seed` parameter so cached runs
    store the four samples separately.  A vote whose provider call fails
    after retries is recorded as NEI rather than aborting the fact.
    """

    def __init__(
        self,
        chat: ChatProvider,
        temperature: float = 1.0,
        votes: int = VOTES_PER_FACT,
        retry_attempts: int = 3,
        retry_sleep=None,
    ) -> None:
        if votes < 1:
            raise ValidationError("votes must be positive")
        self.chat = chat
        self.temperature = temperature
        self.votes = votes
        self.retry_attempts = retry_attempts
        self.retry_sleep = retry_sleep

    def _one_vote(self, messages: Messages, seed: int) -> tuple[str, str]:
        params = {"temperature": self.temperature, "seed": seed}
        try:
            response = call_with_retries(
                lambda: self.chat.complete(messages, params),
                attempts=self.retry_attempts,
                sleep=self.retry_sleep,
            )
        except ProviderError as exc:
            log.warning("entailment vote %d failed: %s", seed, exc)
            return NEI, f"judge call failed after retries: {exc}"
        return parse_verdict(response), response

    def judge(self, premise: str, statement: str) -> EntailmentVerdict:
        if not premise.strip() or not statement.strip():
            raise ValidationError("judge requires non-empty premise and statement")
        rendered = render_prompt(
            "entailment", {"hypothesis": statement, "premise": premise}
        )
        messages = rendered.as_tuple()
        votes = []
        rationales = []
        for seed in range(self.votes):
            vote, rationale = self._one_vote(messages, seed)
            votes.append(vote)
            rationales.append(rationale)
        return EntailmentVerdict(
            label=majority_label(votes), votes=tuple(votes), rationales=tuple(rationales)
        )


def judge_entailment(premise: str, statement: str, judge) -> EntailmentVerdict:
    """Judge one statement against one premise.

    `judge` may be anything with a `.judge(premise, statement)` method, or a
    bare chat provider, which gets wrapped in a default ChatJudge.
    """
    if not hasattr(judge, "judge"):
        judge = ChatJudge(judge)
    return judge.judge(premise, statement)


def instantiate_templates(
    gold: BackgroundCheck,
    chat: ChatProvider,
    judge=None,
    templates: tuple[FactTemplate, ...] | None = None,
) -> tuple[AtomicFact, ...]:
    """Turn a gold background check into scorable atomic facts.

    Every template is sent through the fill-in prompt against the gold text.
    Responses that are empty, keep a blank marker, or balloon past 3x the
    template length are discarded; the survivors are judged against the gold
    text and kept only when the verdict is TRUE or FALSE.  A provider failure
    skips that one template instead of aborting the source.
    """
    if judge is None:
        judge = ChatJudge(chat)
    if templates is None:
        templates = load_fact_templates()
    gold_text = gold.full_text
    facts = []
    for template in templates:
        question = template.instantiate_name(gold.source_name)
        rendered = render_prompt(
            "fill_in", {"template": question, "gold background check": gold_text}
        )
        try:
            response = chat.complete(rendered.as_tuple(), {})
        except ProviderError as exc:
            log.warning(
                "fill-in failed for template %d on %s: %s",
                template.template_id,
                gold.source_name,
                exc,
            )
            continue
        statement = response.strip()
        if not statement or "_" in statement:
            continue
        if len(statement) > _LENGTH_CAP_FACTOR * len(question):
            continue
        try:
            verdict = judge_entailment(gold_text, statement, judge)
        except ProviderError as exc:
            log.warning(
                "gold judging failed for template %d on %s: %s",
                template.template_id,
                gold.source_name,
                exc,
            )
            continue
        if verdict.label == NEI:
            continue
        facts.append(
            AtomicFact(
                template_id=template.template_id,
                statement=statement,
                gold_verdict=verdict,
            )
        )
    return tuple(facts)


@dataclass(frozen=True)
class FactOutcome:
    fact: AtomicFact
    predicted: EntailmentVerdict

    @property
    def gold_label(self) -> str:
        return self.fact.gold_verdict.label

    @property
    def predicted_label(self) -> str:
        return self.predicted.label

    @property
    def agreed(self) -> bool:
        return self.gold_label == self.predicted_label

    @property
    def polarity_flip(self) -> bool:
        return {self.gold_label, self.predicted_label} == {TRUE, FALSE}


RECALL_SCOPE_ALL = "all"
RECALL_SCOPE_GOLD_TRUE = "gold-true"


@dataclass(frozen=True)
class FactScoreReport:
    source_name: str
    n_facts: int
    fact_recall: float
    error_rate: float
    outcomes: tuple[FactOutcome, ...] = field(default_factory=tuple)
    degenerate: bool = False
    recall_scope: str = RECALL_SCOPE_ALL

    def __post_init__(self) -> None:
        object.__setattr__(self, "outcomes", tuple(self.outcomes))
        if self.n_facts != len(self.outcomes):
            raise ValidationError("n_facts must match the outcome count")
        if not 0.0 <= self.fact_recall <= 1.0:
            raise ValidationError("fact_recall out of range")
        if not 0.0 <= self.error_rate <= 1.0:
            raise ValidationError("error_rate out of range")
        if self.degenerate != (self.n_facts == 0):
            raise ValidationError("degenerate flag must track n_facts == 0")
        if self.recall_scope not in (RECALL_SCOPE_ALL, RECALL_SCOPE_GOLD_TRUE):
            raise ValidationError(f"unknown recall scope: {self.recall_scope!r}")
        # Agreement and polarity flips are disjoint fact sets, so over a
        # shared denominator the two rates cannot sum past 1.
        if self.recall_scope == RECALL_SCOPE_ALL:
            if self.fact_recall + self.error_rate > 1.0 + 1e-9:
                raise ValidationError("fact_recall + error_rate exceeds 1")


def score_outcomes(pairs: list[tuple[str, str]]) -> tuple[float, float]:
    """(fact_recall, error_rate) over (gold label, predicted label) pairs."""
    if not pairs:
        return 0.0, 0.0
    agreed = sum(1 for gold, pred in pairs if gold == pred)
    flipped = sum(1 for gold, pred in pairs if {gold, pred} == {TRUE, FALSE})
    n = len(pairs)
    return agreed / n, flipped / n


def score_pair(
    source_name: str,
    facts: tuple[AtomicFact, ...] | list[AtomicFact],
    predicted_body: str,
    judge,
    recall_gold_true_only: bool = False,
) -> FactScoreReport:
    """Score a generated text against already-instantiated gold facts.

    An empty predicted body cannot entail anything, so every fact is scored
    NEI against it rather than raising.  With `recall_gold_true_only`, recall
    is computed over gold-TRUE facts alone; the error rate keeps the full
    denominator either way.
    """
    outcomes = []
    for fact in facts:
        if not predicted_body.strip():
            predicted = EntailmentVerdict(
                label=NEI,
                votes=(NEI,) * VOTES_PER_FACT,
                rationales=("empty predicted text",) * VOTES_PER_FACT,
            )
        else:
            predicted = judge_entailment(predicted_body, fact.statement, judge)
        outcomes.append(FactOutcome(fact=fact, predicted=predicted))

    n = len(outcomes)
    if n == 0:
        return FactScoreReport(
            source_name=source_name,
            n_facts=0,
            fact_recall=0.0,
            error_rate=0.0,
            outcomes=(),
            degenerate=True,
            recall_scope=RECALL_SCOPE_GOLD_TRUE
            if recall_gold_true_only
            else RECALL_SCOPE_ALL,
        )

    error_rate = sum(1 for o in outcomes if o.polarity_flip) / n
    if recall_gold_true_only:
        gold_true = [o for o in outcomes if o.gold_label == TRUE]
        recall = (
            sum(1 for o in gold_true if o.agreed) / len(gold_true) if gold_true else 0.0
        )
        scope = RECALL_SCOPE_GOLD_TRUE
    else:
        recall = sum(1 for o in outcomes if o.agreed) / n
        scope = RECALL_SCOPE_ALL
    return FactScoreReport(
        source_name=source_name,
        n_facts=n,
        fact_recall=recall,
        error_rate=error_rate,
        outcomes=tuple(outcomes),
        degenerate=False,
        recall_scope=scope,
    )


@dataclass(frozen=True)
class CorpusSummary:
    n_sources: int
    n_degenerate: int
    fact_recall: float | None
    error_rate: float | None

    def __post_init__(self) -> None:
        if self.n_sources < 0 or self.n_degenerate < 0:
            raise ValidationError("counts must be non-negative")
        if self.n_degenerate > self.n_sources:
            raise ValidationError("degenerate count exceeds source count")


def aggregate(reports: list[FactScoreReport] | tuple[FactScoreReport, ...]) -> CorpusSummary:
    """Macro-average recall and error over non-degenerate reports."""
    scored = [r for r in reports if not r.degenerate]
    n_degenerate = len(reports) - len(scored)
    if not scored:
        return CorpusSummary(
            n_sources=len(reports),
            n_degenerate=n_degenerate,
            fact_recall=None,
            error_rate=None,
        )
    return CorpusSummary(
        n_sources=len(reports),
        n_degenerate=n_degenerate,
        fact_recall=sum(r.fact_recall for r in scored) / len(scored),
        error_rate=sum(r.error_rate for r in scored) / len(scored),
    )


def _verdict_to_record(verdict: EntailmentVerdict) -> dict:
    return {
        "label": verdict.label,
        "votes": list(verdict.votes),
        "rationales": list(verdict.rationales),
    }


def _verdict_from_record(record: dict) -> EntailmentVerdict:
    try:
        return EntailmentVerdict(
            label=record["label"],
            votes=tuple(record["votes"]),
            rationales=tuple(record["rationales"]),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedInputError(f"bad verdict record: {exc}") from exc


def report_to_record(report: FactScoreReport) -> dict:
    """JSON-ready form of a report, with the full per-fact audit trail."""
    return {
        "source_name": report.source_name,
        "n_facts": report.n_facts,
        "fact_recall": report.fact_recall,
        "error_rate": report.error_rate,
        "degenerate": report.degenerate,
        "recall_scope": report.recall_scope,
        "facts": [
            {
                "template_id": o.fact.template_id,
                "statement": o.fact.statement,
                "gold": _verdict_to_record(o.fact.gold_verdict),
                "predicted": _verdict_to_record(o.predicted),
            }
            for o in report.outcomes
        ],
    }


def report_from_record(record: dict) -> FactScoreReport:
    try:
        outcomes = tuple(
            FactOutcome(
                fact=AtomicFact(
                    template_id=f["template_id"],
                    statement=f["statement"],
                    gold_verdict=_verdict_from_record(f["gold"]),
                ),
                predicted=_verdict_from_record(f["predicted"]),
            )
            for f in record["facts"]
        )
        return FactScoreReport(
            source_name=record["source_name"],
            n_facts=record["n_facts"],
            fact_recall=record["fact_recall"],
            error_rate=record["error_rate"],
            outcomes=outcomes,
            degenerate=record["degenerate"],
            recall_scope=record.get("recall_scope", RECALL_SCOPE_ALL),
        )
    except (KeyError, TypeError) as exc:
        raise MalformedInputError(f"bad report record: {exc}") from exc
