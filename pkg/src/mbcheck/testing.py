"""Deterministic provider fakes and corpus builders.

Everything here is offline and pure: the same construction arguments
always produce the same responses, which is what lets the full pipeline
run byte-identically in tests and in the replay mode of the CLI.
"""

from __future__ import annotations

import random
import re
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import BackgroundCheck, parse_mbc_file
from .errors import ProviderError, ProviderRateLimited, ValidationError
from .evaluation import NEI, NEI_RESPONSE, EntailmentVerdict, VOTES_PER_FACT, oracle_label
from .retrieval import build_query_plan
from .textutil import slugify


class FixtureSearchProvider:
    """Serves canned result rows per query text, in fixed order.

    `fixtures` maps query text to a list of {url, title, snippet, body}
    rows (body is optional and served through the fixture fetcher).
    `failures` injects that many transport errors per query before
    succeeding; `rate_limited` queries always raise the quota error.
    """

    provider_id = "fixture-search"

    def __init__(
        self,
        fixtures: dict[str, list[dict]],
        page_size: int = 10,
        failures: dict[str, int] | None = None,
        rate_limited: set[str] | None = None,
    ) -> None:
        self.fixtures = fixtures
        self.page_size = page_size
        self.calls = 0
        self._failures = dict(failures or {})
        self._rate_limited = set(rate_limited or ())

    def search_page(self, query_text: str, page: int) -> list[dict]:
        self.calls += 1
        if query_text in self._rate_limited:
            raise ProviderRateLimited(f"quota exhausted for {query_text!r}")
        if self._failures.get(query_text, 0) > 0:
            self._failures[query_text] -= 1
            raise ProviderError(f"injected failure for {query_text!r}")
        rows = self.fixtures.get(query_text, [])
        start = (page - 1) * self.page_size
        return [
            {"url": r["url"], "title": r.get("title", ""), "snippet": r.get("snippet", "")}
            for r in rows[start : start + self.page_size]
        ]


class FixtureFetcher:
    """Returns page bodies recorded in the search fixtures."""

    def __init__(self, bodies: dict[str, str]) -> None:
        self.bodies = bodies
        self.calls = 0

    def fetch(self, url: str) -> str:
        self.calls += 1
        if url not in self.bodies:
            raise ProviderError(f"no fixture body for {url}")
        return self.bodies[url]


def fetcher_for(fixtures: dict[str, list[dict]]) -> FixtureFetcher:
    bodies = {}
    for rows in fixtures.values():
        for row in rows:
            if "body" in row:
                bodies[row["url"]] = row["body"]
    return FixtureFetcher(bodies)


# Question keyword, context phrase, confidence. The span is whatever
# follows the phrase up to the end of the sentence.
DEFAULT_EXTRACTION_RULES = (
    ("who owns", "is owned by", 0.95),
    ("funded", "is funded through", 0.9),
    ("what is the political leaning", "has a political leaning of", 0.85),
    ("what is", "is a", 0.8),
    ("failed any fact-checks", "failed a fact-check for an article titled", 0.9),
    ("retracted any articles", "printed a retraction after failing a fact-check for an article titled", 0.92),
    ("retracted any articles", "retracted an article about", 0.9),
)

_SPAN_STOP = ".?!\n"


class RuleBasedExtractor:
    """Deterministic extractive QA: each rule pairs a question keyword
    with a context phrase; the answer is the text after the phrase up to
    the sentence end. Spans are verbatim substrings of the context."""

    provider_id = "rule-qa"

    def __init__(
        self,
        rules=DEFAULT_EXTRACTION_RULES,
        max_context_chars: int = 6000,
        fail_first: int = 0,
    ) -> None:
        self.rules = tuple(rules)
        self.max_context_chars = max_context_chars
        self.calls = 0
        self._fail_countdown = fail_first

    def extract(self, question: str, context: str) -> tuple[str, int, float] | None:
        self.calls += 1
        if self._fail_countdown > 0:
            self._fail_countdown -= 1
            raise ProviderError("injected extraction failure")
        question_folded = question.casefold()
        context_folded = context.casefold()
        for keyword, phrase, score in self.rules:
            if keyword not in question_folded:
                continue
            at = context_folded.find(phrase.casefold())
            if at < 0:
                continue
            start = at + len(phrase)
            end = len(context)
            for stop in _SPAN_STOP:
                pos = context.find(stop, start)
                if pos != -1:
                    end = min(end, pos)
            span = context[start:end]
            leading = len(span) - len(span.lstrip())
            span = span.strip()
            if not span:
                return None
            return span, start + leading, score
        return None


class FixedExtractor:
    """Returns one canned verdict for every question."""

    provider_id = "fixed-qa"

    def __init__(
        self,
        answer: str | None,
        score: float = 1.0,
        start: int = 0,
        max_context_chars: int = 6000,
    ) -> None:
        self.answer = answer
        self.score = score
        self.start = start
        self.max_context_chars = max_context_chars
        self.calls = 0

    def extract(self, question: str, context: str) -> tuple[str, int, float] | None:
        self.calls += 1
        if self.answer is None:
            return None
        return self.answer, self.start, self.score


@dataclass
class FakeClock:
    """Manual clock + sleep pair for rate-limiter and backoff tests."""

    now: float = 0.0
    sleeps: list[float] = field(default_factory=list)

    def clock(self) -> float:
        return self.now

    def sleep(self, seconds: float) -> None:
        self.sleeps.append(seconds)
        self.now += seconds


def solve_fill_in(template: str, gold_text: str) -> str:
    """Fill a template's blanks from the first gold sentence it matches.

    A blank matches lazily within one sentence, so "X owns Y" picks up the
    shortest owner span.  When nothing matches, the template comes back
    unchanged; a template without blanks also comes back unchanged.
    """
    if "_" not in template:
        return template
    pattern = re.compile(re.escape(template).replace("_", "(.+?)"))
    for line in gold_text.splitlines():
        candidate = line.strip()
        if not candidate:
            continue
        if candidate.endswith("."):
            candidate = candidate[:-1]
        if pattern.fullmatch(candidate):
            return candidate
    return template


_CLAIM_RE = re.compile(
    r'The claim is: "(?P<hypothesis>.*?)"\.\n'
    r'The text follows below:\n"(?P<premise>.*)"\.\n\n'
    r"(?P=hypothesis)\? Thinking step by step",
    re.DOTALL,
)
_QA_PAIR_RE = re.compile(r"Q: (.*)\nA: (.*) \(source: [^)]*\)")
_ITEM_RE = re.compile(r"^\s*\d+\.", re.MULTILINE)


def _between(text: str, head: str, tail: str) -> str:
    start = text.find(head)
    end = text.rfind(tail)
    if start < 0 or end < 0 or end < start:
        raise ProviderError("mock chat: expected prompt markers missing")
    return text[start + len(head) : end]


def reply_sentence(source_name: str, question: str, answer: str) -> str:
    """The declarative form a search answer takes inside an updated draft."""
    if question.startswith("Who owns"):
        return f"{answer} owns {source_name}."
    if question.startswith("How is") and "funded" in question:
        return f"{source_name} is funded through {answer}."
    if question.startswith("What is the political leaning"):
        return f"{source_name} has an editorial bias towards {answer}."
    if question.startswith("What is"):
        return f"{source_name} is a {answer}."
    if "failed any fact-checks" in question:
        return f"{source_name} failed a fact-check for an article titled {answer}."
    if "retracted any articles" in question:
        return (
            f"{source_name} printed a retraction after failing a fact-check "
            f"for an article titled {answer}."
        )
    return f"{source_name}: {answer}."


class MockChatProvider:
    """Chat fake that recognizes every shipped prompt and answers in kind.

    Initial drafts get a one-line stub; update prompts replay the previous
    draft and append each question-answer pair as a new itemized line;
    fill-in prompts are solved against the quoted gold text; entailment
    prompts are answered by the deterministic oracle rule, unless
    `entailment_votes` scripts per-seed labels for a hypothesis substring.
    """

    provider_id = "mock-chat"
    model = "mock-chat-1"

    def __init__(
        self,
        entailment_votes: dict[str, tuple[str, ...]] | None = None,
        fail_first: int = 0,
    ) -> None:
        self.entailment_votes = dict(entailment_votes or {})
        self.fail_first = fail_first
        self.calls = 0
        self.routes: list[str] = []

    def complete(self, messages, params) -> str:
        self.calls += 1
        if self.fail_first > 0:
            self.fail_first -= 1
            raise ProviderError("mock chat: injected failure")
        user_messages = [content for role, content in messages if role == "user"]
        if not user_messages:
            raise ProviderError("mock chat: no user message")
        last_user = user_messages[-1]
        if 'The claim is: "' in last_user:
            self.routes.append("entailment")
            return self._entailment(last_user, params)
        if "The question is:\n" in last_user:
            self.routes.append("fill_in")
            return self._fill_in(last_user)
        if "Google search has revealed some new information:" in last_user:
            self.routes.append("update")
            return self._update(messages, last_user)
        if "Using the provided evidence, answer the following:" in last_user:
            self.routes.append("qa")
            return self._qa(last_user)
        if "Build a background check for the news source" in last_user:
            self.routes.append("initial")
            return self._initial(last_user)
        raise ProviderError("mock chat: unrecognized prompt")

    def _entailment(self, last_user: str, params) -> str:
        match = _CLAIM_RE.search(last_user)
        if not match:
            raise ProviderError("mock chat: malformed entailment prompt")
        hypothesis = match.group("hypothesis")
        premise = match.group("premise")
        label = None
        reason = ""
        for key, votes in self.entailment_votes.items():
            if key in hypothesis:
                seed = int(params.get("seed", 0)) if params else 0
                label = votes[seed % len(votes)]
                reason = "scripted vote"
                break
        if label is None:
            label, reason = oracle_label(premise, hypothesis)
        word = NEI_RESPONSE if label == NEI else label
        return f"Checking the claim against the text: {reason}. {word}"

    def _fill_in(self, last_user: str) -> str:
        template = _between(
            last_user, "The question is:\n", "\n\nThe text follows below:\n"
        )
        tail = last_user[
            last_user.rfind("\n\nThe text follows below:\n")
            + len("\n\nThe text follows below:\n") :
        ]
        gold_text = tail[: tail.rfind("\n\nFill in the blanks in the question,")]
        return solve_fill_in(template, gold_text)

    def _update(self, messages, last_user: str) -> str:
        assistant_messages = [c for role, c in messages if role == "assistant"]
        previous = assistant_messages[-1].strip() if assistant_messages else ""
        block = _between(
            last_user,
            "Google search has revealed some new information:\n\n",
            '\n\nUpdate your background check for "',
        )
        name_match = re.search(
            r'Update your background check for "(.*?)" using', last_user
        )
        if not name_match:
            raise ProviderError("mock chat: malformed update prompt")
        name = name_match.group(1)
        next_item = len(_ITEM_RE.findall(previous)) + 1
        lines = [previous] if previous else []
        for question, answer in _QA_PAIR_RE.findall(block):
            lines.append(f"{next_item}. {reply_sentence(name, question, answer)}")
            next_item += 1
        return "**Background check**\n" + "\n".join(lines)

    def _initial(self, last_user: str) -> str:
        match = re.search(r'news source "(.*?)"\.', last_user)
        if not match:
            raise ProviderError("mock chat: malformed initial prompt")
        return f"**Background check**\n1. {match.group(1)} is a news organization."

    def _qa(self, last_user: str) -> str:
        question_match = re.search(r'answer the following: "(.*?)"\.\n', last_user)
        domain_match = re.search(r'This information comes from "(.*?)"\.', last_user)
        if not question_match or not domain_match:
            raise ProviderError("mock chat: malformed qa prompt")
        domain = domain_match.group(1)
        evidence = _between(
            last_user,
            'The following evidence is provided: "',
            "\n\nThis information comes from",
        )
        first_sentence = evidence.split(".")[0].strip() or "the evidence is empty"
        background = None
        bg_head = 'may be relevant:\n"'
        if bg_head in last_user:
            background = _between(last_user, bg_head, '"\n\nYour answer')
        if background is None:
            trust = (
                f"Without a background check on {domain}, verify this claim "
                f"against a second source."
            )
        elif "failed a fact-check" in background or "printed a retraction" in background:
            trust = f"Given its fact-check record, treat {domain} with caution."
        else:
            trust = (
                f"The background check raises no red flags, so {domain} can be "
                f"treated as generally reliable."
            )
        return f"According to the evidence, {first_sentence}. {trust}"


class ScriptedJudge:
    """Entailment judge that labels statements by substring lookup."""

    def __init__(self, labels: dict[str, str], default: str = NEI) -> None:
        self.labels = dict(labels)
        self.default = default
        self.calls = 0

    def judge(self, premise: str, statement: str) -> EntailmentVerdict:
        self.calls += 1
        label = self.default
        for key, scripted in self.labels.items():
            if key in statement:
                label = scripted
                break
        return EntailmentVerdict(
            label=label,
            votes=(label,) * VOTES_PER_FACT,
            rationales=("scripted",) * VOTES_PER_FACT,
        )


_CITY_PREFIXES = (
    "Ash", "Bright", "Cedar", "Dun", "Elm", "Fair", "Glen", "Harrow",
    "Iron", "Juniper", "Kings", "Larch", "Maple", "North", "Oak",
)
_CITY_SUFFIXES = ("field", "bridge", "port", "vale", "wick", "ford", "mere", "holm")
_PAPER_NOUNS = (
    "Courier", "Tribune", "Gazette", "Herald", "Chronicle", "Observer",
    "Examiner", "Register", "Dispatch", "Sentinel", "Standard", "Times",
    "Post", "Journal", "Review", "Record", "Bulletin", "Ledger", "Monitor",
    "Beacon", "Argus", "Mercury", "Telegraph", "Clarion", "Banner",
    "Inquirer", "Mirror", "Voice", "Star", "Sun", "Globe", "Press",
    "Report", "Digest", "Wire", "Signal", "Current", "Outlook", "Spectator",
    "Pioneer", "Advocate", "Courant", "Enterprise", "Gleaner",
    "Intelligencer", "Vindicator", "Plainsman", "Forum", "Citizen",
    "Patriot", "Statesman", "Independent", "Guardian", "Meteor", "Comet",
    "Lantern",
)
_FIRST_NAMES = (
    "Mira", "Jonas", "Priya", "Tomas", "Ingrid", "Kofi", "Lena", "Marcus",
    "Noor", "Pavel", "Quinn", "Rosa", "Stellan", "Tessa", "Umar", "Vera",
    "Wendell", "Ximena", "Yusuf", "Zofia", "Anders", "Beatriz", "Callum",
    "Darya",
)
_LAST_NAMES = (
    "Calloway", "Brandt", "Okafor", "Lindqvist", "Marchetti", "Novak",
    "Reyes", "Sorensen", "Takahashi", "Ulrich", "Vance", "Whitfield",
    "Yamada", "Zielinski", "Abara", "Bergström", "Castellanos", "Duval",
    "Eriksen", "Ferreira", "Grimaldi", "Holloway", "Iversen", "Jablonski",
)
_KINDS = (
    "regional daily newspaper", "community newsletter",
    "nonprofit investigative outlet", "weekly commentary magazine",
    "local broadcast affiliate", "digital politics blog",
    "business wire service", "satirical weekly",
)
_LEANINGS = (
    "the political left", "the political right", "the political center",
    "agrarian populism", "free-market liberalism",
    "municipal reform movements",
)
_FUNDINGS = (
    "reader donations and grants", "subscription revenue", "a family trust",
    "regional advertising sales", "a university endowment", "membership fees",
)
_REVENUE_BASES = ("advertising", "subscriptions", "donations")
_TOPICS = (
    "municipal affairs", "regional agriculture", "coastal industry",
    "state politics", "technology policy", "public health",
)
_TITLE_OPENERS = (
    "Hidden", "Silent", "Broken", "Vanishing", "Borrowed", "Empty",
    "Frozen", "Paper",
)
_TITLE_SUBJECTS = (
    "Harbor", "Ledger", "Votes", "Bridges", "Wells", "Orchard", "Signals",
    "Registry",
)
_TITLE_CLOSERS = (
    "Scandal", "Mystery", "Affair", "Inquiry", "Report", "Controversy",
    "Question", "Fallout",
)
_FILLERS = (
    "The newsroom maintains a public corrections page and reviews reader"
    " complaints during a standing quarterly meeting.",
    "Coverage concentrates on municipal budgets, school board elections,"
    " and long-running regional transit planning disputes.",
    "Most articles carry individual bylines, and full interview transcripts"
    " are archived on a searchable companion site.",
    "Editors attend industry workshops on verification practice and keep a"
    " written sourcing standard for contributors.",
    "A small research desk files public records requests and tracks the"
    " resulting documents for ongoing investigations.",
    "Reader submissions pass through two staff reviewers and a style check"
    " before any of them reach publication.",
    "The archive stretches back more than a decade and remains freely"
    " searchable without registration or payment.",
    "A rotating opinion page prints outside contributors alongside staff"
    " columns, each labeled by its origin.",
    "Print circulation figures appear in an annual statement along with a"
    " summary of digital readership trends.",
    "The events calendar lists town halls and candidate forums that staff"
    " moderate throughout the election season.",
)
_PAD_PHRASES = (
    "according to archived editorial notes",
    "as summarized in the public masthead",
    "with additional context from regional press reviews",
    "including links to the underlying primary documents",
    "alongside commentary from local historians",
    "per the published style guide",
    "drawing on municipal meeting minutes",
    "with quarterly transparency summaries",
)


@dataclass(frozen=True)
class SourceProfile:
    """The ground-truth attributes one synthetic source is built around."""

    name: str
    owner: str
    funding: str
    kind: str
    leaning: str
    fact_check_title: str
    retraction_title: str
    revenue_basis: str
    year: int
    topic: str


def source_name_pool() -> tuple[str, ...]:
    return tuple(
        f"{prefix}{suffix} {noun}"
        for prefix in _CITY_PREFIXES
        for suffix in _CITY_SUFFIXES
        for noun in _PAPER_NOUNS
    )


def _draw_title(rng: random.Random) -> str:
    return (
        f"{rng.choice(_TITLE_OPENERS)} {rng.choice(_TITLE_SUBJECTS)}"
        f" {rng.choice(_TITLE_CLOSERS)}"
    )


def make_profile(name: str, rng: random.Random) -> SourceProfile:
    fact_check_title = _draw_title(rng)
    retraction_title = _draw_title(rng)
    while retraction_title == fact_check_title:
        retraction_title = _draw_title(rng)
    return SourceProfile(
        name=name,
        owner=f"{rng.choice(_FIRST_NAMES)} {rng.choice(_LAST_NAMES)}",
        funding=rng.choice(_FUNDINGS),
        kind=rng.choice(_KINDS),
        leaning=rng.choice(_LEANINGS),
        fact_check_title=fact_check_title,
        retraction_title=retraction_title,
        revenue_basis=rng.choice(_REVENUE_BASES),
        year=rng.randint(1994, 2021),
        topic=rng.choice(_TOPICS),
    )


def _planted_sentences(profile: SourceProfile) -> dict[str, str]:
    name = profile.name
    return {
        "launch": (
            f"{name} was launched in {profile.year} as an independent project"
            f" covering {profile.topic}."
        ),
        "kind": f"{name} is a {profile.kind}.",
        "fact_check": (
            f'{name} failed a fact-check for an article titled'
            f' "{profile.fact_check_title}".'
        ),
        "retraction": (
            f"{name} printed a retraction after failing a fact-check for an"
            f' article titled "{profile.retraction_title}".'
        ),
        "owner": f"{profile.owner} owns {name}.",
        "funding": f"{name} is funded through {profile.funding}.",
        "revenue": f"{name} relies on {profile.revenue_basis} for revenue.",
        "leaning": f"{name} has an editorial bias towards {profile.leaning}.",
    }


def _document_text(
    history: list[str], ownership: list[str], bias: list[str]
) -> str:
    parts = ["History", ""]
    parts.extend(history)
    parts.extend(["", "Funded by / Ownership", ""])
    parts.extend(ownership)
    parts.extend(["", "Analysis / Bias", ""])
    parts.extend(bias)
    return "\n".join(parts) + "\n"


def build_record_text(
    profile: SourceProfile, rng: random.Random, target_tokens: int
) -> str:
    """A 17-line on-disk document whose filler lines pad to the token target.

    The planted attribute sentences are never padded; template matching in
    the fill-in fake depends on them staying verbatim.
    """
    planted = _planted_sentences(profile)
    fillers = rng.sample(_FILLERS, 9)
    history = [
        planted["launch"],
        planted["kind"],
        fillers[0],
        planted["fact_check"],
        planted["retraction"],
        fillers[1],
    ]
    ownership = [
        planted["owner"],
        planted["funding"],
        planted["revenue"],
        fillers[2],
        fillers[3],
    ]
    bias = [planted["leaning"]] + fillers[4:9]

    sections = [history, ownership, bias]
    filler_slots = [(0, 2), (0, 5), (1, 3), (1, 4), (2, 1), (2, 2), (2, 3), (2, 4), (2, 5)]
    tokens = sum(len(line.split()) for block in sections for line in block)
    slot = 0
    while tokens < target_tokens:
        section_i, line_i = filler_slots[slot % len(filler_slots)]
        phrase = rng.choice(_PAD_PHRASES)
        line = sections[section_i][line_i]
        sections[section_i][line_i] = f"{line[:-1]}, {phrase}."
        tokens += len(phrase.split())
        slot += 1
    return _document_text(history, ownership, bias)


def make_synthetic_corpus(
    root: str | Path,
    counts: tuple[int, int, int] = (5209, 500, 1000),
    seed: int = 20817,
) -> Path:
    """Write a full synthetic dataset tree: checks/*.txt plus splits.tsv.

    Every record is 17 body lines carrying one planted sentence for each
    core attribute (owner, funding, kind, leaning, two failed fact-checks,
    revenue basis) padded to roughly 300 whitespace tokens.
    """
    root = Path(root)
    checks_dir = root / "checks"
    checks_dir.mkdir(parents=True, exist_ok=True)
    names = list(source_name_pool())
    total = sum(counts)
    if total > len(names):
        raise ValidationError(
            f"name pool holds {len(names)} names, {total} requested"
        )
    shuffle_rng = random.Random(f"mbc-corpus:{seed}")
    shuffle_rng.shuffle(names)
    rows = []
    for index, name in enumerate(names[:total]):
        if index < counts[0]:
            split = "train"
        elif index < counts[0] + counts[1]:
            split = "dev"
        else:
            split = "test"
        rng = random.Random(f"mbc-record:{seed}:{name}")
        profile = make_profile(name, rng)
        text = build_record_text(profile, rng, target_tokens=rng.randint(289, 317))
        (checks_dir / f"{slugify(name)}.txt").write_text(text, encoding="utf-8")
        rows.append(f"{name}\t{split}")
    (root / "splits.tsv").write_text("\n".join(rows) + "\n", encoding="utf-8")
    return root


@dataclass(frozen=True)
class PlantedWorld:
    """Gold records plus aligned search fixtures for end-to-end runs.

    For every source, each of the six standard queries has a fixture page
    whose body states the matching profile attribute in a phrasing the
    rule-based extractor can lift, so a full pipeline run recovers the
    planted facts and a no-retrieval run does not.
    """

    records: tuple[BackgroundCheck, ...]
    profiles: tuple[SourceProfile, ...]
    fixtures: dict[str, list[dict]]


def _fixture_body(profile: SourceProfile, label: str) -> str:
    name = profile.name
    if label == "ownership":
        return (
            f"{name} is owned by {profile.owner}. Corporate filings list the"
            f" outlet among those holdings."
        )
    if label == "funding":
        return (
            f"{name} is funded through {profile.funding}. Annual disclosures"
            f" confirm the arrangement."
        )
    if label == "about":
        return (
            f"{name} is a {profile.kind}. It distributes regional reporting"
            f" under that banner."
        )
    if label == "political-leaning":
        return (
            f"{name} has a political leaning of {profile.leaning}. Media"
            f" monitors have noted the tendency."
        )
    if label == "fact-check":
        return (
            f"{name} failed a fact-check for an article titled"
            f' "{profile.fact_check_title}". Reviewers documented the finding.'
        )
    if label == "retracted-article":
        return (
            f"{name} printed a retraction after failing a fact-check for an"
            f' article titled "{profile.retraction_title}". The editors'
            f" acknowledged the failure."
        )
    raise ValidationError(f"no fixture body for query label {label!r}")


def make_planted_world(n_sources: int = 20, seed: int = 7) -> PlantedWorld:
    names = list(source_name_pool())
    shuffle_rng = random.Random(f"mbc-planted:{seed}")
    shuffle_rng.shuffle(names)
    records = []
    profiles = []
    fixtures: dict[str, list[dict]] = {}
    for name in names[:n_sources]:
        rng = random.Random(f"mbc-planted-record:{seed}:{name}")
        profile = make_profile(name, rng)
        planted = _planted_sentences(profile)
        filler = rng.sample(_FILLERS, 3)
        text = _document_text(
            [
                planted["launch"],
                planted["kind"],
                planted["fact_check"],
                planted["retraction"],
            ],
            [planted["owner"], planted["funding"], planted["revenue"]],
            [planted["leaning"], filler[0], filler[1], filler[2]],
        )
        records.append(parse_mbc_file(text, name).with_split("test"))
        profiles.append(profile)
        slug = slugify(name)
        for item in build_query_plan(name).items:
            fixtures[item.query_text] = [
                {
                    "url": f"https://profiles.example/{slug}/{item.label}",
                    "title": f"{name} {item.label} notes",
                    "snippet": f"Notes on {name} ({item.label}).",
                    "body": _fixture_body(profile, item.label),
                },
                {
                    "url": f"https://mirror.example/{slug}/{item.label}",
                    "title": f"{name} coverage digest",
                    "snippet": f"General digest mentioning {name}.",
                    "body": (
                        "A general digest of regional media coverage with no"
                        " specific claims about any single outlet."
                    ),
                },
            ]
    return PlantedWorld(
        records=tuple(records), profiles=tuple(profiles), fixtures=fixtures
    )
