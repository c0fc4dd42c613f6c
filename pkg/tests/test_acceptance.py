"""Release gate: one test per acceptance criterion, each with its time budget.

Run `pytest -sv tests/test_acceptance.py` to see one printed pass line per
criterion.  The final test is a live end-to-end smoke and only runs when
real provider credentials are present in the environment.
"""

import hashlib
import itertools
import os
import random
import time
from collections import Counter
from pathlib import Path

import pytest

from mbcheck.cache import ResponseCache
from mbcheck.corpus import corpus_stats, load_dataset
from mbcheck.evaluation import (
    FALSE,
    NEI,
    TRUE,
    AtomicFact,
    EntailmentVerdict,
    OracleJudge,
    aggregate,
    instantiate_templates,
    majority_label,
    score_outcomes,
    score_pair,
)
from mbcheck.extraction import ExtractClient
from mbcheck.lexmetrics import lcs_length, meteor, rouge_l
from mbcheck.retrieval import ExclusionRules, SearchClient, SearchResult, apply_exclusions
from mbcheck.synthesis import PipelineConfig, draft_to_record, render_prompt, run_pipeline
from mbcheck.testing import (
    FixtureSearchProvider,
    MockChatProvider,
    RuleBasedExtractor,
    ScriptedJudge,
    fetcher_for,
    make_planted_world,
    make_synthetic_corpus,
)
from mbcheck.textutil import canonical_json, registrable_domain

GOLDEN_DIR = Path(__file__).parent / "golden"

LABELS = (TRUE, FALSE, NEI)


def _stamp(number: int, label: str, t0: float, budget: float | None) -> None:
    elapsed = time.monotonic() - t0
    if budget is not None:
        assert elapsed < budget, f"criterion {number} overran: {elapsed:.1f}s >= {budget}s"
    print(f"criterion {number:02d} PASS ({elapsed:.1f}s): {label}")


def _planted_clients(tmp_path, world):
    cache = ResponseCache(tmp_path / "cache")
    search_client = SearchClient(
        provider=FixtureSearchProvider(world.fixtures),
        cache=cache,
        fetcher=fetcher_for(world.fixtures),
    )
    extract_client = ExtractClient(provider=RuleBasedExtractor(), cache=cache)
    return search_client, extract_client


def test_c01_corpus_fidelity(tmp_path):
    """6,709 records in exact splits with the documented line/token profile."""
    t0 = time.monotonic()
    root = make_synthetic_corpus(tmp_path / "data")
    records = load_dataset(root)
    assert len(records) == 6709

    stats = {s.split: s for s in corpus_stats(records)}
    targets = {
        "train": (5209, 17.1, 305.1),
        "dev": (500, 17.2, 302.2),
        "test": (1000, 17.0, 303.2),
    }
    for split, (count, avg_lines, avg_tokens) in targets.items():
        entry = stats[split]
        assert entry.count == count, f"{split}: {entry.count} != {count}"
        assert abs(entry.avg_lines - avg_lines) <= 1.0, (
            f"{split}: avg lines {entry.avg_lines:.2f} not within 1 of {avg_lines}"
        )
        assert abs(entry.avg_tokens - avg_tokens) <= 0.15 * avg_tokens, (
            f"{split}: avg tokens {entry.avg_tokens:.2f} not within 15% of {avg_tokens}"
        )
    _stamp(1, "corpus counts, splits, and length profile", t0, 30.0)


def test_c02_metric_oracles():
    """LCS against exhaustive subsequence enumeration; hand-checked ROUGE-L
    and METEOR fixtures."""
    t0 = time.monotonic()

    # Every pair of token sequences up to length 8 over a two-token
    # alphabet, against a brute-force oracle that enumerates subsequence
    # sets outright.  Unordered pairs suffice: LCS is symmetric, and the
    # symmetry itself is spot-checked below.
    strings = [
        tuple(bits) for n in range(9) for bits in itertools.product("ab", repeat=n)
    ]
    subs_by_len = []
    for s in strings:
        subs_by_len.append(
            {k: frozenset(itertools.combinations(s, k)) for k in range(len(s) + 1)}
        )
    for i, a in enumerate(strings):
        list_a = list(a)
        buckets_a = subs_by_len[i]
        for j in range(i, len(strings)):
            b = strings[j]
            buckets_b = subs_by_len[j]
            expected = 0
            for k in range(min(len(a), len(b)), 0, -1):
                if not buckets_a[k].isdisjoint(buckets_b[k]):
                    expected = k
                    break
            assert lcs_length(list_a, list(b)) == expected, (a, b)

    rng = random.Random(1105)
    for _ in range(200):
        a = [rng.choice("abc") for _ in range(rng.randrange(9))]
        b = [rng.choice("abc") for _ in range(rng.randrange(9))]
        assert lcs_length(a, b) == lcs_length(b, a)

    rouge_fixtures = [
        ("a b c", "a b c", 1.0),
        ("hello", "hello", 1.0),
        ("the cat sat", "the cat ran", 2 / 3),
        ("a b c d", "a c", 2 / 3),
        ("z a b", "a b", 4 / 5),
        ("a b a b", "a b a", 6 / 7),
        ("a b", "c d", 0.0),
        ("the cat sat on the mat", "the dog sat on the log", 2 / 3),
        ("the cat sat.", "the cat sat", 6 / 7),
        ("x", "x y z w", 2 / 5),
        ("", "anything", 0.0),
        ("anything", "", 0.0),
        ("", "", 0.0),
    ]
    assert len(rouge_fixtures) >= 10
    for cand, ref, expected in rouge_fixtures:
        assert rouge_l(cand, ref) == expected, (cand, ref)

    meteor_fixtures = [
        ("the cat sat down", "the cat sat down", 1 - 0.5 * (1 / 4) ** 3),
        ("the cat", "the cat", 0.9375),
        ("on the mat the cat sat", "the cat sat on the mat", 1 - 0.5 * (2 / 6) ** 3),
        ("the cat", "the cat sat on the mat", 75 / 224),
        ("the cats", "the cat", 0.9375),
        ("aa bb", "cc dd", 0.0),
        ("", "the cat", 0.0),
    ]
    assert len(meteor_fixtures) >= 5
    for cand, ref, expected in meteor_fixtures:
        assert meteor(cand, ref) == pytest.approx(expected, abs=1e-9), (cand, ref)

    _stamp(2, "lcs_length exhaustive to length 8; rouge/meteor fixtures", t0, 10.0)


def test_c03_majority_vote():
    """Unanimity, permutation invariance over all 81 vote tuples, ties to NEI."""
    t0 = time.monotonic()
    for votes in itertools.product(LABELS, repeat=4):
        label = majority_label(votes)

        # Independent restatement of the rule: unique most-common label,
        # otherwise NEI.
        counts = Counter(votes)
        top = max(counts.values())
        leaders = [name for name, count in counts.items() if count == top]
        assert label == (leaders[0] if len(leaders) == 1 else NEI), votes

        if len(set(votes)) == 1:
            assert label == votes[0]
        for permuted in itertools.permutations(votes):
            assert majority_label(permuted) == label, (votes, permuted)

    for split_votes in set(itertools.permutations((TRUE, TRUE, FALSE, FALSE))):
        assert majority_label(split_votes) == NEI
    _stamp(3, "majority vote: unanimity, permutation invariance, ties", t0, 1.0)


def test_c04_self_agreement(tmp_path):
    """Gold text scored against itself is (1.0, 0.0) for 50 dev sources."""
    t0 = time.monotonic()
    root = make_synthetic_corpus(tmp_path / "data")
    dev = [r for r in load_dataset(root) if r.split == "dev"][:50]
    assert len(dev) == 50

    judge = OracleJudge()
    chat = MockChatProvider()
    for record in dev:
        facts = instantiate_templates(record, chat, judge=judge)
        assert facts, f"no facts instantiated for {record.source_name!r}"
        report = score_pair(record.source_name, facts, record.full_text, judge)
        assert report.fact_recall == 1.0, record.source_name
        assert report.error_rate == 0.0, record.source_name
    _stamp(4, "self-agreement (1.0, 0.0) on 50 dev sources", t0, 60.0)


def test_c05_exclusion_property():
    """Blocklisted domains, subdomains, and mentions never survive filtering."""
    t0 = time.monotonic()
    rules = ExclusionRules(
        domains=("blocked.example", "mediabiasfactcheck.com"),
        mentions=("media bias / fact check", "blocklisted phrase"),
    )
    clean_domains = ("news.example", "profiles.example", "civic.example")
    blocked_domains = (
        "blocked.example",
        "sub.blocked.example",
        "mediabiasfactcheck.com",
        "a.b.mediabiasfactcheck.com",
    )
    rng = random.Random(20250822)

    for _ in range(1000):
        rows = []
        for rank in range(1, rng.randint(1, 26)):
            domain = rng.choice(clean_domains + blocked_domains)
            body = "A page about a news outlet."
            if rng.random() < 0.3:
                mention = rng.choice(rules.mentions)
                mention = mention.upper() if rng.random() < 0.5 else mention
                body = f"Context. {mention} appears here."
            rows.append(
                SearchResult(
                    url=f"https://{domain}/page/{rank}",
                    domain=registrable_domain(f"https://{domain}/page/{rank}"),
                    title=f"Result {rank}",
                    snippet="snippet",
                    body=body,
                    rank=rank,
                )
            )

        kept = apply_exclusions(rows, rules)
        for result in kept:
            assert not any(
                result.domain == d or result.domain.endswith("." + d)
                for d in rules.domains
            ), result.url
            lowered = result.body.casefold()
            assert not any(m.casefold() in lowered for m in rules.mentions), result.url

        assert apply_exclusions(kept, rules) == kept  # idempotent

        it = iter(rows)
        assert all(any(item == row for row in it) for item in kept)  # subsequence

    _stamp(5, "exclusions: blocklist, idempotence, subsequence over 1000 sets", t0, 5.0)


def test_c06_pipeline_determinism(tmp_path):
    """Three repeated runs produce byte-identical drafts, with and without
    retrieval, over 10 sources."""
    t0 = time.monotonic()
    world = make_planted_world(n_sources=10)
    names = [record.source_name for record in world.records]

    for retrieval in (True, False):
        outputs = []
        for attempt in range(3):
            run_dir = tmp_path / f"run-{retrieval}-{attempt}"
            chat = MockChatProvider()
            search_client = extract_client = None
            if retrieval:
                search_client, extract_client = _planted_clients(run_dir, world)
            config = PipelineConfig(retrieval_enabled=retrieval)
            blob = "\n".join(
                canonical_json(
                    draft_to_record(
                        run_pipeline(
                            name,
                            chat,
                            search_client=search_client,
                            extract_client=extract_client,
                            config=config,
                        )
                    )
                )
                for name in names
            )
            outputs.append(blob.encode("utf-8"))
        assert outputs[0] == outputs[1] == outputs[2], f"retrieval={retrieval}"

    _stamp(6, "pipeline byte-identical across 3 runs x 10 sources", t0, 30.0)


def test_c07_direction_of_effect(tmp_path):
    """Retrieval lifts fact recall by at least 10 points over no-retrieval
    on a 20-source planted corpus under the oracle judge."""
    t0 = time.monotonic()
    world = make_planted_world(n_sources=20)
    judge = OracleJudge()

    means = {}
    for retrieval in (True, False):
        run_dir = tmp_path / f"run-{retrieval}"
        chat = MockChatProvider()
        search_client = extract_client = None
        if retrieval:
            search_client, extract_client = _planted_clients(run_dir, world)
        config = PipelineConfig(retrieval_enabled=retrieval)

        reports = []
        for record in world.records:
            draft = run_pipeline(
                record.source_name,
                chat,
                search_client=search_client,
                extract_client=extract_client,
                config=config,
            )
            facts = instantiate_templates(record, MockChatProvider(), judge=judge)
            reports.append(score_pair(record.source_name, facts, draft.body, judge))
        summary = aggregate(reports)
        assert summary.fact_recall is not None
        means[retrieval] = summary.fact_recall

    gap = means[True] - means[False]
    assert gap >= 0.10, f"recall gap {gap:.3f} below 10 points ({means})"
    _stamp(
        7,
        f"retrieval recall gap {100 * gap:.1f} points "
        f"({means[True]:.3f} vs {means[False]:.3f})",
        t0,
        120.0,
    )


def test_c08_scoring_definitions():
    """Worked scoring example plus the recall+error bound over 10,000
    random label assignments, each against a brute-force recount."""
    t0 = time.monotonic()

    def fact(statement, gold):
        verdict = EntailmentVerdict(label=gold, votes=(gold,) * 4, rationales=("g",) * 4)
        return AtomicFact(template_id=1, statement=statement, gold_verdict=verdict)

    facts = [fact("alpha claim", TRUE), fact("beta claim", FALSE), fact("gamma claim", TRUE)]
    judge = ScriptedJudge({"alpha": TRUE, "beta": TRUE, "gamma": NEI})
    report = score_pair("Worked Example", facts, "some predicted text", judge)
    assert report.fact_recall == pytest.approx(1 / 3)
    assert report.error_rate == pytest.approx(1 / 3)

    def recount(pairs):
        if not pairs:
            return 0.0, 0.0
        agree = sum(1 for gold, pred in pairs if gold == pred)
        flips = sum(1 for gold, pred in pairs if {gold, pred} == {TRUE, FALSE})
        return agree / len(pairs), flips / len(pairs)

    worked = [(TRUE, TRUE), (FALSE, TRUE), (TRUE, NEI)]
    assert recount(worked) == (report.fact_recall, report.error_rate)

    rng = random.Random(404021)
    for _ in range(10_000):
        pairs = [
            (rng.choice((TRUE, FALSE)), rng.choice(LABELS))
            for _ in range(rng.randint(0, 20))
        ]
        recall, error = score_outcomes(pairs)
        assert (recall, error) == recount(pairs)
        assert recall + error <= 1.0 + 1e-9
    _stamp(8, "scoring worked example and recall+error bound", t0, None)


GOLDEN_CHECKSUMS = {
    "initial": "ffd38ca49d35026172aca1bef7d789be49ae70e79e8645c87042d63cbba51181",
    "update": "96947b0345895ba60dfd070ff33d884adccaade723d7c6504dc48b24889e99f0",
    "entailment": "70456b2a46933c1a073b932f0aeeaf95f14a4f1915c936e363e2e7d28c8427c6",
    "fill_in": "63e3d77b0fd100c5dd041cd6261f9730416e08925a89aea678744af224760dd2",
    "qa_without_mbc": "dd5201759dde8184b39028dc875d6e204e23fc8f53f16da5d386291bc930d1e6",
    "qa_with_mbc": "9c3dfd1a2662e3220490ffb8d2c0f3a5fad219665657e832c496edb73c4d3f51",
}

GOLDEN_BINDINGS = {
    "initial": {"source name": "Glenport Star"},
    "update": {
        "source name": "Glenport Star",
        "Previous background check": (
            "**Background check**\n"
            "1. Glenport Star is a community newspaper.\n"
            "2. Glenport Star covers the following topics: city politics."
        ),
        "Question-answer pairs": (
            'Q: Who owns "Glenport Star"?\n'
            "A: Rhea Voss (source: example.com)\n"
            'Q: How is "Glenport Star" funded?\n'
            "A: subscriptions (source: example.org)"
        ),
    },
    "entailment": {
        "hypothesis": "Rhea Voss owns Glenport Star",
        "premise": (
            "Corporate filings show Rhea Voss owns Glenport Star. "
            "The filings are public."
        ),
    },
    "fill_in": {
        "template": "_ owns Glenport Star",
        "gold background check": (
            "History\n"
            "Rhea Voss owns Glenport Star.\n"
            "Glenport Star is funded through subscriptions."
        ),
    },
    "qa_without_mbc": {
        "question": "Is the reservoir cleanup on schedule?",
        "source document": (
            "The reservoir cleanup has entered its third phase. "
            "Crews expect completion by fall."
        ),
        "domain name of source document": "example.com",
    },
}
GOLDEN_BINDINGS["qa_with_mbc"] = {
    **GOLDEN_BINDINGS["qa_without_mbc"],
    "background check": (
        "1. Example Com is a municipal news service.\n"
        "2. Example Com relies on subscriptions for revenue."
    ),
}


def test_c09_prompt_fidelity():
    """Rendered prompts byte-match the checksum-pinned golden files."""
    t0 = time.monotonic()
    for template_id, bindings in GOLDEN_BINDINGS.items():
        messages = render_prompt(template_id, bindings).as_tuple()
        rendered = "".join(f"[{role}]\n{content}\n" for role, content in messages)

        golden_path = GOLDEN_DIR / f"{template_id}.golden.txt"
        golden = golden_path.read_text("utf-8")
        digest = hashlib.sha256(golden.encode("utf-8")).hexdigest()
        assert digest == GOLDEN_CHECKSUMS[template_id], (
            f"golden file drifted: {golden_path}"
        )
        assert rendered == golden, f"rendered {template_id} differs from golden"
    _stamp(9, "six rendered prompts byte-match pinned goldens", t0, None)


_LIVE_ENV = (
    "MBC_CHAT_ENDPOINT",
    "MBC_CHAT_KEY",
    "MBC_SEARCH_ENDPOINT",
    "MBC_SEARCH_KEY",
    "MBC_QA_ENDPOINT",
    "MBC_QA_KEY",
)

_MENTION_BUCKETS = {
    "bias": ("bias", "leaning", "partisan"),
    "funding": ("fund", "revenue", "advertis", "subscription", "donation"),
    "remit": ("remit", "cover", "topic", "focus"),
    "fact-checking history": ("fact-check", "fact check", "retraction"),
    "ownership": ("own", "founder", "parent company", "publisher"),
}


@pytest.mark.skipif(
    not all(os.environ.get(name) for name in _LIVE_ENV),
    reason="live smoke needs real provider credentials",
)
def test_c10_live_smoke(tmp_path):
    """One real end-to-end run: expanded draft touching several of the
    core background-check topics.  Excluded from offline runs."""
    t0 = time.monotonic()
    from mbcheck.providers import (
        HttpChatProvider,
        HttpExtractor,
        HttpFetcher,
        HttpSearchProvider,
    )

    cache = ResponseCache(tmp_path / "cache")
    chat = HttpChatProvider(model=os.environ.get("MBC_CHAT_MODEL", "default"))
    search_client = SearchClient(
        provider=HttpSearchProvider(), cache=cache, fetcher=HttpFetcher()
    )
    extract_client = ExtractClient(provider=HttpExtractor(), cache=cache)

    source = os.environ.get("MBC_LIVE_SOURCE", "Associated Press")
    draft = run_pipeline(
        source, chat, search_client=search_client, extract_client=extract_client
    )
    assert draft.revision >= 3, f"only {draft.revision} revisions"

    body = draft.body.casefold()
    hit = [
        bucket
        for bucket, needles in _MENTION_BUCKETS.items()
        if any(needle in body for needle in needles)
    ]
    assert len(hit) >= 3, f"draft covers only {hit}"
    _stamp(10, f"live draft revision {draft.revision}, topics {hit}", t0, None)
