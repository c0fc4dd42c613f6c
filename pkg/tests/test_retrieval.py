import pytest

from mbcheck.cache import ResponseCache
from mbcheck.errors import RateLimitError, RetrievalError, ValidationError
from mbcheck.retrieval import (
    DEFAULT_EXCLUSIONS,
    ExclusionRules,
    QueryItem,
    QueryPlan,
    SearchClient,
    SearchResult,
    apply_exclusions,
    build_query_plan,
    search,
)
from mbcheck.testing import FixtureSearchProvider, fetcher_for


class TestBuildQueryPlan:
    def test_six_default_items(self):
        plan = build_query_plan("naturalnews.com")
        assert len(plan.items) == 6
        assert [item.label for item in plan.items] == [
            "ownership",
            "funding",
            "about",
            "political-leaning",
            "fact-check",
            "retracted-article",
        ]

    def test_ownership_pair_verbatim(self):
        plan = build_query_plan("naturalnews.com")
        first = plan.items[0]
        assert first.query_text == '"naturalnews.com" ownership'
        assert first.question_text == 'Who owns "naturalnews.com"?'

    def test_remaining_pairs_verbatim(self):
        plan = {i.label: i for i in build_query_plan("The Example Times").items}
        assert plan["funding"].query_text == '"The Example Times" funding'
        assert plan["funding"].question_text == 'How is "The Example Times" funded?'
        assert plan["about"].question_text == 'What is "The Example Times"?'
        assert plan["political-leaning"].question_text == (
            'What is the political leaning of "The Example Times"?'
        )
        assert plan["fact-check"].question_text == (
            'Has "The Example Times" failed any fact-checks?'
        )
        assert plan["retracted-article"].question_text == (
            'Has "The Example Times" retracted any articles?'
        )

    def test_empty_name_rejected(self):
        with pytest.raises(ValidationError):
            build_query_plan("")
        with pytest.raises(ValidationError):
            build_query_plan("   ")

    def test_extra_items_appended(self):
        extra = QueryItem("awards", '"x" awards', 'Has "x" won awards?')
        plan = build_query_plan("x", extra_items=[extra])
        assert len(plan.items) == 7
        assert plan.items[-1] == extra

    def test_duplicate_labels_rejected(self):
        extra = QueryItem("funding", '"x" funding again', 'How is "x" funded, again?')
        with pytest.raises(ValidationError):
            build_query_plan("x", extra_items=[extra])

    def test_items_must_mention_source(self):
        with pytest.raises(ValidationError):
            QueryPlan("x", (QueryItem("a", "no mention", 'About "x"?'),))


def result(url, rank, body="", domain=None, snippet=""):
    from mbcheck.textutil import registrable_domain

    return SearchResult(
        url=url,
        domain=domain if domain is not None else registrable_domain(url),
        title="",
        snippet=snippet,
        body=body,
        rank=rank,
    )


class TestSearchResultValidation:
    def test_rank_must_be_positive(self):
        with pytest.raises(ValidationError):
            result("https://a.example/x", 0)

    def test_domain_must_match_url(self):
        with pytest.raises(ValidationError):
            result("https://a.example/x", 1, domain="b.example")

    def test_relative_url_rejected(self):
        with pytest.raises(ValidationError):
            SearchResult(url="/x", domain="", title="", snippet="", body="", rank=1)


def rows(n, prefix="r"):
    return [
        {
            "url": f"https://{prefix}{i}.example/page",
            "title": f"Title {i}",
            "snippet": f"Snippet {i}",
        }
        for i in range(n)
    ]


def make_client(tmp_path, fixtures, **provider_kwargs):
    provider = FixtureSearchProvider(fixtures, **provider_kwargs)
    cache = ResponseCache(tmp_path / "cache")
    return SearchClient(provider=provider, cache=cache, retry_sleep=lambda s: None), provider


ITEM = QueryItem("about", '"x" about', 'What is "x"?')


class TestSearch:
    def test_truncates_to_k(self, tmp_path):
        client, _ = make_client(tmp_path, {ITEM.query_text: rows(45)})
        results = search(client, ITEM, k=30)
        assert len(results) == 30
        assert [r.rank for r in results] == list(range(1, 31))

    def test_fewer_than_k(self, tmp_path):
        client, _ = make_client(tmp_path, {ITEM.query_text: rows(7)})
        results = search(client, ITEM, k=30)
        assert len(results) == 7

    def test_no_results(self, tmp_path):
        client, _ = make_client(tmp_path, {})
        assert search(client, ITEM, k=30) == []

    def test_k_must_be_positive(self, tmp_path):
        client, _ = make_client(tmp_path, {})
        with pytest.raises(ValidationError):
            search(client, ITEM, k=0)

    def test_duplicate_urls_dropped(self, tmp_path):
        dup = rows(3) + rows(3)
        client, _ = make_client(tmp_path, {ITEM.query_text: dup}, page_size=6)
        results = search(client, ITEM, k=30)
        assert len(results) == 3
        assert len({r.url for r in results}) == 3

    def test_replay_hits_cache_not_network(self, tmp_path):
        client, provider = make_client(tmp_path, {ITEM.query_text: rows(12)})
        first = search(client, ITEM, k=12)
        calls_after_first = provider.calls
        second = search(client, ITEM, k=12)
        assert provider.calls == calls_after_first
        assert second == first

    def test_results_carry_domain_title_snippet(self, tmp_path):
        client, _ = make_client(tmp_path, {ITEM.query_text: rows(2)})
        results = search(client, ITEM, k=5)
        assert results[0].domain == "r0.example"
        assert results[0].title == "Title 0"
        assert results[0].snippet == "Snippet 0"
        assert results[0].body == ""

    def test_bodies_come_from_fetcher_and_cache(self, tmp_path):
        fixtures = {
            ITEM.query_text: [
                {"url": "https://a.example/p", "body": "<p>Alpha body.</p>"},
                {"url": "https://b.example/p"},
            ]
        }
        client, _ = make_client(tmp_path, fixtures)
        fetcher = fetcher_for(fixtures)
        client.fetcher = fetcher
        results = search(client, ITEM, k=5)
        assert results[0].body == "Alpha body."
        # Missing fixture body is a failed fetch: empty body, no error.
        assert results[1].body == ""
        calls = fetcher.calls
        # Cached page + cached bodies: replay touches neither provider.
        search(client, ITEM, k=5)
        assert fetcher.calls == calls + 1  # only the failed fetch retries

    def test_transport_failure_retried_then_succeeds(self, tmp_path):
        client, provider = make_client(
            tmp_path, {ITEM.query_text: rows(2)}, failures={ITEM.query_text: 2}
        )
        results = search(client, ITEM, k=5)
        assert len(results) == 2
        assert provider.calls == 3

    def test_transport_failure_exhausted_raises_with_label(self, tmp_path):
        client, _ = make_client(
            tmp_path, {ITEM.query_text: rows(2)}, failures={ITEM.query_text: 99}
        )
        with pytest.raises(RetrievalError) as excinfo:
            search(client, ITEM, k=5)
        assert excinfo.value.query_label == "about"
        assert not isinstance(excinfo.value, RateLimitError)

    def test_rate_limit_is_distinct_error(self, tmp_path):
        client, _ = make_client(
            tmp_path, {ITEM.query_text: rows(2)}, rate_limited={ITEM.query_text}
        )
        with pytest.raises(RateLimitError):
            search(client, ITEM, k=5)

    def test_later_page_failure_keeps_partial_prefix(self, tmp_path):
        client, provider = make_client(
            tmp_path, {ITEM.query_text: rows(25)}, failures={ITEM.query_text: 0}
        )
        # Page 1 succeeds, then every retry of page 2 fails.
        original = provider.search_page

        def flaky(query_text, page):
            if page > 1:
                from mbcheck.errors import ProviderError

                raise ProviderError("page 2 down")
            return original(query_text, page)

        provider.search_page = flaky
        results = search(client, ITEM, k=25)
        assert len(results) == 10  # one full page
        assert [r.rank for r in results] == list(range(1, 11))

    def test_pagination_stops_at_short_page(self, tmp_path):
        client, provider = make_client(tmp_path, {ITEM.query_text: rows(13)})
        results = search(client, ITEM, k=30)
        assert len(results) == 13
        assert provider.calls == 2  # pages 1 and 2; short page 2 stops it


def mbfc(rank, **kw):
    return result(f"https://mediabiasfactcheck.com/r{rank}", rank, **kw)


class TestApplyExclusions:
    def test_blocked_domain_removed(self):
        kept = apply_exclusions([mbfc(1), result("https://ok.example/a", 2)])
        assert [r.url for r in kept] == ["https://ok.example/a"]

    def test_subdomain_of_blocked_domain_removed(self):
        bad = result("https://cdn.mediabiasfactcheck.com/x", 1)
        assert apply_exclusions([bad]) == []

    def test_suffix_lookalike_domain_survives(self):
        okay = result("https://notmediabiasfactcheck.com/x", 1)
        assert apply_exclusions([okay]) == [okay]

    def test_body_mention_removed(self):
        bad = result(
            "https://ok.example/a", 1, body="According to MediaBiasFactCheck.com, ..."
        )
        assert apply_exclusions([bad]) == []

    def test_mention_in_snippet_alone_survives(self):
        okay = result("https://ok.example/a", 1, snippet="mediabiasfactcheck.com says")
        assert apply_exclusions([okay]) == [okay]

    def test_ranks_preserved_not_renumbered(self):
        kept = apply_exclusions(
            [result("https://a.example/1", 1), mbfc(2), result("https://c.example/3", 3)]
        )
        assert [r.rank for r in kept] == [1, 3]

    def test_idempotent_and_subsequence(self):
        results = [
            result("https://a.example/1", 1),
            mbfc(2),
            result("https://c.example/3", 3, body="media bias / fact check said"),
            result("https://d.example/4", 4),
        ]
        once = apply_exclusions(results)
        assert apply_exclusions(once) == once
        it = iter(results)
        assert all(any(r == x for x in it) for r in once)  # subsequence

    def test_empty_input(self):
        assert apply_exclusions([]) == []

    def test_custom_rules(self):
        rules = ExclusionRules(domains=("evil.example",), mentions=("forbidden",))
        bad_domain = result("https://evil.example/x", 1)
        bad_body = result("https://fine.example/y", 2, body="the FORBIDDEN word")
        good = result("https://fine.example/z", 3)
        assert apply_exclusions([bad_domain, bad_body, good], rules) == [good]

    def test_default_rules_block_mbfc(self):
        assert "mediabiasfactcheck.com" in DEFAULT_EXCLUSIONS.domains
