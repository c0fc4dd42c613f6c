import json

import pytest

from mbcheck import textutil


class TestTokenAndLineCounts:
    def test_count_tokens_whitespace_split(self):
        assert textutil.count_tokens("one two  three\nfour") == 4
        assert textutil.count_tokens("") == 0
        assert textutil.count_tokens("  \n ") == 0

    def test_punctuation_stays_attached(self):
        assert textutil.whitespace_tokens("Hello, world.") == ["Hello,", "world."]

    def test_nfc_applied_before_split(self):
        # e + combining acute composes to a single code point.
        decomposed = "café"
        assert textutil.whitespace_tokens(decomposed) == ["café"]

    def test_count_lines_skips_blank(self):
        assert textutil.count_lines("a\n\nb\n   \nc") == 3
        assert textutil.count_lines("") == 0
        assert textutil.count_lines("single") == 1


class TestUrls:
    def test_extracts_in_order(self):
        text = "see https://a.example/x and http://b.example/y?z=1 too"
        assert textutil.extract_urls(text) == [
            "https://a.example/x",
            "http://b.example/y?z=1",
        ]

    def test_trailing_sentence_punctuation_dropped(self):
        assert textutil.extract_urls("go to https://a.example/p.") == [
            "https://a.example/p"
        ]

    def test_ignores_relative_and_other_schemes(self):
        assert textutil.extract_urls("ftp://x.example /rel/path") == []

    def test_is_absolute_url(self):
        assert textutil.is_absolute_url("https://example.com/a")
        assert not textutil.is_absolute_url("/relative")
        assert not textutil.is_absolute_url("mailto:a@b.c")

    def test_registrable_domain(self):
        assert textutil.registrable_domain("https://News.Example.COM:8080/p") == (
            "news.example.com"
        )
        assert textutil.registrable_domain("not a url") == ""


class TestSlugify:
    def test_basic(self):
        assert textutil.slugify("The Example Times") == "the-example-times"

    def test_keeps_dots(self):
        assert textutil.slugify("news.example.com") == "news.example.com"

    def test_collapses_runs_and_trims(self):
        assert textutil.slugify("  A  --  B!! ") == "a-b"

    def test_never_empty(self):
        assert textutil.slugify("***") == "unnamed"


class TestCanonicalJson:
    def test_sorted_compact(self):
        assert textutil.canonical_json({"b": 1, "a": [1, 2]}) == '{"a":[1,2],"b":1}'

    def test_unicode_not_escaped(self):
        assert textutil.canonical_json({"k": "café"}) == '{"k":"café"}'

    def test_round_trips(self):
        value = {"x": [1, "two", None, True], "y": {"z": 0.5}}
        assert json.loads(textutil.canonical_json(value)) == value

    def test_content_id_stable_under_key_order(self):
        a = textutil.content_id({"a": 1, "b": 2})
        b = textutil.content_id({"b": 2, "a": 1})
        assert a == b
        assert a.startswith("sha256:") and len(a) == len("sha256:") + 64

    def test_content_id_distinguishes_values(self):
        assert textutil.content_id({"a": 1}) != textutil.content_id({"a": 2})


class TestHtmlToText:
    def test_strips_tags_and_collapses_whitespace(self):
        markup = "<p>Hello   <b>world</b></p>\n<p>again</p>"
        assert textutil.html_to_text(markup) == "Hello world again"

    def test_drops_script_and_style(self):
        markup = "<script>var x=1;</script><style>p{}</style><p>kept</p>"
        assert textutil.html_to_text(markup) == "kept"

    def test_entities_decoded(self):
        assert textutil.html_to_text("a &amp; b") == "a & b"

    def test_cap_applies(self):
        assert len(textutil.html_to_text("<p>" + "x" * 500 + "</p>", cap=100)) == 100

    def test_plain_text_passthrough(self):
        assert textutil.html_to_text("no markup here") == "no markup here"


def test_sha256_hex_known_value():
    # sha256 of the empty string, a published constant.
    assert textutil.sha256_hex("") == (
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
    )
