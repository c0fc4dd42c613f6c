"""Small text helpers used throughout the package.

Token and line counting here define the statistics reported for the
corpus: whitespace tokens over NFC-normalized text with punctuation kept
attached, and newline-delimited non-empty lines.
"""

from __future__ import annotations

import hashlib
import html
import html.parser
import json
import re
import unicodedata
from typing import Any
from urllib.parse import urlparse

_URL_RE = re.compile(r"https?://[^\s<>\"')\]]+")
_TRAILING_PUNCT = ".,;:!?"


def nfc(text: str) -> str:
    return unicodedata.normalize("NFC", text)


def whitespace_tokens(text: str) -> list[str]:
    """Whitespace-split tokens of the NFC-normalized text."""
    return nfc(text).split()


def count_tokens(text: str) -> int:
    return len(whitespace_tokens(text))


def count_lines(text: str) -> int:
    """Number of non-empty lines."""
    return sum(1 for line in text.splitlines() if line.strip())


def extract_urls(text: str) -> list[str]:
    """Absolute http(s) URLs found in the text, in order of appearance.

    Trailing sentence punctuation is not considered part of the URL.
    """
    urls = []
    for match in _URL_RE.finditer(text):
        url = match.group(0).rstrip(_TRAILING_PUNCT)
        if is_absolute_url(url):
            urls.append(url)
    return urls


def is_absolute_url(url: str) -> bool:
    parsed = urlparse(url)
    return parsed.scheme in ("http", "https") and bool(parsed.netloc)


def registrable_domain(url: str) -> str:
    """Hostname of the URL, lowercased, port stripped."""
    host = urlparse(url).hostname
    return (host or "").lower()


def slugify(name: str) -> str:
    """Filesystem-safe slug: lowercase, keep alphanumerics and dots,
    everything else collapsed to single hyphens."""
    slug = re.sub(r"[^a-z0-9.]+", "-", name.lower())
    return slug.strip("-.") or "unnamed"


def canonical_json(value: Any) -> str:
    """Deterministic JSON used for cache values, hashes, and output records."""
    return json.dumps(value, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def sha256_hex(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def dump_jsonl(records, path) -> int:
    """Write dict records as canonical JSON lines; returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(canonical_json(record) + "\n")
            count += 1
    return count


def load_jsonl(path) -> list[dict]:
    records: list[dict] = []
    with open(path, "r", encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{lineno}: not JSON: {exc}") from exc
    return records


def content_id(value: Any) -> str:
    """Stable identifier of a JSON-serializable value."""
    return "sha256:" + sha256_hex(canonical_json(value))


class _TextExtractor(html.parser.HTMLParser):
    _SKIP = {"script", "style", "noscript", "template"}

    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.parts: list[str] = []
        self._skip_depth = 0

    def handle_starttag(self, tag, attrs):
        if tag in self._SKIP:
            self._skip_depth += 1

    def handle_endtag(self, tag):
        if tag in self._SKIP and self._skip_depth > 0:
            self._skip_depth -= 1

    def handle_data(self, data):
        if self._skip_depth == 0:
            self.parts.append(data)


def html_to_text(markup: str, cap: int = 100_000) -> str:
    """Best-effort plain text from an HTML page.

    Scripts and styles are dropped, tags stripped, whitespace collapsed.
    The result is capped at `cap` characters.
    """
    parser = _TextExtractor()
    try:
        parser.feed(markup)
        parser.close()
    except Exception:
        # Tag soup beyond what html.parser tolerates: fall back to a crude strip.
        text = re.sub(r"<[^>]*>", " ", markup)
        return " ".join(html.unescape(text).split())[:cap]
    return " ".join(" ".join(parser.parts).split())[:cap]
