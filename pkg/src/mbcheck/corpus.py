"""Dataset ingestion and descriptive statistics.

A background check is stored as one UTF-8 text file per source under
`<root>/checks/<slug>.txt`, using a heading/body layout, with split
assignments in `<root>/splits.tsv` (rows of `slug<TAB>split`). Records
export to JSON lines with keys `source_name`, `sections`, `hyperlinks`,
and `split`.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from statistics import fmean
from typing import Iterable

from .errors import (
    ConfigurationError,
    IntegrityError,
    MalformedInputError,
    ValidationError,
)
from .textutil import (
    canonical_json,
    count_lines,
    count_tokens,
    extract_urls,
    is_absolute_url,
    slugify,
)

SPLITS = ("train", "dev", "test")
_SPLIT_ORDER = ("train", "dev", "test", "unassigned")

# Editorial bias/credibility verdict lines are dropped at parse time; they
# are ratings about the source, not background facts.
_RATING_RE = re.compile(
    r"^\s*(?:overall\s+)?(?:bias(?:\s+rating)?|factual\s+reporting"
    r"|credibility(?:\s+rating)?|mbfc\s+credibility\s+rating)\s*:",
    re.IGNORECASE,
)

_HEADING_MAX_TOKENS = 8


@dataclass(frozen=True)
class Section:
    heading: str
    body: str


@dataclass(frozen=True)
class BackgroundCheck:
    source_name: str
    sections: tuple[Section, ...]
    hyperlinks: tuple[str, ...] = ()
    split: str = "unassigned"

    def __post_init__(self) -> None:
        object.__setattr__(self, "sections", tuple(self.sections))
        object.__setattr__(self, "hyperlinks", tuple(self.hyperlinks))
        if not self.source_name.strip():
            raise ValidationError("source_name must be non-empty")
        if self.split not in _SPLIT_ORDER:
            raise ValidationError(f"unknown split {self.split!r}")
        for url in self.hyperlinks:
            if not is_absolute_url(url):
                raise ValidationError(
                    f"{self.source_name}: hyperlink is not an absolute URL: {url!r}"
                )

    @property
    def full_text(self) -> str:
        return "\n\n".join(section.body for section in self.sections)

    def with_split(self, split: str) -> "BackgroundCheck":
        return BackgroundCheck(
            source_name=self.source_name,
            sections=self.sections,
            hyperlinks=self.hyperlinks,
            split=split,
        )


@dataclass(frozen=True)
class SplitStats:
    split: str
    count: int
    avg_lines: float
    avg_tokens: float


def _is_heading(lines: list[str], i: int) -> bool:
    stripped = lines[i].strip()
    if not stripped or stripped.endswith("."):
        return False
    if len(stripped.split()) > _HEADING_MAX_TOKENS:
        return False
    return i + 1 >= len(lines) or not lines[i + 1].strip()


def _trim_blank_edges(lines: list[str]) -> list[str]:
    start, end = 0, len(lines)
    while start < end and not lines[start].strip():
        start += 1
    while end > start and not lines[end - 1].strip():
        end -= 1
    return lines[start:end]


def parse_mbc_file(raw: str, source_name: str) -> BackgroundCheck:
    """Parse one background-check document into sections.

    A heading is a line of at most eight tokens without a terminal
    period, followed by a blank line. Text before the first heading, or
    a document with no headings at all, becomes a single "Body" section.
    """
    if not raw.strip():
        raise MalformedInputError(f"{source_name}: empty document")
    lines = [line for line in raw.splitlines() if not _RATING_RE.match(line)]
    heading_rows = [i for i in range(len(lines)) if _is_heading(lines, i)]

    sections: list[Section] = []
    if not heading_rows or heading_rows[0] > 0:
        preamble = _trim_blank_edges(lines[: heading_rows[0]] if heading_rows else lines)
        if preamble:
            sections.append(Section("Body", "\n".join(preamble)))
    for k, row in enumerate(heading_rows):
        stop = heading_rows[k + 1] if k + 1 < len(heading_rows) else len(lines)
        body_lines = _trim_blank_edges(lines[row + 1 : stop])
        sections.append(Section(lines[row].strip(), "\n".join(body_lines)))

    body = "\n\n".join(section.body for section in sections)
    return BackgroundCheck(
        source_name=source_name,
        sections=tuple(sections),
        hyperlinks=tuple(extract_urls(body)),
    )


def load_dataset(root: str | Path) -> tuple[BackgroundCheck, ...]:
    """Load every record named by `<root>/splits.tsv`, in manifest order.

    Manifest rows are `name<TAB>split`; the file for a source lives at
    `checks/<slugified name>.txt`.  Files the manifest does not mention
    are ignored.
    """
    root = Path(root)
    manifest = root / "splits.tsv"
    if not manifest.is_file():
        raise ConfigurationError(f"split manifest not found: {manifest}")

    records: list[BackgroundCheck] = []
    seen: set[str] = set()
    for lineno, row in enumerate(manifest.read_text("utf-8").splitlines(), start=1):
        if not row.strip():
            continue
        parts = row.split("\t")
        if len(parts) != 2:
            raise MalformedInputError(
                f"{manifest}:{lineno}: expected name<TAB>split, got {row!r}"
            )
        name, split = parts[0].strip(), parts[1].strip()
        if split not in SPLITS:
            raise MalformedInputError(f"{manifest}:{lineno}: unknown split {split!r}")
        if name in seen:
            raise IntegrityError(f"duplicate source name in manifest: {name!r}")
        seen.add(name)
        doc = root / "checks" / f"{slugify(name)}.txt"
        if not doc.is_file():
            raise IntegrityError(f"manifest names {name!r} but {doc} is missing")
        records.append(parse_mbc_file(doc.read_text("utf-8"), name).with_split(split))
    return tuple(records)


def corpus_stats(records: Iterable[BackgroundCheck]) -> list[SplitStats]:
    """Per-split record count and mean non-empty-line / token counts,
    measured over each record's full text."""
    by_split: dict[str, list[BackgroundCheck]] = {}
    for record in records:
        by_split.setdefault(record.split, []).append(record)
    stats = []
    for split in _SPLIT_ORDER:
        group = by_split.get(split)
        if not group:
            continue
        texts = [record.full_text for record in group]
        stats.append(
            SplitStats(
                split=split,
                count=len(group),
                avg_lines=fmean(count_lines(text) for text in texts),
                avg_tokens=fmean(count_tokens(text) for text in texts),
            )
        )
    return stats


def to_record(check: BackgroundCheck) -> dict:
    return {
        "source_name": check.source_name,
        "sections": [
            {"heading": section.heading, "body": section.body}
            for section in check.sections
        ],
        "hyperlinks": list(check.hyperlinks),
        "split": check.split,
    }


def from_record(record: dict) -> BackgroundCheck:
    try:
        sections = tuple(
            Section(heading=s["heading"], body=s["body"]) for s in record["sections"]
        )
        return BackgroundCheck(
            source_name=record["source_name"],
            sections=sections,
            hyperlinks=tuple(record["hyperlinks"]),
            split=record["split"],
        )
    except (KeyError, TypeError) as exc:
        raise MalformedInputError(f"bad record: {exc}") from exc


def write_jsonl(records: Iterable[BackgroundCheck], path: str | Path) -> int:
    """Write records as JSON lines; returns the number written."""
    path = Path(path)
    count = 0
    with path.open("w", encoding="utf-8") as handle:
        for check in records:
            handle.write(canonical_json(to_record(check)) + "\n")
            count += 1
    return count


def read_jsonl(path: str | Path) -> tuple[BackgroundCheck, ...]:
    path = Path(path)
    records: list[BackgroundCheck] = []
    seen: set[str] = set()
    for lineno, line in enumerate(path.read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            payload = json.loads(line)
        except json.JSONDecodeError as exc:
            raise MalformedInputError(f"{path}:{lineno}: not JSON: {exc}") from exc
        check = from_record(payload)
        if check.source_name in seen:
            raise IntegrityError(f"duplicate source name: {check.source_name!r}")
        seen.add(check.source_name)
        records.append(check)
    return tuple(records)
