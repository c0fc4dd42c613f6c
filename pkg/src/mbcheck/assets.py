"""Checksum-pinned text assets: prompt templates and the atomic-fact patterns.

The pinned digests make accidental edits fail loudly in tests and let
output records carry a fingerprint of the exact prompt wording used.
"""

from __future__ import annotations

import re
from functools import lru_cache
from importlib import resources

from .errors import ConfigurationError
from .textutil import sha256_hex

PROMPT_CHECKSUMS = {
    "initial": "cf1d4781e3c946ac351a0ac9250e2491d27653cb57383c8393a71bac16fbe2e8",
    "update": "f80cec26f0e4ce2d9a009471afadd7c9310e278384751ef94341acbaed02049a",
    "entailment": "5b2bcc0f2e8f971463caaccb5095745e4fed4cc91ed3ed49c72f0fbb18f48aa8",
    "fill_in": "2b75d200a48606b4e83826363bd8526c08f83c2826eb46d26119d1588529d26c",
    "qa_without_mbc": "3f3e28fd93b77bf29dab27ddcf1ce05c7252e32a87aa9d69bc8c0dbdb9252bc1",
    "qa_with_mbc": "b9a874820e09bb42e999c0dece09b15ffdc8c829a9dedda000d9b2ad7631783f",
}

FACT_TEMPLATES_CHECKSUM = (
    "bc6701c837559fcb8de0c5a6946bf37689212e7a2cf26cc3e39e54960aead107"
)

_ROLE_MARKER = re.compile(r"^\[(system|user|assistant)\]$")


def _read_asset(subdir: str, filename: str) -> str:
    path = resources.files("mbcheck").joinpath(subdir, filename)
    return path.read_text(encoding="utf-8")


@lru_cache(maxsize=None)
def prompt_text(template_id: str) -> str:
    """Raw prompt asset, verified against its pinned checksum."""
    if template_id not in PROMPT_CHECKSUMS:
        raise ConfigurationError(f"unknown prompt template: {template_id!r}")
    text = _read_asset("prompts", f"{template_id}.txt")
    digest = sha256_hex(text)
    if digest != PROMPT_CHECKSUMS[template_id]:
        raise ConfigurationError(
            f"prompt asset {template_id!r} does not match its pinned checksum "
            f"(got {digest})"
        )
    return text


@lru_cache(maxsize=None)
def prompt_messages(template_id: str) -> tuple[tuple[str, str], ...]:
    """Prompt asset parsed into (role, content) message pairs.

    A message starts at a `[system]` / `[user]` / `[assistant]` marker line;
    its content is everything up to the next marker, with the blank lines
    framing the block removed.
    """
    text = prompt_text(template_id)
    messages: list[tuple[str, list[str]]] = []
    for line in text.splitlines():
        marker = _ROLE_MARKER.match(line)
        if marker:
            messages.append((marker.group(1), []))
        elif messages:
            messages[-1][1].append(line)
        elif line.strip():
            raise ConfigurationError(
                f"prompt asset {template_id!r} has content before the first role marker"
            )
    parsed = []
    for role, lines in messages:
        while lines and not lines[0].strip():
            lines.pop(0)
        while lines and not lines[-1].strip():
            lines.pop()
        parsed.append((role, "\n".join(lines)))
    return tuple(parsed)


@lru_cache(maxsize=None)
def fact_template_patterns() -> tuple[str, ...]:
    """The 42 atomic-fact patterns, verified against the pinned checksum."""
    text = _read_asset("templates", "atomic_facts.txt")
    digest = sha256_hex(text)
    if digest != FACT_TEMPLATES_CHECKSUM:
        raise ConfigurationError(
            f"fact template asset does not match its pinned checksum (got {digest})"
        )
    patterns = tuple(line for line in text.splitlines() if line.strip())
    if len(patterns) != 42:
        raise ConfigurationError(
            f"fact template asset must hold 42 patterns, found {len(patterns)}"
        )
    return patterns


def asset_fingerprint() -> dict[str, str]:
    """Checksums embedded into output records for reproducibility."""
    fingerprint = {f"prompt:{name}": digest for name, digest in PROMPT_CHECKSUMS.items()}
    fingerprint["templates:atomic_facts"] = FACT_TEMPLATES_CHECKSUM
    return fingerprint
