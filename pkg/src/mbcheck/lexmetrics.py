"""Surface-overlap metrics between a generated report and a gold report.

Both metrics operate on whole texts: ROUGE-L as the F1 of the longest
common token subsequence, and METEOR as a two-stage (exact, then stemmed)
unigram alignment with a fragmentation penalty. Scores are in [0, 1] and
an empty side always scores 0.0.
"""

from __future__ import annotations

import unicodedata
from collections import defaultdict

from .stemming import stem

# METEOR constants: recall weight in the harmonic mean, penalty exponent,
# and penalty ceiling.
_ALPHA = 0.9
_BETA = 3.0
_GAMMA = 0.5


def tokenize(text: str) -> list[str]:
    """Lowercased whitespace tokens with trailing punctuation split off.

    Trailing punctuation characters become tokens of their own, in order,
    so "sat." yields ["sat", "."]. Never returns empty tokens.
    """
    tokens: list[str] = []
    for raw in unicodedata.normalize("NFC", text).lower().split():
        tail: list[str] = []
        while raw and unicodedata.category(raw[-1]).startswith("P"):
            tail.append(raw[-1])
            raw = raw[:-1]
        if raw:
            tokens.append(raw)
        tokens.extend(reversed(tail))
    return tokens


def lcs_length(a: list[str], b: list[str]) -> int:
    """Longest common subsequence length, O(len(a)*len(b)) time and
    O(min(len(a), len(b))) space."""
    if len(a) < len(b):
        a, b = b, a
    n = len(b)
    if n == 0:
        return 0
    prev = [0] * (n + 1)
    for x in a:
        curr = [0] * (n + 1)
        for j in range(1, n + 1):
            if x == b[j - 1]:
                curr[j] = prev[j - 1] + 1
            else:
                up = prev[j]
                left = curr[j - 1]
                curr[j] = up if up >= left else left
        prev = curr
    return prev[n]


def rouge_l(candidate: str, reference: str) -> float:
    """LCS-based F1 over the full token sequences."""
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    lcs = lcs_length(cand, ref)
    if lcs == 0:
        return 0.0
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return 2 * precision * recall / (precision + recall)


def _match_stage(
    cand_keys: list[str],
    ref_keys: list[str],
    mapping: dict[int, int],
    ref_taken: list[bool],
) -> None:
    """Greedily align unmatched candidate tokens to reference tokens with
    equal keys, preferring the slot that continues the previous match so
    the chunk count stays low."""
    free = defaultdict(list)
    for j, key in enumerate(ref_keys):
        if not ref_taken[j]:
            free[key].append(j)
    for i, key in enumerate(cand_keys):
        if i in mapping:
            continue
        slots = free.get(key)
        if not slots:
            continue
        prev = mapping.get(i - 1)
        if prev is not None and prev + 1 in slots:
            choice = prev + 1
        else:
            choice = slots[0]
        slots.remove(choice)
        if not slots:
            del free[key]
        mapping[i] = choice
        ref_taken[choice] = True


def _count_chunks(mapping: dict[int, int]) -> int:
    pairs = sorted(mapping.items())
    chunks = 0
    prev = None
    for ci, ri in pairs:
        if prev is None or ci != prev[0] + 1 or ri != prev[1] + 1:
            chunks += 1
        prev = (ci, ri)
    return chunks


def meteor(candidate: str, reference: str) -> float:
    """Unigram-alignment score with exact and stemmed match stages.

    Fmean = P*R / (alpha*P + (1-alpha)*R), penalized by
    gamma * (chunks/matches)^beta. Zero when nothing aligns.
    """
    cand = tokenize(candidate)
    ref = tokenize(reference)
    if not cand or not ref:
        return 0.0
    mapping: dict[int, int] = {}
    ref_taken = [False] * len(ref)
    _match_stage(cand, ref, mapping, ref_taken)
    _match_stage([stem(t) for t in cand], [stem(t) for t in ref], mapping, ref_taken)
    matches = len(mapping)
    if matches == 0:
        return 0.0
    precision = matches / len(cand)
    recall = matches / len(ref)
    fmean = precision * recall / (_ALPHA * precision + (1 - _ALPHA) * recall)
    penalty = _GAMMA * (_count_chunks(mapping) / matches) ** _BETA
    return fmean * (1 - penalty)
