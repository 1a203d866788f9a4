"""From-scratch ROUGE-1/2/L, F1 variant.

Tokenization: lower-case, split on non-alphanumeric runs, drop empties.
"""

from __future__ import annotations

import re
from collections import Counter
from typing import Sequence

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _coerce_tokens(value: str | Sequence[str]) -> list[str]:
    if isinstance(value, str):
        return tokenize(value)
    return [str(t).lower() for t in value]


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _f1(overlap: float, candidate_total: float, reference_total: float) -> float:
    p = overlap / candidate_total if candidate_total > 0 else 0.0
    r = overlap / reference_total if reference_total > 0 else 0.0
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def rouge_n(reference: str | Sequence[str], candidate: str | Sequence[str], n: int = 1) -> float:
    """F1 of clipped n-gram overlap; 0.0 for empty inputs."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    ref_counts = _ngram_counts(_coerce_tokens(reference), n)
    cand_counts = _ngram_counts(_coerce_tokens(candidate), n)
    overlap = sum(min(count, ref_counts[ngram]) for ngram, count in cand_counts.items())
    return _f1(overlap, sum(cand_counts.values()), sum(ref_counts.values()))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    # single-row DP
    if not a or not b:
        return 0
    row = [0] * (len(b) + 1)
    for x in a:
        prev = 0
        for j, y in enumerate(b, start=1):
            cur = row[j]
            row[j] = prev + 1 if x == y else max(row[j], row[j - 1])
            prev = cur
    return row[len(b)]


def rouge_l(reference: str | Sequence[str], candidate: str | Sequence[str]) -> float:
    """F1 from longest-common-subsequence length; 0.0 for empty inputs."""
    ref_tokens = _coerce_tokens(reference)
    cand_tokens = _coerce_tokens(candidate)
    lcs = _lcs_length(ref_tokens, cand_tokens)
    return _f1(lcs, len(cand_tokens), len(ref_tokens))


def rouge_scores(reference: str | Sequence[str], candidate: str | Sequence[str]) -> dict[str, float]:
    return {
        "r1": rouge_n(reference, candidate, 1),
        "r2": rouge_n(reference, candidate, 2),
        "rl": rouge_l(reference, candidate),
    }
