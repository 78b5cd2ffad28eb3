"""Exact ROUGE-N and sentence-level ROUGE-L over token sequences.

Inputs are expected to be normalized already (lowercased tokens). No
stemming, no stopword removal.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import UsageError

_KEY_LIMIT = 2 ** 62


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, n_cand: int, n_ref: int) -> "RougeScore":
        p = overlap / n_cand if n_cand else 0.0
        r = overlap / n_ref if n_ref else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f)


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def _intern(*seqs):
    vocab = {}
    out = []
    for seq in seqs:
        out.append(np.fromiter((vocab.setdefault(t, len(vocab)) for t in seq),
                               dtype=np.int64, count=len(seq)))
    return out, len(vocab) + 1


def _ngram_keys(ids: np.ndarray, n: int, base: int) -> np.ndarray:
    if ids.size < n:
        return np.empty(0, dtype=np.int64)
    keys = np.zeros(ids.size - n + 1, dtype=np.int64)
    for k in range(n):
        keys = keys * base + ids[k:ids.size - n + 1 + k]
    return keys


def ngram_overlap(candidate: Sequence[str], reference: Sequence[str], n: int) -> tuple[int, int, int]:
    """(clipped overlap, candidate n-gram count, reference n-gram count)."""
    if n < 1:
        raise UsageError(f"n must be >= 1, got {n}")
    n_c = max(len(candidate) - n + 1, 0)
    n_r = max(len(reference) - n + 1, 0)
    if n_c == 0 or n_r == 0:
        return 0, n_c, n_r
    (a, b), base = _intern(candidate, reference)
    if base ** n < _KEY_LIMIT:
        hits = kernels.clipped_overlap(_ngram_keys(a, n, base), _ngram_keys(b, n, base))
    else:
        ca, cb = ngrams(list(candidate), n), ngrams(list(reference), n)
        hits = sum((ca & cb).values())
    return hits, n_c, n_r


def rouge_n(candidate: Sequence[str], reference: Sequence[str], n: int) -> RougeScore:
    return RougeScore.from_counts(*ngram_overlap(candidate, reference, n))


def lcs(candidate: Sequence[str], reference: Sequence[str]) -> int:
    if not candidate or not reference:
        return 0
    (a, b), _ = _intern(candidate, reference)
    return kernels.lcs_length(a, b)


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> RougeScore:
    return RougeScore.from_counts(lcs(candidate, reference), len(candidate), len(reference))


def rouge_suite(candidate: Sequence[str], reference: Sequence[str]) -> dict[str, RougeScore]:
    return {
        "r1": rouge_n(candidate, reference, 1),
        "r2": rouge_n(candidate, reference, 2),
        "rl": rouge_l(candidate, reference),
    }


def rouge12_f1(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """ROUGE-1 F1 + ROUGE-2 F1, the composite used by both oracles."""
    return rouge_n(candidate, reference, 1).f1 + rouge_n(candidate, reference, 2).f1


def pairwise_rouge12(summary_units: Sequence[Sequence[str]],
                     source_units: Sequence[Sequence[str]]) -> np.ndarray:
    """Matrix of :func:`rouge12_f1` for every (summary unit, source unit) pair."""
    vocab: dict[str, int] = {}

    def flatten(units):
        ids = [vocab.setdefault(t, len(vocab)) for u in units for t in u]
        off = np.zeros(len(units) + 1, dtype=np.int64)
        np.cumsum([len(u) for u in units], out=off[1:])
        return np.asarray(ids, dtype=np.int64), off

    s_ids, s_off = flatten(summary_units)
    f_ids, f_off = flatten(source_units)
    return kernels.rouge12_matrix(s_ids, s_off, f_ids, f_off, len(vocab) + 1)
