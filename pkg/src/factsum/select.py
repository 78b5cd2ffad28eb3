"""Summary selection: top-k with trigram blocking, Lead-N, position buckets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import UsageError

BUCKETS = ("1-5", "6-10", "11-15", "rest")


@dataclass(frozen=True)
class SelectionConfig:
    k: int = 4
    trigram_blocking: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise UsageError("k must be >= 1")


def _words(unit) -> list[str]:
    if hasattr(unit, "words"):
        return list(unit.words)
    return [str(t).lower() for t in unit]


def trigrams(words: Sequence[str]) -> set:
    return {tuple(words[i:i + 3]) for i in range(len(words) - 2)}


def rank_and_select(scores: Sequence[float], facts: Sequence,
                    cfg: SelectionConfig | None = None) -> list[int]:
    """Indices of the selected facts, in document order.

    Candidates are visited by descending score (ties: earlier fact first); a
    candidate sharing a word trigram with the current selection is skipped
    when blocking is on.
    """
    cfg = cfg or SelectionConfig()
    scores = np.asarray(scores, dtype=float)
    if scores.shape[0] != len(facts):
        raise UsageError(f"{scores.shape[0]} scores for {len(facts)} facts")
    if not np.isfinite(scores).all():
        raise UsageError("scores must be finite")
    order = sorted(range(len(facts)), key=lambda i: (-scores[i], i))
    chosen: list[int] = []
    seen: set = set()
    for i in order:
        if len(chosen) == cfg.k:
            break
        if cfg.trigram_blocking:
            tri = trigrams(_words(facts[i]))
            if tri & seen:
                continue
            seen |= tri
        chosen.append(i)
    return sorted(chosen)


def lead_baseline(doc, n: int = 3) -> list:
    """First ``n`` body sentences (all of them if the document is shorter)."""
    body = doc.body if hasattr(doc, "body") else doc
    if not body:
        raise UsageError("lead baseline needs a nonempty body")
    return list(body[:n])


def position_histogram(selected_positions: Sequence[Sequence[int]],
                       total_facts: Sequence[int] | None = None) -> list[float]:
    """Percentage of selected facts falling in positions 1-5, 6-10, 11-15 and beyond.

    Positions are 1-based fact ordinals, pooled over all documents.
    """
    if total_facts is not None and len(total_facts) != len(selected_positions):
        raise UsageError("one fact total per document is required")
    counts = [0, 0, 0, 0]
    for d, positions in enumerate(selected_positions):
        for p in positions:
            if p < 1 or (total_facts is not None and p > total_facts[d]):
                raise UsageError(f"position {p} out of range in document {d}")
            counts[min((p - 1) // 5, 3)] += 1
    total = sum(counts)
    if total == 0:
        raise UsageError("no selected facts to histogram")
    return [100.0 * c / total for c in counts]
