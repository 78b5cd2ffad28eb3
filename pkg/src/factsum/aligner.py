"""Oracle labels: one-to-one fact alignment and the greedy sentence oracle."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import UsageError
from .rouge import pairwise_rouge12, rouge12_f1

MAX_ORACLE_SENTENCES = 6


@dataclass(frozen=True)
class OracleLabels:
    labels: tuple[bool, ...]
    mode: str
    # (summary unit, source unit, score), in selection order; fact mode only
    matching: tuple[tuple[int, int, float], ...] = ()
    unmatched: tuple[int, ...] = field(default=())

    @property
    def selected(self) -> list[int]:
        return [i for i, y in enumerate(self.labels) if y]

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "labels": [int(y) for y in self.labels],
            "matching": [[g, f, round(s, 12)] for g, f, s in self.matching],
            "unmatched": list(self.unmatched),
        }


def _units(units):
    return [u.words if hasattr(u, "words") else list(u) for u in units]


def greedy_match(scores: np.ndarray) -> list[tuple[int, int, float]]:
    """Greedy one-to-one matching on a (summary x source) score matrix.

    Repeatedly takes the highest remaining pair; ties go to the smaller
    source index, then the smaller summary index. Pairs scoring 0 are never
    taken.
    """
    scores = np.array(scores, dtype=float)
    n_sum, n_src = scores.shape
    live = scores.copy()
    out = []
    for _ in range(min(n_sum, n_src)):
        best = live.max() if live.size else 0.0
        if not best > 0:
            break
        # column-major scan gives the source-first tie order
        g, f = next((g, f) for f in range(n_src) for g in range(n_sum) if live[g, f] == best)
        out.append((g, f, float(scores[g, f])))
        live[g, :] = -np.inf
        live[:, f] = -np.inf
    return out


def align_facts(source_facts: Sequence, summary_facts: Sequence) -> OracleLabels:
    """Match each gold-summary fact to at most one distinct source fact."""
    if not source_facts:
        raise UsageError("align_facts needs at least one source fact")
    src = _units(source_facts)
    summ = _units(summary_facts)
    if not summ:
        return OracleLabels(tuple([False] * len(src)), "fact")
    scores = pairwise_rouge12(summ, src)
    matching = greedy_match(scores)
    labels = [False] * len(src)
    for _, f, _ in matching:
        labels[f] = True
    matched = {g for g, _, _ in matching}
    unmatched = tuple(g for g in range(len(summ)) if g not in matched)
    return OracleLabels(tuple(labels), "fact", tuple(matching), unmatched)


def greedy_sentence_oracle(body_sentences: Sequence, summary: Sequence[str],
                           max_sentences: int = MAX_ORACLE_SENTENCES) -> tuple[bool, ...]:
    """Conventional sentence oracle: add sentences while R1-F1 + R2-F1 improves."""
    sents = _units(body_sentences)
    if not sents:
        raise UsageError("greedy_sentence_oracle needs a nonempty body")
    ref = list(summary)
    chosen: list[int] = []
    best = 0.0
    while len(chosen) < max_sentences:
        cand_best, cand = best, None
        for i in range(len(sents)):
            if i in chosen:
                continue
            sel = sorted(chosen + [i])
            score = rouge12_f1([t for k in sel for t in sents[k]], ref)
            if score > cand_best:
                cand_best, cand = score, i
        if cand is None:
            break
        chosen.append(cand)
        best = cand_best
    chosen_set = set(chosen)
    return tuple(i in chosen_set for i in range(len(sents)))


def sentence_oracle_labels(body_sentences: Sequence, summary: Sequence[str]) -> OracleLabels:
    return OracleLabels(greedy_sentence_oracle(body_sentences, summary), "sentence")
