"""Flattened document / sentence / fact / word token sequence and its graph mask."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .errors import CapacityError, UsageError

CLS_D, CLS_S, CLS_F, SEQ = "[cls_d]", "[cls_s]", "[cls_f]", "[seq]"
WORD_SCOPES = ("global", "within_fact")


class Role(enum.IntEnum):
    DocCls = 0
    SentCls = 1
    FactCls = 2
    Word = 3
    Seq = 4

    @property
    def level(self) -> int:
        return (1, 2, 3, 4, 4)[self]


@dataclass(frozen=True)
class SeqToken:
    role: Role
    text: str
    sentence: int  # -1 for the document token
    fact: int      # global fact ordinal, -1 above fact level


@dataclass(frozen=True)
class HierSequence:
    tokens: tuple[SeqToken, ...]
    segment_ids: np.ndarray   # 0 = A, 1 = B
    position_ids: np.ndarray
    doc_pos: int
    sent_pos: tuple[int, ...]          # [cls_s] position per kept sentence
    fact_pos: tuple[int, ...]          # [cls_f] position per kept fact
    fact_sentence: tuple[int, ...]     # owning sentence (index into sent_pos) per fact
    fact_keys: tuple[tuple[int, int], ...]  # (sentence_index, fact_index) per fact

    def __len__(self):
        return len(self.tokens)

    @property
    def levels(self) -> np.ndarray:
        return np.array([t.role.level for t in self.tokens], dtype=np.int64)

    @property
    def roles(self) -> list[Role]:
        return [t.role for t in self.tokens]

    @property
    def texts(self) -> list[str]:
        return [t.text for t in self.tokens]

    @property
    def n_facts(self) -> int:
        return len(self.fact_pos)


def _words(fact) -> list[str]:
    if hasattr(fact, "words"):
        return list(fact.words)
    return [str(t).lower() for t in fact]


def build_sequence(doc_facts: Sequence[Sequence], max_len: int = 512) -> HierSequence:
    """Lay out ``[cls_d] ([cls_s] ([cls_f] w... [seq])...)...``.

    ``doc_facts`` is a list of sentences, each a list of facts (``Fact``
    objects or plain token lists). Trailing whole facts are dropped until the
    sequence fits ``max_len``; sentences left without facts go with them.
    """
    sentences = [[_words(f) for f in facts] for facts in doc_facts]
    if not any(sentences):
        raise UsageError("build_sequence needs at least one fact")
    first = next(fs[0] for fs in sentences if fs)
    if len(first) + 4 > max_len:
        raise CapacityError(f"first fact ({len(first)} words) does not fit max_len={max_len}")

    tokens = [SeqToken(Role.DocCls, CLS_D, -1, -1)]
    sent_pos, fact_pos, fact_sentence, fact_keys = [], [], [], []
    fact_id = 0
    for si, facts in enumerate(sentences):
        if not facts:
            continue
        need_sent = 1
        for fi, words in enumerate(facts):
            cost = need_sent + len(words) + 2
            if len(tokens) + cost > max_len:
                break
            if need_sent:
                sent_pos.append(len(tokens))
                tokens.append(SeqToken(Role.SentCls, CLS_S, si, -1))
                need_sent = 0
            fact_pos.append(len(tokens))
            fact_sentence.append(len(sent_pos) - 1)
            fact_keys.append((si, fi))
            tokens.append(SeqToken(Role.FactCls, CLS_F, si, fact_id))
            tokens.extend(SeqToken(Role.Word, w, si, fact_id) for w in words)
            tokens.append(SeqToken(Role.Seq, SEQ, si, fact_id))
            fact_id += 1
        else:
            continue
        break  # a fact did not fit: everything after it is truncated

    levels = np.array([t.role.level for t in tokens])
    # granularity level parity: odd levels get segment A
    segment_ids = (levels % 2 == 0).astype(np.int64)
    return HierSequence(
        tokens=tuple(tokens),
        segment_ids=segment_ids,
        position_ids=np.arange(len(tokens), dtype=np.int64),
        doc_pos=0,
        sent_pos=tuple(sent_pos),
        fact_pos=tuple(fact_pos),
        fact_sentence=tuple(fact_sentence),
        fact_keys=tuple(fact_keys),
    )


def build_mask(seq: HierSequence, word_scope: str = "global") -> np.ndarray:
    """n x n uint8 matrix, ``[i, j] == 1`` iff token i receives from token j.

    Word / [seq] tokens receive from the other word-level tokens (whole
    document, or own fact only with ``word_scope="within_fact"``); each
    [cls] token receives from its peers and from its own children one level
    down. Every token has a self-loop.
    """
    if word_scope not in WORD_SCOPES:
        raise UsageError(f"word_scope must be one of {WORD_SCOPES}, got {word_scope!r}")
    sent = np.array([t.sentence for t in seq.tokens], dtype=np.int64)
    fact = np.array([t.fact for t in seq.tokens], dtype=np.int64)
    return kernels.hier_mask(seq.levels, sent, fact, word_scope == "within_fact")


def format_mask(mask: np.ndarray) -> str:
    return "".join("".join("1" if v else "0" for v in row) + "\n" for row in mask)
