"""Split dependency-parsed sentences into fact units.

Four passes over a sentence, always in this order:

1. boundary marking: a token whose incoming relation is a split label
   opens a new segment;
2. clause merge: an adjacent segment that is attached to the text on its
   left by a merge-label edge is folded back in, unless it is longer than
   ``max_clause_length``;
3. conjunct test: a segment opened by ``cc`` is folded back in when the
   ``conj`` edge spanning its boundary is short (phrasal coordination);
4. minimum length: segments shorter than ``min_unit_length`` join their
   predecessor (the first one joins its successor), repeated to a fixed point.

Tokens are never dropped, so the facts of a sentence always partition it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .corpus import DocumentRecord, ParsedSentence
from .errors import UsageError

DEFAULT_SPLIT = frozenset({"punct", "cc", "mark"})
DEFAULT_MERGE = frozenset({"acl:relcl", "advcl", "appos", "ccomp"})


@dataclass(frozen=True)
class SegmenterConfig:
    split_labels: frozenset = DEFAULT_SPLIT
    merge_labels: frozenset = DEFAULT_MERGE
    conj_distance_threshold: int = 7
    min_unit_length: int = 5
    max_clause_length: int = 10

    def __post_init__(self):
        object.__setattr__(self, "split_labels", frozenset(self.split_labels))
        object.__setattr__(self, "merge_labels", frozenset(self.merge_labels))
        for name in ("conj_distance_threshold", "min_unit_length", "max_clause_length"):
            if getattr(self, name) < 1:
                raise UsageError(f"{name} must be >= 1")
        if self.split_labels & self.merge_labels:
            raise UsageError("split and merge label sets overlap: "
                             + ",".join(sorted(self.split_labels & self.merge_labels)))

    @classmethod
    def from_dict(cls, d: dict) -> "SegmenterConfig":
        kw = dict(d)
        for key in ("split_labels", "merge_labels"):
            if isinstance(kw.get(key), str):
                kw[key] = [s.strip() for s in kw[key].split(",") if s.strip()]
        unknown = set(kw) - set(cls.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown segmenter options: {sorted(unknown)}")
        return cls(**kw)

    def to_dict(self) -> dict:
        return {
            "split_labels": sorted(self.split_labels),
            "merge_labels": sorted(self.merge_labels),
            "conj_distance_threshold": self.conj_distance_threshold,
            "min_unit_length": self.min_unit_length,
            "max_clause_length": self.max_clause_length,
        }


@dataclass(frozen=True)
class Fact:
    """A contiguous token span ``[start, end]`` (1-based, inclusive) of one sentence.

    ``lead`` counts the leading boundary-marker tokens (the punctuation or
    conjunction that opened the segment); :attr:`description` leaves them out.
    """

    sentence_index: int
    fact_index: int
    start: int
    end: int
    tokens: tuple[str, ...] = field(repr=False)
    lead: int = 0

    def __len__(self):
        return self.end - self.start + 1

    @property
    def span(self) -> range:
        return range(self.start, self.end + 1)

    @property
    def words(self) -> list[str]:
        return [t.lower() for t in self.tokens]

    @property
    def description(self) -> tuple[str, ...]:
        return self.tokens[self.lead:]

    @property
    def text(self) -> str:
        return " ".join(self.description)


def _segments_to_facts(sentence, sentence_index, segments, rels, split_labels):
    forms = sentence.forms
    facts = []
    for k, (s, e) in enumerate(segments):
        lead = 0
        while s + lead < e and rels[s + lead - 1] in split_labels:
            lead += 1
        facts.append(Fact(sentence_index, k, s, e, tuple(forms[s - 1:e]), lead))
    return facts


def split_sentence(sentence: ParsedSentence, cfg: SegmenterConfig | None = None,
                   sentence_index: int = 0) -> list[Fact]:
    cfg = cfg or SegmenterConfig()
    n = len(sentence)
    rels = sentence.deprels()

    # (1) boundaries
    starts = [1] + [i for i in range(2, n + 1) if rels[i - 1] in cfg.split_labels]
    segs = [[s, e - 1] for s, e in zip(starts, starts[1:] + [n + 1])]

    def attached(left_end, right, labels):
        """Edges with a label in ``labels`` joining ``right`` to anything before it."""
        lo, hi = right
        found = []
        for edge in sentence.edges:
            if edge.label not in labels or edge.head == 0:
                continue
            a, b = sorted((edge.head, edge.dependent))
            if a <= left_end and lo <= b <= hi:
                found.append(edge)
        return found

    # (2) clause merge, one left-to-right sweep
    merged = [segs[0]]
    for seg in segs[1:]:
        cur = merged[-1]
        length = seg[1] - seg[0] + 1
        if length <= cfg.max_clause_length and attached(cur[1], seg, cfg.merge_labels):
            cur[1] = seg[1]
        else:
            merged.append(seg)

    # (3) conjunct test
    segs, merged = merged, [merged[0]]
    for seg in segs[1:]:
        cur = merged[-1]
        phrasal = False
        if rels[seg[0] - 1] == "cc":
            conj = attached(cur[1], seg, {"conj"})
            if conj:
                dist = min(abs(e.head - e.dependent) for e in conj)
                phrasal = dist < cfg.conj_distance_threshold
        if phrasal:
            cur[1] = seg[1]
        else:
            merged.append(seg)

    # (4) minimum length, to a fixed point
    segs = merged
    while len(segs) > 1:
        short = next((k for k, (s, e) in enumerate(segs)
                      if e - s + 1 < cfg.min_unit_length), None)
        if short is None:
            break
        if short == 0:
            segs[1][0] = segs[0][0]
            del segs[0]
        else:
            segs[short - 1][1] = segs[short][1]
            del segs[short]

    return _segments_to_facts(sentence, sentence_index, [tuple(s) for s in segs],
                              rels, cfg.split_labels)


def segment_sentences(sentences: Sequence[ParsedSentence],
                      cfg: SegmenterConfig | None = None) -> list[list[Fact]]:
    return [split_sentence(s, cfg, i) for i, s in enumerate(sentences)]


def segment_document(doc: DocumentRecord, cfg: SegmenterConfig | None = None) -> list[list[Fact]]:
    """Facts of the document body, grouped per sentence (sentence-major order)."""
    return segment_sentences(doc.body, cfg)


def flatten(doc_facts: Sequence[Sequence[Fact]]) -> list[Fact]:
    return [f for facts in doc_facts for f in facts]
