"""Parsed-document containers, CoNLL-U / JSONL ingestion and corpus statistics."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .errors import DatasetError, ParseError, StructureError, UsageError


@dataclass(frozen=True)
class Token:
    index: int
    text: str
    lower: str = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.index < 1:
            raise StructureError(f"token index must be >= 1, got {self.index}")
        if not self.text:
            raise StructureError(f"token {self.index} has empty text")
        object.__setattr__(self, "lower", self.text.lower())


@dataclass(frozen=True)
class DepEdge:
    head: int
    dependent: int
    label: str

    def __post_init__(self):
        if self.dependent < 1 or self.head < 0:
            raise StructureError(f"bad edge indices {self.head}->{self.dependent}")
        if self.dependent == self.head:
            raise StructureError(f"self-loop edge on token {self.dependent}")


@dataclass(frozen=True)
class ParsedSentence:
    """Tokens plus a single-rooted dependency tree over them."""

    tokens: tuple[Token, ...]
    edges: tuple[DepEdge, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "edges", tuple(self.edges))
        _validate_tree(self.tokens, self.edges)

    def __len__(self):
        return len(self.tokens)

    @classmethod
    def from_lists(cls, forms: Sequence[str], heads: Sequence[int],
                   deprels: Sequence[str]) -> "ParsedSentence":
        tokens = [Token(i + 1, t) for i, t in enumerate(forms)]
        edges = [DepEdge(int(h), i + 1, lab) for i, (h, lab) in enumerate(zip(heads, deprels))]
        return cls(tuple(tokens), tuple(edges))

    @property
    def words(self) -> list[str]:
        return [t.lower for t in self.tokens]

    @property
    def forms(self) -> list[str]:
        return [t.text for t in self.tokens]

    @property
    def root(self) -> int:
        return next(e.dependent for e in self.edges if e.head == 0)

    def deprels(self) -> list[str]:
        """Incoming relation label per token, in token order."""
        out = [""] * len(self.tokens)
        for e in self.edges:
            out[e.dependent - 1] = e.label
        return out

    def to_json(self) -> dict:
        return {
            "tokens": self.forms,
            "edges": [[e.head, e.dependent, e.label] for e in self.edges],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "ParsedSentence":
        try:
            forms = obj["tokens"]
            raw_edges = obj["edges"]
        except (KeyError, TypeError) as exc:
            raise DatasetError(f"sentence missing field {exc}") from None
        tokens = tuple(Token(i + 1, t) for i, t in enumerate(forms))
        edges = tuple(DepEdge(int(h), int(d), str(lab)) for h, d, lab in raw_edges)
        return cls(tokens, edges)


def _validate_tree(tokens: Sequence[Token], edges: Sequence[DepEdge]) -> None:
    n = len(tokens)
    if n == 0:
        raise StructureError("sentence has no tokens")
    for i, t in enumerate(tokens, start=1):
        if t.index != i:
            raise StructureError(f"token indices not consecutive at position {i}")
    heads = {}
    for e in edges:
        if e.dependent > n or e.head > n:
            raise StructureError(f"edge {e.head}->{e.dependent} references a missing token")
        if e.dependent in heads:
            raise StructureError(f"token {e.dependent} has more than one head")
        heads[e.dependent] = e.head
    if len(heads) != n:
        missing = sorted(set(range(1, n + 1)) - set(heads))
        raise StructureError(f"tokens without a head: {missing}")
    roots = [d for d, h in heads.items() if h == 0]
    if len(roots) != 1:
        raise StructureError(f"expected exactly one root, found {len(roots)}")
    # every token must reach the root without revisiting a node
    for start in range(1, n + 1):
        seen = set()
        node = start
        while node != 0:
            if node in seen:
                raise StructureError(f"cycle through token {node}")
            seen.add(node)
            node = heads[node]


@dataclass(frozen=True)
class DocumentRecord:
    id: str
    body: tuple[ParsedSentence, ...]
    gold_summary: tuple[ParsedSentence, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "body", tuple(self.body))
        object.__setattr__(self, "gold_summary", tuple(self.gold_summary))
        if not self.body:
            raise DatasetError(f"record {self.id!r} has an empty body")

    def to_json(self) -> dict:
        return {
            "id": self.id,
            "body": [s.to_json() for s in self.body],
            "summary": [s.to_json() for s in self.gold_summary],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DocumentRecord":
        if not isinstance(obj, dict) or "id" not in obj:
            raise DatasetError("record has no id")
        rid = str(obj["id"])
        body = obj.get("body")
        if not body:
            raise DatasetError(f"record {rid!r} has a missing or empty body")
        try:
            sents = tuple(ParsedSentence.from_json(s) for s in body)
            summ = tuple(ParsedSentence.from_json(s) for s in obj.get("summary") or ())
        except (StructureError, DatasetError, ValueError, TypeError) as exc:
            raise DatasetError(f"record {rid!r}: {exc}") from None
        return cls(rid, sents, summ)


@dataclass(frozen=True)
class UnitStats:
    num: float
    len: float


@dataclass(frozen=True)
class CorpusStats:
    sentence: UnitStats
    fact: UnitStats
    documents: int

    def rows(self) -> list[tuple[str, float, float]]:
        return [("Sentence", self.sentence.num, self.sentence.len),
                ("Fact", self.fact.num, self.fact.len)]

    def format_table(self) -> str:
        lines = [f"{'granularity':<12}{'num':>8}{'len':>8}"]
        for name, num, ln in self.rows():
            lines.append(f"{name:<12}{num:>8.1f}{ln:>8.1f}")
        return "\n".join(lines)


# ---------------------------------------------------------------- CoNLL-U

def _blocks(lines: Iterable[str]) -> Iterator[list[tuple[int, str]]]:
    block: list[tuple[int, str]] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if not line.strip():
            if block:
                yield block
                block = []
            continue
        block.append((lineno, line))
    if block:
        yield block


def parse_conllu_block(block: list[tuple[int, str]]) -> ParsedSentence | None:
    """Parse one sentence block; returns None for comment-only blocks."""
    forms, heads, rels = [], [], []
    for lineno, line in block:
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(f"expected 10 columns, got {len(cols)}", line=lineno)
        tid = cols[0]
        if "-" in tid or "." in tid:
            continue
        try:
            idx = int(tid)
        except ValueError:
            raise ParseError(f"non-integer ID {tid!r}", line=lineno) from None
        if idx != len(forms) + 1:
            raise ParseError(f"token ID {idx} out of sequence", line=lineno)
        try:
            head = int(cols[6])
        except ValueError:
            raise ParseError(f"non-integer HEAD {cols[6]!r}", line=lineno) from None
        forms.append(cols[1])
        heads.append(head)
        rels.append(cols[7])
    if not forms:
        return None
    return ParsedSentence.from_lists(forms, heads, rels)


def load_conllu(path: str | os.PathLike, errors: list | None = None) -> list[ParsedSentence]:
    """Read a CoNLL-U file.

    Only ID, FORM, HEAD and DEPREL are used. Multiword-token and empty-node
    lines are skipped. If ``errors`` is given, malformed sentences are
    appended to it and loading continues; otherwise the first problem raises.
    """
    out = []
    with open(path, encoding="utf-8") as fh:
        for ordinal, block in enumerate(_blocks(fh), start=1):
            try:
                sent = parse_conllu_block(block)
            except StructureError as exc:
                err = StructureError(f"sentence {ordinal}: {exc}")
                err.sentence = ordinal
                if errors is None:
                    raise err from None
                errors.append(err)
                continue
            except ParseError as exc:
                if errors is None:
                    raise
                errors.append(exc)
                continue
            if sent is not None:
                out.append(sent)
    return out


# ---------------------------------------------------------------- JSONL datasets

def iter_dataset(path: str | os.PathLike) -> Iterator[tuple[int, DocumentRecord | DatasetError]]:
    """Yield (line number, record or error) without stopping on bad records."""
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                yield lineno, DatasetError(f"line {lineno}: invalid JSON ({exc.msg})")
                continue
            try:
                rec = DocumentRecord.from_json(obj)
            except (DatasetError, StructureError) as exc:
                yield lineno, DatasetError(f"line {lineno}: {exc}")
                continue
            if rec.id in seen:
                yield lineno, DatasetError(f"line {lineno}: duplicate id {rec.id!r}")
                continue
            seen.add(rec.id)
            yield lineno, rec


def load_dataset(path: str | os.PathLike) -> list[DocumentRecord]:
    records = []
    for _, item in iter_dataset(path):
        if isinstance(item, DatasetError):
            raise item
        records.append(item)
    return records


def dump_dataset(records: Iterable[DocumentRecord], path: str | os.PathLike) -> None:
    lines = [json.dumps(r.to_json(), ensure_ascii=False) for r in records]
    write_text_atomic(path, "".join(line + "\n" for line in lines))


def write_text_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


# ---------------------------------------------------------------- statistics

def corpus_stats(records: Sequence[DocumentRecord], cfg=None) -> CorpusStats:
    """Average unit count per document and unit length for sentences and facts."""
    from .segmenter import SegmenterConfig, segment_document

    if not records:
        raise UsageError("corpus_stats needs at least one record")
    cfg = cfg or SegmenterConfig()
    n_sent = n_fact = 0
    sent_tokens = fact_tokens = 0
    for rec in records:
        n_sent += len(rec.body)
        sent_tokens += sum(len(s) for s in rec.body)
        for facts in segment_document(rec, cfg):
            n_fact += len(facts)
            fact_tokens += sum(len(f) for f in facts)
    docs = len(records)
    return CorpusStats(
        sentence=UnitStats(n_sent / docs, sent_tokens / n_sent),
        fact=UnitStats(n_fact / docs, fact_tokens / n_fact),
        documents=docs,
    )
