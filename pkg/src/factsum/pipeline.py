"""Intermediate record formats handed between CLI stages.

A *facts record* (one JSON object per line) carries everything later stages
need, so no stage has to re-read the parsed dataset::

    {"id": ..., "sentences": [[form, ...], ...], "facts": [[s, f, start, end, lead], ...],
     "summary": [[form, ...], ...], "summary_facts": [[s, f, start, end, lead], ...]}

The oracle stage adds ``mode``, ``labels``, ``matching``, ``unmatched`` and
``fact_labels`` (labels projected onto facts, whatever the mode).
"""

from __future__ import annotations

import json
import os
from typing import Iterator

from .aligner import align_facts, sentence_oracle_labels
from .corpus import DocumentRecord, write_text_atomic
from .errors import DatasetError
from .rouge import rouge_suite
from .segmenter import Fact, SegmenterConfig, flatten, segment_sentences


def _fact_rows(doc_facts):
    return [[f.sentence_index, f.fact_index, f.start, f.end, f.lead] for f in flatten(doc_facts)]


def facts_record(doc: DocumentRecord, cfg: SegmenterConfig) -> dict:
    return {
        "id": doc.id,
        "sentences": [s.forms for s in doc.body],
        "facts": _fact_rows(segment_sentences(doc.body, cfg)),
        "summary": [s.forms for s in doc.gold_summary],
        "summary_facts": _fact_rows(segment_sentences(doc.gold_summary, cfg)),
    }


def _rebuild(sentences, rows) -> list[list[Fact]]:
    out = [[] for _ in sentences]
    for s, f, start, end, lead in rows:
        out[s].append(Fact(s, f, start, end, tuple(sentences[s][start - 1:end]), lead))
    return out


def body_facts(rec: dict) -> list[list[Fact]]:
    return _rebuild(rec["sentences"], rec["facts"])


def summary_facts(rec: dict) -> list[list[Fact]]:
    return _rebuild(rec["summary"], rec["summary_facts"])


def lower(tokens) -> list[str]:
    return [t.lower() for t in tokens]


def summary_tokens(rec: dict) -> list[str]:
    return [t.lower() for s in rec["summary"] for t in s]


def fact_ordinals(rec: dict) -> dict:
    """(sentence_index, fact_index) -> 1-based position among the document's facts."""
    return {(r[0], r[1]): i + 1 for i, r in enumerate(rec["facts"])}


def oracle_record(rec: dict, mode: str) -> dict:
    facts = flatten(body_facts(rec))
    if mode == "fact":
        res = align_facts(facts, flatten(summary_facts(rec)))
        fact_labels = list(res.labels)
    else:
        res = sentence_oracle_labels([lower(s) for s in rec["sentences"]], summary_tokens(rec))
        fact_labels = [res.labels[f.sentence_index] for f in facts]
    out = dict(rec)
    out.update(res.to_json())
    out["fact_labels"] = [int(y) for y in fact_labels]
    return out


def oracle_selection_tokens(rec: dict) -> list[str]:
    """Concatenated tokens of the oracle-selected units, in document order."""
    if rec["mode"] == "fact":
        units = [f.words for f in flatten(body_facts(rec))]
    else:
        units = [lower(s) for s in rec["sentences"]]
    return [t for u, y in zip(units, rec["labels"]) if y for t in u]


def mean_rouge(pairs) -> dict:
    """Corpus mean of per-document ROUGE F1 (x100) over (candidate, reference) pairs."""
    totals = {"r1": 0.0, "r2": 0.0, "rl": 0.0}
    n = 0
    for cand, ref in pairs:
        for key, score in rouge_suite(cand, ref).items():
            totals[key] += score.f1
        n += 1
    return {k: (100.0 * v / n if n else 0.0) for k, v in totals.items()} | {"documents": n}


# ---------------------------------------------------------------- JSONL helpers

def read_jsonl(path: str | os.PathLike) -> Iterator[tuple[int, dict]]:
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}: line {lineno}: invalid JSON ({exc.msg})") from None


def write_jsonl(path: str | os.PathLike, records) -> None:
    write_text_atomic(path, "".join(json.dumps(r, ensure_ascii=False, sort_keys=True) + "\n"
                                    for r in records))


# ---------------------------------------------------------------- summary files

def format_summaries(items) -> str:
    """``items``: iterable of (doc id, list of Fact). One fact per line."""
    out = []
    for doc_id, facts in items:
        out.append(f"# {doc_id}")
        out.extend(f"({f.sentence_index}, {f.fact_index})\t{f.text}" for f in facts)
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def parse_summaries(path: str | os.PathLike) -> dict:
    """doc id -> list of ((sentence_index, fact_index), text)."""
    docs: dict = {}
    current = None
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            if line.startswith("# "):
                current = line[2:]
                if current in docs:
                    raise DatasetError(f"{path}: line {lineno}: duplicate document {current!r}")
                docs[current] = []
                continue
            if current is None:
                raise DatasetError(f"{path}: line {lineno}: fact line before any '# id' header")
            try:
                key, text = line.split("\t", 1)
                s, f = (int(x) for x in key.strip("()").split(","))
            except ValueError:
                raise DatasetError(f"{path}: line {lineno}: expected '(s, f)<TAB>text'") from None
            docs[current].append(((s, f), text))
    return docs
