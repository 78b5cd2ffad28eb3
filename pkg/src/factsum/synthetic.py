"""Deterministic synthetic corpora with hand-specified dependency parses.

Sentences are built from a clause template ``NAME VERB the ADJ NOUN in the
PLACE`` and combined into four shapes:

* ``single``      one clause (one fact);
* ``coord``       ``clause , and clause`` (two facts, long conj edge);
* ``appos``       ``clause , a ADJ town`` (appositive folded back, one fact);
* ``phrasal``     ``NAME VERB the NOUN and the NOUN in the PLACE`` (one fact).

Gold summaries restate selected clauses on their own, so they line up with
sub-sentence units of the body.
"""

from __future__ import annotations

import random

from .corpus import DocumentRecord, ParsedSentence

NAMES = ["alice", "bruno", "chen", "dana", "emeka", "farah", "goran", "hana", "ivan",
         "jonas", "kemal", "lena", "marco", "nadia", "oskar", "priya", "quinn", "rosa",
         "sami", "tariq", "ulla", "vera", "wei", "yusuf", "zora"]
VERBS = ["bought", "sold", "painted", "repaired", "opened", "closed", "moved", "built",
         "cleaned", "found", "lost", "shipped", "signed", "tested", "stored", "wrapped"]
ADJS = ["red", "old", "small", "heavy", "bright", "wooden", "broken", "quiet", "green",
        "narrow", "rusty", "silver", "plain", "tall", "cheap", "fancy"]
NOUNS = ["car", "boat", "house", "table", "lamp", "bridge", "engine", "fence", "piano",
         "window", "crate", "ladder", "clock", "bench", "drone", "tent"]
PLACES = ["paris", "lagos", "oslo", "lima", "cairo", "delhi", "quito", "rome", "seoul",
          "tunis", "vienna", "hanoi", "dakar", "perth", "accra", "baku"]
MARKER = "zork"


class _Builder:
    def __init__(self):
        self.forms, self.heads, self.rels = [], [], []

    def add(self, form, head, rel):
        self.forms.append(form)
        self.heads.append(head)
        self.rels.append(rel)
        return len(self.forms)

    def clause(self, name, verb, adj, noun, place, verb_head=0, verb_rel="root", adj_on=True):
        base = len(self.forms)
        v = base + 2
        n_noun = base + (5 if adj_on else 4)
        p_place = n_noun + 3
        self.add(name, v, "nsubj")
        self.add(verb, verb_head, verb_rel)
        self.add("the", n_noun, "det")
        if adj_on:
            self.add(adj, n_noun, "amod")
        self.add(noun, v, "obj")
        self.add("in", p_place, "case")
        self.add("the", p_place, "det")
        self.add(place, v, "obl")
        return v

    def sentence(self):
        return ParsedSentence.from_lists(self.forms, self.heads, self.rels)


def _clause_parts(rng):
    return (rng.choice(NAMES), rng.choice(VERBS), rng.choice(ADJS),
            rng.choice(NOUNS), rng.choice(PLACES))


def make_sentence(kind, rng, parts=None, parts2=None):
    """Returns (sentence, list of clause part tuples it states)."""
    b = _Builder()
    parts = parts or _clause_parts(rng)
    if kind == "single":
        b.clause(*parts)
        return b.sentence(), [parts]
    if kind == "coord":
        parts2 = parts2 or _clause_parts(rng)
        v1 = b.clause(*parts)
        comma = b.add(",", 0, "punct")
        conj = b.add("and", 0, "cc")
        v2 = b.clause(*parts2, verb_head=v1, verb_rel="conj")
        b.heads[comma - 1] = v2
        b.heads[conj - 1] = v2
        return b.sentence(), [parts, parts2]
    if kind == "appos":
        b.clause(*parts)
        place = len(b.forms)
        b.add(",", place + 4, "punct")
        b.add("a", place + 4, "det")
        b.add(rng.choice(ADJS), place + 4, "amod")
        b.add(rng.choice(["city", "port", "capital", "town"]), place, "appos")
        return b.sentence(), [parts]
    if kind == "phrasal":
        name, verb, adj, noun, place = parts
        noun2 = rng.choice([n for n in NOUNS if n != noun])
        b.add(name, 2, "nsubj")
        b.add(verb, 0, "root")
        b.add("the", 4, "det")
        b.add(noun, 2, "obj")
        b.add("and", 7, "cc")
        b.add("the", 7, "det")
        b.add(noun2, 4, "conj")
        b.add("in", 10, "case")
        b.add("the", 10, "det")
        b.add(place, 2, "obl")
        return b.sentence(), [parts]
    raise ValueError(f"unknown sentence kind {kind!r}")


def summary_sentence(parts, rng):
    """A gold-summary restatement of one clause (adjective sometimes dropped)."""
    b = _Builder()
    b.clause(*parts, adj_on=rng.random() < 0.5)
    return b.sentence()


def make_document(doc_id, rng, n_sentences=(8, 12), n_gold=3):
    n = rng.randint(*n_sentences)
    kinds = rng.choices(["single", "coord", "appos", "phrasal"], weights=[3, 4, 2, 1], k=n)
    body, clauses = [], []
    for si, kind in enumerate(kinds):
        sent, stated = make_sentence(kind, rng)
        body.append(sent)
        for ci, parts in enumerate(stated):
            clauses.append((si, ci, kind, parts))
    # gold facts come mostly from coordinated sentences, i.e. below sentence level
    weights = [4 if kind == "coord" else 1 for _, _, kind, _ in clauses]
    picked = set()
    while len(picked) < min(n_gold, len(clauses)):
        picked.add(rng.choices(range(len(clauses)), weights=weights)[0])
    summary = [summary_sentence(clauses[i][3], rng) for i in sorted(picked)]
    return DocumentRecord(doc_id, tuple(body), tuple(summary))


def make_corpus(n_docs=50, seed=0, prefix="syn"):
    rng = random.Random(seed)
    return [make_document(f"{prefix}{i:03d}", rng) for i in range(n_docs)]


def make_marker_corpus(n_docs=20, seed=0, rate=0.3):
    """Documents where some clauses carry the marker word in adjective position."""
    rng = random.Random(seed)
    docs = []
    for i in range(n_docs):
        body = []
        for _ in range(rng.randint(3, 5)):
            kind = rng.choice(["single", "coord", "single"])
            p1 = list(_clause_parts(rng))
            p2 = list(_clause_parts(rng))
            if rng.random() < rate:
                p1[2] = MARKER
            if rng.random() < rate:
                p2[2] = MARKER
            sent, _ = make_sentence(kind, rng, tuple(p1), tuple(p2))
            body.append(sent)
        docs.append(DocumentRecord(f"mk{i:03d}", tuple(body), ()))
    return docs
