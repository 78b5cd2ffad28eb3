import itertools
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factsum.aligner import align_facts, greedy_match, greedy_sentence_oracle
from factsum.errors import UsageError
from factsum.rouge import pairwise_rouge12, rouge12_f1
from oracles import best_assignment


def toks(text):
    return text.lower().replace(".", " .").replace(";", "").split()


# the example document, one entry per fact
HEADSET_DOC = [
    "Virtual reality may still seem like a hobby reserved for hardcore gamers;",
    "but as headsets drop in price it is on the verge of becoming mainstream.",
    "One firm helping to fuel this trend is immerse.",
    "It has created a virtual reality headset that works with any android and ios phone;",
    "is compatible with hundreds of virtual reality apps from the respective stores.",
    "The immerse virtual reality headset is available from firebox for 29.",
    "It works with any android and ios phone that can run virtual reality apps from the "
    "respective stores and play any 3d movie.",
    "The maximum size of compatible devices is 3;",
    "which means it will work with the iphone 6 ; not the iphone 6 plus , for example.",
    "Immerse calls itself an affordable alternative to rivals such as oculus rift;",
    "which is expected to launch a consumer version soon with prices ranging from between "
    "200 and 400.",
    "Immerse is available to buy from firebox and can be shipped internationally.",
]
HEADSET_GOLD = [
    "The immerse virtual reality headset is available from firebox for 29.",
    "It works with android and ios phones via virtual reality apps and 3d films.",
    "The maximum size of the device must be 3.",
    "It calls itself an affordable alternative to rivals such as oculus rift.",
]


class TestAlignFacts:
    def test_identity(self):
        src = [["a", "b"], ["c", "d", "e"], ["f", "g"], ["x", "y", "z"]]
        res = align_facts(src, [["x", "y", "z"]])
        assert res.matching == ((0, 3, 2.0),)
        assert res.selected == [3]
        assert res.unmatched == ()

    def test_headset_fact(self):
        res = align_facts([toks(t) for t in HEADSET_DOC], [toks(HEADSET_GOLD[0])])
        assert res.selected == [5]

    def test_headset_all_gold_facts(self):
        res = align_facts([toks(t) for t in HEADSET_DOC], [toks(t) for t in HEADSET_GOLD])
        assert {g: f for g, f, _ in res.matching} == {0: 5, 1: 6, 2: 7, 3: 9}

    def test_two_by_three_agrees_with_exhaustive(self):
        scores = np.array([[0.9, 0.2, 0.1], [0.3, 0.8, 0.05]])
        total, best = best_assignment(scores.tolist())
        got = greedy_match(scores)
        assert {g: f for g, f, _ in got} == best
        assert sum(s for *_, s in got) == pytest.approx(total)

    def test_zero_score_stays_unmatched(self):
        res = align_facts([["a", "b"]], [["a", "b"], ["q", "r"]])
        assert res.unmatched == (1,)
        assert sum(res.labels) == 1

    def test_empty_summary(self):
        res = align_facts([["a"], ["b"]], [])
        assert res.labels == (False, False)

    def test_empty_source(self):
        with pytest.raises(UsageError):
            align_facts([], [["a"]])

    def test_ties_prefer_smaller_source(self):
        assert greedy_match(np.array([[1.0, 1.0]])) == [(0, 0, 1.0)]


matrices = st.integers(1, 4).flatmap(lambda r: st.integers(1, 6).flatmap(
    lambda c: st.lists(st.lists(st.sampled_from([0.0, 0.25, 0.5, 0.75, 1.0, 1.5]),
                                min_size=c, max_size=c), min_size=r, max_size=r)))


class TestMatchingProperties:
    @settings(max_examples=300)
    @given(matrices)
    def test_injective_and_certified(self, rows):
        scores = np.array(rows)
        got = greedy_match(scores)
        gs = [g for g, _, _ in got]
        fs = [f for _, f, _ in got]
        assert len(set(gs)) == len(gs) and len(set(fs)) == len(fs)
        live_g, live_f = set(range(scores.shape[0])), set(range(scores.shape[1]))
        for g, f, s in got:
            assert s == scores[g, f] > 0
            assert s >= max(scores[i, j] for i in live_g for j in live_f)
            live_g.discard(g)
            live_f.discard(f)

    @settings(max_examples=300)
    @given(matrices)
    def test_half_of_optimum(self, rows):
        # greedy on a weighted bipartite graph is a 1/2-approximation
        total, _ = best_assignment(rows)
        got = sum(s for *_, s in greedy_match(np.array(rows)))
        assert got >= 0.5 * total - 1e-12


class TestSentenceOracle:
    def test_copy_of_one_sentence(self):
        body = [["a", "b", "c"], ["d", "e"], ["f", "g", "h"], ["i", "j"]]
        assert greedy_sentence_oracle(body, ["f", "g", "h"]) == (False, False, True, False)

    def test_empty_summary(self):
        assert not any(greedy_sentence_oracle([["a"], ["b"]], []))

    def test_best_pair(self):
        body = [["the", "storm", "hit", "the", "coast"], ["markets", "fell", "sharply"],
                ["a", "new", "bridge", "opened"], ["thousands", "lost", "power", "overnight"]]
        summary = ["the", "storm", "hit", "the", "coast", "thousands", "lost", "power"]
        labels = greedy_sentence_oracle(body, summary)
        assert [i for i, y in enumerate(labels) if y] == [0, 3]
        best = max((c for k in (1, 2, 3) for c in itertools.combinations(range(4), k)),
                   key=lambda c: rouge12_f1([t for i in c for t in body[i]], summary))
        assert best == (0, 3)

    def test_cap(self):
        body = [[f"w{i}"] for i in range(10)]
        labels = greedy_sentence_oracle(body, [f"w{i}" for i in range(10)], max_sentences=6)
        assert sum(labels) == 6

    def test_empty_body(self):
        with pytest.raises(UsageError):
            greedy_sentence_oracle([], ["a"])


def test_random_alignments_are_injective():
    rng = random.Random(5)
    for _ in range(100):
        src = [[rng.choice("abcdef") for _ in range(rng.randint(1, 6))] for _ in range(rng.randint(1, 6))]
        summ = [[rng.choice("abcdef") for _ in range(rng.randint(1, 6))] for _ in range(rng.randint(1, 4))]
        res = align_facts(src, summ)
        assert sum(res.labels) == len(res.matching) <= len(summ)
        np.testing.assert_allclose([s for *_, s in res.matching],
                                   [pairwise_rouge12(summ, src)[g, f] for g, f, _ in res.matching])
