import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from factsum.corpus import DocumentRecord, ParsedSentence
from factsum.errors import UsageError
from factsum.segmenter import SegmenterConfig, segment_document, split_sentence

GOLD_FACT_1 = ("Ahmadinejad essentially called Yukiya Amano , the director general of the IAEA , "
             "a U.S. puppet").split()
GOLD_FACT_2 = "said the U.N.A has no jurisdiction in Iran and Irap".split()

LABELS = ["nsubj", "obj", "det", "amod", "obl", "punct", "cc", "mark", "conj",
          "acl:relcl", "advcl", "appos", "ccomp"]


@st.composite
def parse_trees(draw, max_len=25):
    """Random dependency trees: each token hangs off an earlier-attached one."""
    n = draw(st.integers(1, max_len))
    order = draw(st.permutations(range(1, n + 1)))
    heads = [0] * n
    rels = ["root"] * n
    for k, tok in enumerate(order[1:], start=1):
        heads[tok - 1] = order[draw(st.integers(0, k - 1))]
        rels[tok - 1] = draw(st.sampled_from(LABELS))
    return ParsedSentence.from_lists([f"w{i}" for i in range(n)], heads, rels)


def alice_sentence():
    forms = "alice repaired the old red car , and bob painted the fence later on".split()
    heads = [2, 0, 6, 6, 6, 2, 10, 10, 10, 2, 12, 10, 10, 13]
    rels = ["nsubj", "root", "det", "amod", "amod", "obj", "punct", "cc", "nsubj", "conj",
            "det", "obj", "advmod", "advmod"]
    return ParsedSentence.from_lists(forms, heads, rels)


class TestAhmadinejadSentence:
    def test_two_gold_facts(self, ahmadinejad_sentence):
        facts = split_sentence(ahmadinejad_sentence)
        assert [list(f.description) for f in facts] == [GOLD_FACT_1, GOLD_FACT_2]

    def test_spans(self, ahmadinejad_sentence):
        facts = split_sentence(ahmadinejad_sentence)
        assert [(f.start, f.end, f.lead) for f in facts] == [(1, 16, 0), (17, 27, 1)]
        assert facts[1].tokens[0] == "and"


class TestRules:
    def test_comma_and_splits_long_conjunction(self):
        facts = split_sentence(alice_sentence())
        assert [f.text for f in facts] == ["alice repaired the old red car ,",
                                           "bob painted the fence later on"]

    def test_short_conjunct_stays_phrasal(self):
        forms = "alice bought the car and the boat in the paris".split()
        heads = [2, 0, 4, 2, 7, 7, 4, 10, 10, 2]
        rels = ["nsubj", "root", "det", "obj", "cc", "det", "conj", "case", "det", "obl"]
        sent = ParsedSentence.from_lists(forms, heads, rels)
        assert len(split_sentence(sent, SegmenterConfig(min_unit_length=1))) == 1
        cfg = SegmenterConfig(min_unit_length=1, conj_distance_threshold=3)
        assert len(split_sentence(sent, cfg)) == 2

    def test_min_length_folds_short_tail(self):
        cfg = SegmenterConfig(min_unit_length=8)
        assert len(split_sentence(alice_sentence(), cfg)) == 1

    def test_single_token(self):
        s = ParsedSentence.from_lists(["hi"], [0], ["root"])
        facts = split_sentence(s)
        assert [(f.start, f.end) for f in facts] == [(1, 1)]

    def test_document_indices(self):
        short = ParsedSentence.from_lists(["dogs", "run"], [2, 0], ["nsubj", "root"])
        doc = segment_document(DocumentRecord("d", (alice_sentence(), short), ()))
        flat = [(f.sentence_index, f.fact_index) for facts in doc for f in facts]
        assert flat == [(0, 0), (0, 1), (1, 0)]

    def test_bad_config(self):
        with pytest.raises(UsageError):
            SegmenterConfig(min_unit_length=0)

    def test_from_dict_accepts_comma_lists(self):
        cfg = SegmenterConfig.from_dict({"split_labels": "punct,cc"})
        assert set(cfg.split_labels) == {"punct", "cc"}


class TestProperties:
    @settings(max_examples=300, deadline=None)
    @given(parse_trees())
    def test_partition(self, sent):
        facts = split_sentence(sent)
        covered = [i for f in facts for i in f.span]
        assert covered == list(range(1, len(sent) + 1))
        assert [f.fact_index for f in facts] == list(range(len(facts)))

    @settings(max_examples=300, deadline=None)
    @given(parse_trees(), st.integers(1, 8), st.integers(1, 8))
    def test_threshold_monotonicity(self, sent, a, b):
        lo, hi = sorted((a, b))
        n_lo = len(split_sentence(sent, SegmenterConfig(min_unit_length=lo)))
        n_hi = len(split_sentence(sent, SegmenterConfig(min_unit_length=hi)))
        assert n_hi <= n_lo

    @settings(max_examples=300, deadline=None)
    @given(parse_trees(), st.integers(1, 8))
    def test_short_sentence_is_one_fact(self, sent, m):
        if len(sent) < 2 * m:
            assert len(split_sentence(sent, SegmenterConfig(min_unit_length=m))) == 1

    @settings(max_examples=100, deadline=None)
    @given(parse_trees())
    def test_deterministic(self, sent):
        assert split_sentence(sent) == split_sentence(sent)
