import numpy as np
import pytest

from factsum.encoder import (EncoderConfig, Vocab, bce_loss, classify_facts, embed, encode,
                             grad_check, init_params, loss_and_grads, make_batch,
                             masked_attention, predict)
from factsum.encoder.gradcheck import numeric_grad, relative_error
from factsum.encoder.model import Encoded
from factsum.errors import CapacityError, UsageError
from factsum.hierseq import build_mask, build_sequence

TINY_DOC = [[["cats", "sleep"], [",", "bark"]], [["dogs", "run", "fast"]]]


def tiny(cfg, doc=TINY_DOC, seed=0, labels=(1, 0, 1)):
    seq = build_sequence(doc)
    vocab = Vocab.build([seq.texts])
    params = init_params(cfg, len(vocab), np.random.default_rng(seed))
    batch = make_batch([seq], [build_mask(seq, cfg.word_scope)], vocab, [list(labels)])
    return seq, vocab, params, batch


class TestEmbedding:
    def test_hand_sums(self):
        cfg = EncoderConfig(d_model=2, n_heads=1, d_ff=2, n_layers=0, max_len=8)
        seq = build_sequence([[["w"]]])
        vocab = Vocab(["w"])
        params = init_params(cfg, len(vocab), np.random.default_rng(0))
        params["tok_emb"] = np.stack([np.arange(len(vocab)), np.zeros(len(vocab))], axis=1)
        params["seg_emb"] = np.array([[0.0, 10.0], [0.0, 20.0]])
        params["pos_emb"] = np.stack([100.0 * np.arange(8), np.zeros(8)], axis=1)
        x = embed(seq, params, cfg, vocab)
        np.testing.assert_array_equal(x, [[2, 10], [103, 20], [204, 10], [306, 20], [405, 20]])

    def test_ablations_drop_tables(self):
        cfg = EncoderConfig(d_model=4, n_heads=1, d_ff=4, use_segment=False, use_position=False)
        seq, vocab, params, _ = tiny(cfg)
        np.testing.assert_array_equal(embed(seq, params, cfg, vocab),
                                      params["tok_emb"][vocab.encode(seq.texts)])

    def test_capacity(self):
        cfg = EncoderConfig(d_model=4, n_heads=1, d_ff=4, max_len=8)
        seq, vocab, params, _ = tiny(EncoderConfig(d_model=4, n_heads=1, d_ff=4))
        with pytest.raises(CapacityError):
            embed(seq, params, cfg, vocab)

    def test_cls_rows_share_init(self):
        vocab = Vocab(["a"])
        p = init_params(EncoderConfig(d_model=4, n_heads=1, d_ff=4), len(vocab),
                        np.random.default_rng(3))
        ids = vocab.encode(["[cls_d]", "[cls_s]", "[cls_f]"])
        np.testing.assert_array_equal(p["tok_emb"][ids[0]], p["tok_emb"][ids[1]])
        np.testing.assert_array_equal(p["tok_emb"][ids[0]], p["tok_emb"][ids[2]])

    def test_unknown_words(self):
        assert Vocab(["a"]).encode(["a", "zzz"]).tolist() == [6, 1]


class TestAttention:
    Q = np.array([[1.0, 0.0], [0.0, 1.0]])
    V = np.array([[1.0, 2.0], [3.0, 4.0]])
    M = np.array([[1, 1], [0, 1]])

    def test_hand_example(self):
        out, w = masked_attention(self.Q, self.Q, self.V, self.M, return_weights=True)
        np.testing.assert_allclose(out, [[1.6604769013466862, 2.6604769013466862], [3.0, 4.0]],
                                   rtol=0, atol=1e-12)
        assert w[1, 0] == 0.0

    def test_multiplicative_leaks(self):
        # row 1: masked logit is 1/sqrt(2) before masking, own logit 0
        q = np.array([[1.0, 0.0], [1.0, 0.0]])
        k = np.eye(2)
        out = masked_attention(q, k, self.V, self.M, mode="multiplicative")
        np.testing.assert_allclose(out[1], [2.0, 3.0])
        out = masked_attention(q, k, self.V, self.M)
        np.testing.assert_allclose(out[1], [3.0, 4.0])

    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            n = int(rng.integers(1, 12))
            m = rng.integers(0, 2, size=(n, n))
            np.fill_diagonal(m, 1)
            q, k, v = rng.normal(size=(3, n, 4))
            _, w = masked_attention(q, k, v, m, return_weights=True)
            np.testing.assert_allclose(w.sum(axis=1), 1.0, atol=1e-6)
            assert (w[m == 0] == 0).all()


class TestClassifier:
    def test_zero_weights_give_half(self):
        cfg = EncoderConfig(d_model=4, n_heads=1, d_ff=4)
        seq, vocab, params, _ = tiny(cfg)
        params["cls_W"][:] = 0.0
        enc = encode(seq, build_mask(seq), params, cfg, vocab)
        np.testing.assert_array_equal(classify_facts(enc, seq, params, cfg), [0.5, 0.5, 0.5])

    def test_hand_logit(self):
        cfg = EncoderConfig(d_model=2, n_heads=1, d_ff=2, classifier_mode="f")
        seq = build_sequence([[["w"]]])
        params = {"cls_W": np.array([[0.5], [-0.25]]), "cls_b": np.array([0.1])}
        enc = Encoded(np.zeros((5, 2)), np.zeros(2), np.zeros((1, 2)), np.array([[1.0, 2.0]]))
        np.testing.assert_allclose(classify_facts(enc, seq, params, cfg), [0.52497918747894],
                                   rtol=0, atol=1e-12)

    @pytest.mark.parametrize("mode,width", [("f", 4), ("d+f", 8), ("s+f", 8), ("d+s+f", 12)])
    def test_width(self, mode, width):
        cfg = EncoderConfig(d_model=4, n_heads=1, d_ff=4, classifier_mode=mode)
        _, _, params, _ = tiny(cfg)
        assert params["cls_W"].shape == (width, 1)

    def test_batch_matches_single(self):
        cfg = EncoderConfig(d_model=8, n_heads=2, d_ff=8)
        seq, vocab, params, _ = tiny(cfg)
        other = build_sequence([[["dogs", "bark"]]])
        single = classify_facts(encode(seq, build_mask(seq), params, cfg, vocab), seq, params, cfg)
        batched = predict(params, [other, seq], [build_mask(other), build_mask(seq)], cfg, vocab)
        np.testing.assert_allclose(batched[1], single, rtol=0, atol=1e-12)


class TestLoss:
    def test_examples(self):
        assert bce_loss([0.5], [1]) == pytest.approx(np.log(2), abs=1e-12)
        assert bce_loss([0.9, 0.2], [1, 0]) == pytest.approx(0.164252033486018, abs=1e-12)

    def test_clamp_keeps_loss_finite(self):
        assert np.isfinite(bce_loss([0.0, 1.0], [1, 0]))

    def test_length_mismatch(self):
        with pytest.raises(UsageError):
            bce_loss([0.5, 0.5], [1])

    def test_gradient_vanishes_at_fit(self):
        cfg = EncoderConfig(d_model=4, n_heads=1, d_ff=4)
        _, _, params, batch = tiny(cfg, labels=(1, 1, 1))
        params["cls_W"][:] = 0.0
        params["cls_b"][:] = 15.0
        _, grads, _ = loss_and_grads(params, batch, cfg)
        assert max(np.abs(g).max() for g in grads.values()) < 1e-6


class TestEncoder:
    def test_zero_layers_is_embedding(self):
        cfg = EncoderConfig(d_model=4, n_heads=1, d_ff=4, n_layers=0)
        seq, vocab, params, _ = tiny(cfg)
        enc = encode(seq, build_mask(seq), params, cfg, vocab)
        np.testing.assert_array_equal(enc.reps, embed(seq, params, cfg, vocab))

    def test_deterministic(self):
        cfg = EncoderConfig(d_model=8, n_heads=2, d_ff=8)
        a = tiny(cfg, seed=4)
        b = tiny(cfg, seed=4)
        ra = encode(a[0], build_mask(a[0]), a[2], cfg, a[1]).reps
        rb = encode(b[0], build_mask(b[0]), b[2], cfg, b[1]).reps
        np.testing.assert_array_equal(ra, rb)

    def test_position_blind_permutation(self):
        cfg = EncoderConfig(d_model=8, n_heads=2, d_ff=8, use_position=False)
        doc = [[["cats", "sleep", "now"]], [["dogs", "run", "fast"]]]
        seq, vocab, params, _ = tiny(cfg, doc=doc, labels=(1, 0))
        swapped = build_sequence(doc[::-1])
        s1 = predict(params, [seq], [build_mask(seq)], cfg, vocab)[0]
        s2 = predict(params, [swapped], [build_mask(swapped)], cfg, vocab)[0]
        np.testing.assert_allclose(s2, s1[::-1], rtol=0, atol=1e-12)

    def test_position_breaks_symmetry(self):
        cfg = EncoderConfig(d_model=8, n_heads=2, d_ff=8)
        doc = [[["cats", "sleep", "now"]], [["dogs", "run", "fast"]]]
        seq, vocab, params, _ = tiny(cfg, doc=doc, labels=(1, 0))
        swapped = build_sequence(doc[::-1])
        s1 = predict(params, [seq], [build_mask(seq)], cfg, vocab)[0]
        s2 = predict(params, [swapped], [build_mask(swapped)], cfg, vocab)[0]
        assert not np.allclose(s2, s1[::-1], rtol=0, atol=1e-12)


class TestGradients:
    def test_unused_segment_table_gets_no_gradient(self):
        cfg = EncoderConfig(d_model=4, n_heads=1, d_ff=4, use_segment=False)
        _, _, params, batch = tiny(cfg)
        _, grads, _ = loss_and_grads(params, batch, cfg)
        assert not grads["seg_emb"].any()
        assert grads["tok_emb"].any()

    @pytest.mark.parametrize("mask_mode", ["additive", "multiplicative"])
    def test_grad_check(self, mask_mode):
        cfg = EncoderConfig(d_model=8, n_heads=2, d_ff=8, n_layers=1, max_len=16,
                            classifier_mode="d+s+f", mask_mode=mask_mode)
        _, _, params, batch = tiny(cfg)
        report = grad_check(params, batch, cfg)
        assert report.max_rel_error < 1e-4, report

    def test_two_point_error_is_truncation(self):
        # the two-point stencil error shrinks with eps**2, so backprop is not the culprit
        cfg = EncoderConfig(d_model=8, n_heads=2, d_ff=8, n_layers=1, max_len=16)
        _, _, params, batch = tiny(cfg)
        worst = grad_check(params, batch, cfg, eps=1e-4, order=2)
        _, grads, _ = loss_and_grads(params, batch, cfg)
        name, idx = worst.worst_param, worst.worst_index
        e4, e5 = (relative_error(grads[name], numeric_grad(params, batch, cfg, name, eps, 2))[idx]
                  for eps in (1e-4, 1e-5))
        assert e5 < e4 / 30
