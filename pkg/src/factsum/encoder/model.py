"""Small transformer encoder with hierarchical graph-masked attention.

Everything is float64 numpy with hand-written backward passes; parameters
live in a flat ``dict[str, ndarray]`` so optimizers, checkpoints and the
gradient checker can treat them uniformly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from ..errors import CapacityError, UsageError
from ..hierseq import CLS_D, CLS_F, CLS_S, SEQ, WORD_SCOPES, HierSequence

CLASSIFIER_MODES = ("f", "d+f", "s+f", "d+s+f")
MASK_MODES = ("additive", "multiplicative")
LN_EPS = 1e-6
GELU_C = math.sqrt(2.0 / math.pi)

PAD, UNK = "[pad]", "[unk]"
SPECIALS = (PAD, UNK, CLS_D, CLS_S, CLS_F, SEQ)


@dataclass(frozen=True)
class EncoderConfig:
    d_model: int = 64
    n_layers: int = 2
    n_heads: int = 2
    d_ff: int = 128
    vocab_size: int = 0  # 0 = keep every corpus word
    max_len: int = 512
    use_segment: bool = True
    use_position: bool = True
    classifier_mode: str = "s+f"
    word_scope: str = "global"
    mask_mode: str = "additive"

    def __post_init__(self):
        if self.d_model % self.n_heads:
            raise UsageError("d_model must be divisible by n_heads")
        if self.classifier_mode not in CLASSIFIER_MODES:
            raise UsageError(f"classifier_mode must be one of {CLASSIFIER_MODES}")
        if self.word_scope not in WORD_SCOPES:
            raise UsageError(f"word_scope must be one of {WORD_SCOPES}")
        if self.mask_mode not in MASK_MODES:
            raise UsageError(f"mask_mode must be one of {MASK_MODES}")
        if min(self.d_model, self.n_heads, self.d_ff, self.max_len) < 1 or self.n_layers < 0:
            raise UsageError("encoder sizes must be positive")

    @property
    def parts(self) -> tuple[str, ...]:
        return tuple(self.classifier_mode.split("+"))

    @property
    def classifier_width(self) -> int:
        return self.d_model * len(self.parts)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EncoderConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown encoder options: {sorted(unknown)}")
        return cls(**d)


class Vocab:
    """Whole-word vocabulary with reserved special symbols."""

    def __init__(self, words: Iterable[str] = ()):
        self.itos = list(SPECIALS)
        for w in words:
            if w not in SPECIALS:
                self.itos.append(w)
        self.stoi = {w: i for i, w in enumerate(self.itos)}

    @classmethod
    def build(cls, word_lists: Iterable[Iterable[str]], max_size: int = 0) -> "Vocab":
        counts = Counter(w for ws in word_lists for w in ws)
        ranked = sorted(counts, key=lambda w: (-counts[w], w))
        if max_size:
            ranked = ranked[:max(max_size - len(SPECIALS), 0)]
        return cls(ranked)

    def __len__(self):
        return len(self.itos)

    def encode(self, words: Iterable[str]) -> np.ndarray:
        unk = self.stoi[UNK]
        return np.array([self.stoi.get(w, unk) for w in words], dtype=np.int64)


# ---------------------------------------------------------------- parameters

def init_params(cfg: EncoderConfig, vocab_size: int, rng: np.random.Generator) -> dict:
    d, f = cfg.d_model, cfg.d_ff

    def unif(shape, lim):
        return rng.uniform(-lim, lim, size=shape)

    def glorot(fan_in, fan_out):
        return unif((fan_in, fan_out), math.sqrt(6.0 / (fan_in + fan_out)))

    p = {
        "tok_emb": unif((vocab_size, d), 0.05),
        "seg_emb": unif((2, d), 0.05),
        "pos_emb": unif((cfg.max_len, d), 0.05),
    }
    # the three [cls] variants start from one shared vector
    cls_ids = [SPECIALS.index(t) for t in (CLS_D, CLS_S, CLS_F)]
    p["tok_emb"][cls_ids] = p["tok_emb"][cls_ids[0]]
    for l in range(cfg.n_layers):
        for name in "qkvo":
            p[f"l{l}.W{name}"] = glorot(d, d)
            p[f"l{l}.b{name}"] = np.zeros(d)
        p[f"l{l}.ln1_g"] = np.ones(d)
        p[f"l{l}.ln1_b"] = np.zeros(d)
        p[f"l{l}.W1"] = glorot(d, f)
        p[f"l{l}.b1"] = np.zeros(f)
        p[f"l{l}.W2"] = glorot(f, d)
        p[f"l{l}.b2"] = np.zeros(d)
        p[f"l{l}.ln2_g"] = np.ones(d)
        p[f"l{l}.ln2_b"] = np.zeros(d)
    p["cls_W"] = glorot(cfg.classifier_width, 1)
    p["cls_b"] = np.zeros(1)
    return p


# ---------------------------------------------------------------- batching

@dataclass
class Batch:
    ids: np.ndarray          # (B, n)
    seg: np.ndarray          # (B, n)
    pos: np.ndarray          # (B, n)
    allowed: np.ndarray      # (B, n, n) bool, graph mask (pads: self only)
    live: np.ndarray         # (B, n, n) bool, both tokens real (pads: self only)
    fb: np.ndarray           # (F,) batch row of each fact
    fpos: np.ndarray         # (F,) [cls_f] position
    spos: np.ndarray         # (F,) [cls_s] position of its sentence
    facts_per_doc: list
    labels: np.ndarray | None = None


def make_batch(seqs: Sequence[HierSequence], masks: Sequence[np.ndarray], vocab: Vocab,
               labels: Sequence[Sequence[float]] | None = None) -> Batch:
    B = len(seqs)
    n = max(len(s) for s in seqs)
    ids = np.zeros((B, n), dtype=np.int64)
    seg = np.zeros((B, n), dtype=np.int64)
    pos = np.zeros((B, n), dtype=np.int64)
    eye = np.eye(n, dtype=bool)
    allowed = np.broadcast_to(eye, (B, n, n)).copy()
    live = allowed.copy()
    fb, fpos, spos, per_doc, ys = [], [], [], [], []
    for b, (s, m) in enumerate(zip(seqs, masks)):
        k = len(s)
        if m.shape != (k, k):
            raise UsageError(f"mask shape {m.shape} does not match sequence length {k}")
        ids[b, :k] = vocab.encode(s.texts)
        seg[b, :k] = s.segment_ids
        pos[b, :k] = s.position_ids
        allowed[b, :k, :k] = m.astype(bool)
        live[b, :k, :k] = True
        fb.extend([b] * s.n_facts)
        fpos.extend(s.fact_pos)
        spos.extend(s.sent_pos[j] for j in s.fact_sentence)
        per_doc.append(s.n_facts)
        if labels is not None:
            y = list(labels[b])[:s.n_facts]
            if len(y) != s.n_facts:
                raise UsageError(f"document {b}: {len(y)} labels for {s.n_facts} facts")
            ys.extend(y)
    ia = lambda x: np.asarray(x, dtype=np.int64)  # noqa: E731
    return Batch(ids, seg, pos, allowed, live, ia(fb), ia(fpos), ia(spos), per_doc,
                 None if labels is None else np.asarray(ys, dtype=float))


# ---------------------------------------------------------------- building blocks

def embed_batch(params: dict, batch: Batch, cfg: EncoderConfig) -> np.ndarray:
    if batch.ids.shape[1] > cfg.max_len:
        raise CapacityError(f"sequence of {batch.ids.shape[1]} tokens exceeds max_len={cfg.max_len}")
    x = params["tok_emb"][batch.ids]
    if cfg.use_segment:
        x = x + params["seg_emb"][batch.seg]
    if cfg.use_position:
        x = x + params["pos_emb"][batch.pos]
    return x


def _softmax(z):
    e = z - z.max(axis=-1, keepdims=True)
    np.exp(e, out=e)
    e /= e.sum(axis=-1, keepdims=True)
    return e


def _mask_logits(s, allowed, live, mode):
    if mode == "additive":
        return np.where(allowed, s, -np.inf)
    return np.where(live, s * allowed, -np.inf)


def masked_attention(Q, K, V, M, mode: str = "additive", return_weights: bool = False):
    """Single-head attention with a 0/1 graph mask.

    ``additive`` (default) gives masked pairs weight exactly 0;
    ``multiplicative`` multiplies the logits by M before the softmax, so
    masked pairs keep logit 0.
    """
    Q, K, V = (np.asarray(a, dtype=float) for a in (Q, K, V))
    M = np.asarray(M)
    assert M.shape == (Q.shape[0], K.shape[0]), "mask shape mismatch"
    allowed = M.astype(bool)
    assert allowed.any(axis=-1).all(), "mask row with no incoming edge"
    s = Q @ K.T / math.sqrt(Q.shape[-1])
    w = _softmax(_mask_logits(s, allowed, np.ones_like(allowed), mode))
    out = w @ V
    return (out, w) if return_weights else out


def _layer_norm(x, g, b):
    mu = x.mean(-1, keepdims=True)
    xc = x - mu
    inv = 1.0 / np.sqrt((xc * xc).mean(-1, keepdims=True) + LN_EPS)
    xh = xc * inv
    return xh * g + b, (xh, inv)


def _layer_norm_back(dy, g, cache):
    xh, inv = cache
    dxh = dy * g
    n = xh.shape[-1]
    dx = inv / n * (n * dxh - dxh.sum(-1, keepdims=True) - xh * (dxh * xh).sum(-1, keepdims=True))
    dg = (dy * xh).reshape(-1, n).sum(0)
    db = dy.reshape(-1, n).sum(0)
    return dx, dg, db


def _gelu(u):
    t = np.tanh(GELU_C * (u + 0.044715 * (u * u * u)))
    return 0.5 * u * (1.0 + t), t


def _gelu_back(u, t):
    return 0.5 * (1.0 + t) + 0.5 * u * (1.0 - t * t) * GELU_C * (1.0 + 3 * 0.044715 * u * u)


def _split(x, h):
    B, n, d = x.shape
    return x.reshape(B, n, h, d // h).transpose(0, 2, 1, 3)


def _merge(x):
    B, h, n, dk = x.shape
    return x.transpose(0, 2, 1, 3).reshape(B, n, h * dk)


def _sum_bn(x):
    return x.reshape(-1, x.shape[-1]).sum(0)


def _outer_bn(a, b):
    return a.reshape(-1, a.shape[-1]).T @ b.reshape(-1, b.shape[-1])


def _layer_forward(x, params, l, batch, cfg):
    P = lambda k: params[f"l{l}.{k}"]  # noqa: E731
    h = cfg.n_heads
    dk = cfg.d_model // h
    q = _split(x @ P("Wq") + P("bq"), h)
    k = _split(x @ P("Wk") + P("bk"), h)
    v = _split(x @ P("Wv") + P("bv"), h)
    scale = 1.0 / math.sqrt(dk)
    s = (q @ k.transpose(0, 1, 3, 2)) * scale
    allowed = batch.allowed[:, None]
    w = _softmax(_mask_logits(s, allowed, batch.live[:, None], cfg.mask_mode))
    a = _merge(w @ v)
    o = a @ P("Wo") + P("bo")
    h1, ln1 = _layer_norm(x + o, P("ln1_g"), P("ln1_b"))
    u = h1 @ P("W1") + P("b1")
    g, t = _gelu(u)
    f = g @ P("W2") + P("b2")
    out, ln2 = _layer_norm(h1 + f, P("ln2_g"), P("ln2_b"))
    cache = dict(x=x, q=q, k=k, v=v, w=w, a=a, h1=h1, ln1=ln1, u=u, g=g, t=t, ln2=ln2,
                 scale=scale, allowed=allowed)
    return out, cache


def _layer_backward(dout, params, l, cache, cfg, grads):
    P = lambda k: params[f"l{l}.{k}"]  # noqa: E731
    G = lambda k, val: grads.__setitem__(f"l{l}.{k}", val)  # noqa: E731
    dr2, dg2, db2 = _layer_norm_back(dout, P("ln2_g"), cache["ln2"])
    G("ln2_g", dg2)
    G("ln2_b", db2)
    G("W2", _outer_bn(cache["g"], dr2))
    G("b2", _sum_bn(dr2))
    du = (dr2 @ P("W2").T) * _gelu_back(cache["u"], cache["t"])
    G("W1", _outer_bn(cache["h1"], du))
    G("b1", _sum_bn(du))
    dh1 = dr2 + du @ P("W1").T
    dr1, dg1, db1 = _layer_norm_back(dh1, P("ln1_g"), cache["ln1"])
    G("ln1_g", dg1)
    G("ln1_b", db1)
    G("Wo", _outer_bn(cache["a"], dr1))
    G("bo", _sum_bn(dr1))
    da = _split(dr1 @ P("Wo").T, cfg.n_heads)
    w, v, q, k = cache["w"], cache["v"], cache["q"], cache["k"]
    dw = da @ v.transpose(0, 1, 3, 2)
    dv = w.transpose(0, 1, 3, 2) @ da
    dz = w * (dw - (dw * w).sum(-1, keepdims=True))
    if cfg.mask_mode == "multiplicative":
        dz = dz * cache["allowed"]
    ds = dz * cache["scale"]
    dq = ds @ k
    dkk = ds.transpose(0, 1, 3, 2) @ q
    x = cache["x"]
    dx = dr1.copy()
    for name, dd in (("q", dq), ("k", dkk), ("v", dv)):
        dd = _merge(dd)
        G(f"W{name}", _outer_bn(x, dd))
        G(f"b{name}", _sum_bn(dd))
        dx += dd @ P(f"W{name}").T
    return dx


# ---------------------------------------------------------------- full model

def forward(params: dict, batch: Batch, cfg: EncoderConfig):
    """Run the encoder and classifier. Returns (scores, final reps, cache)."""
    x = embed_batch(params, batch, cfg)
    caches = []
    for l in range(cfg.n_layers):
        x, c = _layer_forward(x, params, l, batch, cfg)
        caches.append(c)
    z = _classifier_input(x, batch, cfg)
    logits = (z @ params["cls_W"])[:, 0] + params["cls_b"][0]
    scores = 1.0 / (1.0 + np.exp(-logits))
    return scores, x, dict(layers=caches, z=z, reps=x)


def _classifier_input(x, batch, cfg):
    pieces = {
        "d": x[batch.fb, 0],
        "s": x[batch.fb, batch.spos],
        "f": x[batch.fb, batch.fpos],
    }
    return np.concatenate([pieces[p] for p in cfg.parts], axis=1)


def backward(params: dict, batch: Batch, cfg: EncoderConfig, cache: dict,
             dlogits: np.ndarray) -> dict:
    grads = {k: np.zeros_like(v) for k, v in params.items()}
    z = cache["z"]
    grads["cls_W"] = z.T @ dlogits[:, None]
    grads["cls_b"] = np.array([dlogits.sum()])
    dz = dlogits[:, None] * params["cls_W"][:, 0][None, :]
    dx = np.zeros_like(cache["reps"])
    d = cfg.d_model
    rows = {"d": np.zeros_like(batch.fb), "s": batch.spos, "f": batch.fpos}
    for i, part in enumerate(cfg.parts):
        np.add.at(dx, (batch.fb, rows[part]), dz[:, i * d:(i + 1) * d])
    for l in reversed(range(cfg.n_layers)):
        dx = _layer_backward(dx, params, l, cache["layers"][l], cfg, grads)
    flat_dx = dx.reshape(-1, d)
    np.add.at(grads["tok_emb"], batch.ids.ravel(), flat_dx)
    if cfg.use_segment:
        np.add.at(grads["seg_emb"], batch.seg.ravel(), flat_dx)
    if cfg.use_position:
        np.add.at(grads["pos_emb"], batch.pos.ravel(), flat_dx)
    return grads


BCE_EPS = 1e-7


def bce_loss(scores, labels) -> float:
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if scores.shape != labels.shape:
        raise UsageError(f"{scores.shape[0] if scores.ndim else 1} scores vs "
                         f"{labels.shape[0] if labels.ndim else 1} labels")
    if scores.size == 0:
        raise UsageError("bce_loss needs at least one score")
    p = np.clip(scores, BCE_EPS, 1.0 - BCE_EPS)
    return float(np.mean(-(labels * np.log(p) + (1.0 - labels) * np.log(1.0 - p))))


def bce_grad_logits(scores, labels) -> np.ndarray:
    """d(mean BCE)/d(logit) for sigmoid scores; zero where the clamp is active."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=float)
    g = (scores - labels) / scores.size
    clamped = (scores < BCE_EPS) | (scores > 1.0 - BCE_EPS)
    return np.where(clamped, 0.0, g)


def loss_and_grads(params: dict, batch: Batch, cfg: EncoderConfig):
    scores, _, cache = forward(params, batch, cfg)
    loss = bce_loss(scores, batch.labels)
    grads = backward(params, batch, cfg, cache, bce_grad_logits(scores, batch.labels))
    return loss, grads, scores


# ---------------------------------------------------------------- single-document API

@dataclass
class Encoded:
    reps: np.ndarray    # (n, d_model)
    doc: np.ndarray     # (d_model,)
    sents: np.ndarray   # (n_sentences, d_model)
    facts: np.ndarray   # (n_facts, d_model)


def _single(seq, mask, vocab):
    return make_batch([seq], [np.asarray(mask)], vocab)


def embed(seq: HierSequence, params: dict, cfg: EncoderConfig, vocab: Vocab) -> np.ndarray:
    if len(seq) > cfg.max_len:
        raise CapacityError(f"sequence of {len(seq)} tokens exceeds max_len={cfg.max_len}")
    batch = _single(seq, np.eye(len(seq)), vocab)
    return embed_batch(params, batch, cfg)[0]


def encode(seq: HierSequence, mask: np.ndarray, params: dict, cfg: EncoderConfig,
           vocab: Vocab) -> Encoded:
    batch = _single(seq, mask, vocab)
    x = embed_batch(params, batch, cfg)
    for l in range(cfg.n_layers):
        x, _ = _layer_forward(x, params, l, batch, cfg)
    r = x[0]
    return Encoded(r, r[seq.doc_pos], r[list(seq.sent_pos)], r[list(seq.fact_pos)])


def classify_facts(encoded: Encoded, seq: HierSequence, params: dict,
                   cfg: EncoderConfig) -> np.ndarray:
    """Sigmoid score per fact from the (doc, sentence, fact) concatenation."""
    if len(seq.fact_sentence) != seq.n_facts:
        raise UsageError("fact without a sentence token")
    pieces = {
        "d": np.repeat(encoded.doc[None, :], seq.n_facts, axis=0),
        "s": encoded.sents[list(seq.fact_sentence)],
        "f": encoded.facts,
    }
    z = np.concatenate([pieces[p] for p in cfg.parts], axis=1)
    if params["cls_W"].shape[0] != z.shape[1]:
        raise UsageError("classifier width does not match classifier_mode")
    logits = (z @ params["cls_W"])[:, 0] + params["cls_b"][0]
    return 1.0 / (1.0 + np.exp(-logits))


def predict(params: dict, seqs: Sequence[HierSequence], masks: Sequence[np.ndarray],
            cfg: EncoderConfig, vocab: Vocab) -> list[np.ndarray]:
    """Per-document fact scores for a batch of documents."""
    batch = make_batch(seqs, masks, vocab)
    scores, _, _ = forward(params, batch, cfg)
    return np.split(scores, np.cumsum(batch.facts_per_doc)[:-1])
