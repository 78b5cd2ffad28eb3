"""BCE training with Adam and the inverse-square-root warmup schedule."""

from __future__ import annotations

import io
import json
import logging
import math
import os
import zipfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from ..errors import DataError, TrainingError, UsageError
from ..hierseq import HierSequence, build_mask
from .model import EncoderConfig, Vocab, init_params, loss_and_grads, make_batch

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class TrainingConfig:
    base_lr: float = 2e-3
    warmup: int = 10000
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    batch_size: int = 32
    max_steps: int = 50000
    checkpoint_every: int = 1500
    seed: int = 0

    def __post_init__(self):
        if self.warmup < 1:
            raise UsageError("warmup must be >= 1")
        if self.batch_size < 1 or self.max_steps < 0:
            raise UsageError("batch_size must be >= 1 and max_steps >= 0")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TrainingConfig":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise UsageError(f"unknown training options: {sorted(unknown)}")
        return cls(**d)


def lr_schedule(step: int, cfg: TrainingConfig | None = None) -> float:
    """``base_lr * min(step**-0.5, step * warmup**-1.5)``; peaks at step == warmup."""
    cfg = cfg or TrainingConfig()
    if step < 1:
        raise UsageError(f"step must be >= 1, got {step}")
    return cfg.base_lr * min(step ** -0.5, step * cfg.warmup ** -1.5)


@dataclass
class Example:
    id: str
    seq: HierSequence
    mask: np.ndarray
    labels: np.ndarray  # one per fact kept in ``seq``


def make_example(doc_id: str, seq: HierSequence, labels: Sequence, word_scope: str = "global") -> Example:
    y = np.asarray(labels, dtype=float)[:seq.n_facts]
    if y.shape[0] != seq.n_facts:
        raise DataError(f"example {doc_id!r}: {y.shape[0]} labels for {seq.n_facts} facts")
    return Example(doc_id, seq, build_mask(seq, word_scope), y)


class Adam:
    def __init__(self, params: dict, cfg: TrainingConfig):
        self.cfg = cfg
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict, lr: float) -> None:
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.beta1 ** self.t
        bc2 = 1.0 - c.beta2 ** self.t
        for k, g in grads.items():
            m, v = self.m[k], self.v[k]
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            params[k] -= lr * (m / bc1) / (np.sqrt(v / bc2) + c.adam_eps)


@dataclass
class TrainResult:
    params: dict
    vocab: Vocab
    curve: list  # (step, lr, loss)
    checkpoints: list


def build_vocab(examples: Sequence[Example], cfg: EncoderConfig) -> Vocab:
    return Vocab.build((ex.seq.texts for ex in examples), cfg.vocab_size)


def train(examples: Sequence[Example], cfg: EncoderConfig, tcfg: TrainingConfig,
          vocab: Vocab | None = None, checkpoint_dir: str | os.PathLike | None = None,
          params: dict | None = None) -> TrainResult:
    if not examples:
        raise UsageError("no training examples")
    for ex in examples:
        if ex.labels is None or len(ex.labels) != ex.seq.n_facts:
            raise DataError(f"example {ex.id!r} has no oracle labels")
    rng = np.random.default_rng(tcfg.seed)
    vocab = vocab or build_vocab(examples, cfg)
    if params is None:
        params = init_params(cfg, len(vocab), rng)
    opt = Adam(params, tcfg)
    curve, saved = [], []
    order = np.empty(0, dtype=np.int64)
    cursor = 0
    bs = min(tcfg.batch_size, len(examples))
    for step in range(1, tcfg.max_steps + 1):
        if cursor + bs > order.size:
            order = rng.permutation(len(examples))
            cursor = 0
        chosen = [examples[i] for i in order[cursor:cursor + bs]]
        cursor += bs
        batch = make_batch([e.seq for e in chosen], [e.mask for e in chosen], vocab,
                           [e.labels for e in chosen])
        loss, grads, _ = loss_and_grads(params, batch, cfg)
        if not math.isfinite(loss) or not all(np.isfinite(g).all() for g in grads.values()):
            ids = ", ".join(e.id for e in chosen)
            raise TrainingError(f"non-finite loss at step {step} (examples: {ids})")
        lr = lr_schedule(step, tcfg)
        opt.step(params, grads, lr)
        curve.append((step, lr, loss))
        if checkpoint_dir is not None and tcfg.checkpoint_every and step % tcfg.checkpoint_every == 0:
            path = Path(checkpoint_dir) / f"step{step:07d}.npz"
            save_checkpoint(path, params, cfg, vocab, step=step)
            saved.append(path)
        if step % 100 == 0:
            log.info("step %d lr %.3g loss %.5f", step, lr, loss)
    return TrainResult(params, vocab, curve, saved)


# ---------------------------------------------------------------- checkpoints

def save_checkpoint(path: str | os.PathLike, params: dict, cfg: EncoderConfig, vocab: Vocab,
                    step: int = 0, extra: dict | None = None) -> None:
    """Write an ``.npz`` holding every parameter tensor plus a JSON header."""
    header = {
        "version": CHECKPOINT_VERSION,
        "step": step,
        "encoder": cfg.to_dict(),
        "vocab": vocab.itos,
        "shapes": {k: list(v.shape) for k, v in params.items()},
        **(extra or {}),
    }
    arrays = {f"param/{k}": v for k, v in sorted(params.items())}
    arrays["header"] = np.frombuffer(json.dumps(header, sort_keys=True).encode(), dtype=np.uint8)
    buf = io.BytesIO()
    # fixed member timestamps keep the archive byte-reproducible
    with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_STORED) as zf:
        for name, arr in arrays.items():
            info = zipfile.ZipInfo(name + ".npy", date_time=(1980, 1, 1, 0, 0, 0))
            with zf.open(info, "w") as fh:
                np.lib.format.write_array(fh, np.ascontiguousarray(arr), allow_pickle=False)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(buf.getvalue())
    os.replace(tmp, path)


def load_checkpoint(path: str | os.PathLike):
    """Returns (params, EncoderConfig, Vocab, header)."""
    with np.load(path) as z:
        header = json.loads(z["header"].tobytes().decode())
        if header.get("version") != CHECKPOINT_VERSION:
            raise DataError(f"{path}: unsupported checkpoint version {header.get('version')}")
        params = {k[len("param/"):]: z[k].copy() for k in z.files if k.startswith("param/")}
    for k, shape in header["shapes"].items():
        if list(params[k].shape) != shape:
            raise DataError(f"{path}: tensor {k} has shape {params[k].shape}, header says {shape}")
    return params, EncoderConfig.from_dict(header["encoder"]), Vocab(header["vocab"]), header


def write_curve(path: str | os.PathLike, curve) -> None:
    lines = ["step,lr,loss"] + [f"{s},{lr:.12g},{loss:.12g}" for s, lr, loss in curve]
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text("\n".join(lines) + "\n")
    os.replace(tmp, path)
