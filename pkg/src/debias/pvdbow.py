"""Paragraph vectors, distributed bag-of-words variant, trained with negative sampling.

Each training document owns a vector ``d`` that is trained to predict the
document's words through output word vectors ``v``. Per (document, word)
pair the loss is::

    -log sigmoid(d . v_w) - sum_j log sigmoid(-d . v_{n_j})

with ``n_j`` drawn from the unigram distribution raised to the 3/4 power.
Parameters are stored as float32 so a saved model predicts bit-identically.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numba import njit

from .lda import _flatten, _seed, numba_seed

MAGIC = b"DPVD"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIIIIIddQI")


@dataclass(frozen=True)
class PvdbowConfig:
    dim: int = 100
    epochs: int = 20
    negative_k: int = 5
    lr_start: float = 0.025
    lr_end: float = 0.0001
    min_count: int = 2
    infer_steps: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.dim < 2:
            raise ValueError("dim must be at least 2")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.negative_k < 1:
            raise ValueError("negative_k must be at least 1")
        if self.infer_steps < 1:
            raise ValueError("infer_steps must be at least 1")
        if not 0 < self.lr_end <= self.lr_start:
            raise ValueError("need 0 < lr_end <= lr_start")
        if self.min_count < 1:
            raise ValueError("min_count must be at least 1")


@njit(cache=True)
def _sigmoid(x):
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


@njit(cache=True)
def pair_loss_grad(d, W, targets, m, gd, gW):
    """Loss of one (doc, word) pair and its gradients.

    ``targets[0]`` is the observed word, ``targets[1:m]`` the negatives.
    Writes d(loss)/d(d) into ``gd`` and d(loss)/d(W[targets[j]]) into ``gW[j]``.
    """
    dim = d.shape[0]
    loss = 0.0
    for c in range(dim):
        gd[c] = 0.0
    for j in range(m):
        v = W[targets[j]]
        s = 0.0
        for c in range(dim):
            s += d[c] * v[c]
        label = 1.0 if j == 0 else 0.0
        f = _sigmoid(s)
        if j == 0:
            loss -= math.log(max(f, 1e-300))
        else:
            loss -= math.log(max(1.0 - f, 1e-300))
        g = f - label
        for c in range(dim):
            gd[c] += g * v[c]
            gW[j, c] = g * d[c]
    return loss


@njit(cache=True)
def _sample_word(cum):
    u = np.random.random() * cum[cum.shape[0] - 1]
    return np.searchsorted(cum, u, side="right")


@njit(cache=True)
def _doc_pass(d, W, words, lo, hi, keep, cum, k, lr0, lr1, step, total, update_words, targets, gd, gW):
    for i in range(lo, hi):
        w = words[i]
        if not keep[w]:
            continue
        lr = lr0 - (lr0 - lr1) * step / total
        step += 1
        targets[0] = w
        m = 1
        for _ in range(k):
            n = _sample_word(cum)
            if n != w:
                targets[m] = n
                m += 1
        pair_loss_grad(d, W, targets, m, gd, gW)
        if update_words:
            for j in range(m):
                row = W[targets[j]]
                for c in range(d.shape[0]):
                    row[c] -= lr * gW[j, c]
        for c in range(d.shape[0]):
            d[c] -= lr * gd[c]
    return step


@njit(cache=True)
def _train_epoch(D, W, words, ptr, keep, cum, k, lr0, lr1, step, total):
    dim = D.shape[1]
    targets = np.empty(k + 1, np.int64)
    gd = np.empty(dim)
    gW = np.empty((k + 1, dim))
    for doc in range(ptr.shape[0] - 1):
        step = _doc_pass(D[doc], W, words, ptr[doc], ptr[doc + 1], keep, cum, k, lr0, lr1, step, total, True, targets, gd, gW)
    return step


@njit(cache=True)
def _infer_batch(W, words, ptr, keep, cum, k, lr0, lr1, steps, seed, out):
    dim = W.shape[1]
    targets = np.empty(k + 1, np.int64)
    gd = np.empty(dim)
    gW = np.empty((k + 1, dim))
    for doc in range(ptr.shape[0] - 1):
        lo, hi = ptr[doc], ptr[doc + 1]
        n = 0
        for i in range(lo, hi):
            if keep[words[i]]:
                n += 1
        if n == 0:
            continue
        np.random.seed(seed)
        d = np.empty(dim, np.float32)
        for c in range(dim):
            d[c] = (np.random.random() - 0.5) / dim
        total = steps * n
        step = 0
        for _ in range(steps):
            step = _doc_pass(d, W, words, lo, hi, keep, cum, k, lr0, lr1, step, total, False, targets, gd, gW)
        out[doc] = d


def _noise_cdf(counts: np.ndarray, keep: np.ndarray) -> np.ndarray:
    weights = np.where(keep, counts.astype(np.float64) ** 0.75, 0.0)
    return np.cumsum(weights)


@dataclass(frozen=True)
class PvdbowModel:
    config: PvdbowConfig
    word_counts: np.ndarray
    word_out_vectors: np.ndarray
    doc_vectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.config.dim

    @property
    def keep(self) -> np.ndarray:
        return self.word_counts >= self.config.min_count

    def to_bytes(self, include_docs: bool = True) -> bytes:
        c = self.config
        docs = self.doc_vectors if include_docs else np.zeros((0, c.dim), np.float32)
        head = _HEADER.pack(
            MAGIC, FORMAT_VERSION, c.dim, len(docs), len(self.word_counts), c.negative_k, c.epochs,
            c.min_count, c.lr_start, c.lr_end, c.seed, c.infer_steps,
        )
        return b"".join(
            [
                head,
                np.ascontiguousarray(self.word_counts, dtype="<i8").tobytes(),
                np.ascontiguousarray(docs, dtype="<f4").tobytes(),
                np.ascontiguousarray(self.word_out_vectors, dtype="<f4").tobytes(),
            ]
        )

    @classmethod
    def from_bytes(cls, blob: bytes) -> "PvdbowModel":
        magic, version, dim, n_docs, v, k, epochs, min_count, lr0, lr1, seed, steps = _HEADER.unpack_from(blob)
        if magic != MAGIC or version != FORMAT_VERSION:
            raise ValueError("not a PV-DBOW model blob")
        off = _HEADER.size
        counts = np.frombuffer(blob, "<i8", v, off).astype(np.int64)
        off += 8 * v
        docs = np.frombuffer(blob, "<f4", n_docs * dim, off).reshape(n_docs, dim).astype(np.float32)
        off += 4 * n_docs * dim
        words = np.frombuffer(blob, "<f4", v * dim, off).reshape(v, dim).astype(np.float32)
        cfg = PvdbowConfig(dim, epochs, k, lr0, lr1, min_count, steps, seed)
        return cls(cfg, counts, words, docs)


def pvdbow_fit(train_docs: Sequence[Sequence[int]], vocab_size: int, config: PvdbowConfig = PvdbowConfig()) -> PvdbowModel:
    """Single-threaded SGD with a linearly decaying learning rate."""
    if len(train_docs) == 0:
        raise ValueError("cannot fit paragraph vectors on an empty corpus")
    words, ptr = _flatten(train_docs)
    counts = np.bincount(words, minlength=vocab_size).astype(np.int64)
    keep = counts >= config.min_count
    cum = _noise_cdf(counts, keep)
    n_live = int(counts[keep].sum())

    rng = np.random.default_rng(config.seed)
    D = ((rng.random((len(train_docs), config.dim)) - 0.5) / config.dim).astype(np.float32)
    W = np.zeros((vocab_size, config.dim), dtype=np.float32)
    if n_live == 0:
        return PvdbowModel(config, counts, W, D)

    _seed(numba_seed(config.seed))
    total = config.epochs * n_live
    step = 0
    for epoch in range(config.epochs):
        step = _train_epoch(D, W, words, ptr, keep, cum, config.negative_k, config.lr_start, config.lr_end, step, total)
        if not (np.isfinite(D).all() and np.isfinite(W).all()):
            raise FloatingPointError(f"non-finite parameters after epoch {epoch}")
    return PvdbowModel(config, counts, W, D)


def pvdbow_transform(docs: Sequence[Sequence[int]], model: PvdbowModel, steps: int | None = None, seed: int = 0) -> np.ndarray:
    """Infer vectors for unseen documents with the word vectors frozen.

    Documents without any retained word map to the zero vector.
    """
    c = model.config
    words, ptr = _flatten(docs)
    out = np.zeros((len(docs), c.dim), dtype=np.float32)
    keep = model.keep
    cum = _noise_cdf(model.word_counts, keep)
    if len(cum) == 0 or cum[-1] == 0:
        return out
    _infer_batch(
        model.word_out_vectors, words, ptr, keep, cum, c.negative_k, c.lr_start, c.lr_end,
        steps or c.infer_steps, numba_seed(seed), out,
    )
    return out


def pvdbow_infer(doc: Sequence[int], model: PvdbowModel, steps: int | None = None, seed: int = 0) -> np.ndarray:
    return pvdbow_transform([doc], model, steps, seed)[0]
