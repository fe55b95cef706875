"""Latent Dirichlet allocation fitted by collapsed Gibbs sampling.

Documents are token-id lists over a (unigram) :class:`Vocabulary`. The fitted
model keeps only the topic-word count matrix; test documents are folded in
against those frozen counts and represented by their smoothed topic
proportions.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from numba import njit

MAGIC = b"DLDA"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIIIddQ")


def numba_seed(seed: int) -> int:
    """Fold a 64-bit seed into the 32-bit range accepted by numba's generator."""
    return int(np.random.SeedSequence(seed).generate_state(1)[0])


@njit(cache=True)
def _seed(s):
    np.random.seed(s)


@njit(cache=True)
def _draw(p):
    total = 0.0
    for k in range(p.shape[0]):
        total += p[k]
    u = np.random.random() * total
    acc = 0.0
    for k in range(p.shape[0]):
        acc += p[k]
        if u < acc:
            return k
    return p.shape[0] - 1


@njit(cache=True)
def _init(words, doc_of, z, ndk, nkw, nk):
    K = nk.shape[0]
    for i in range(words.shape[0]):
        k = np.random.randint(K)
        z[i] = k
        ndk[doc_of[i], k] += 1
        nkw[k, words[i]] += 1
        nk[k] += 1


@njit(cache=True)
def _sweep(words, doc_of, z, ndk, nkw, nk, alpha, beta):
    K = nk.shape[0]
    vbeta = nkw.shape[1] * beta
    p = np.empty(K)
    for i in range(words.shape[0]):
        w = words[i]
        d = doc_of[i]
        k = z[i]
        ndk[d, k] -= 1
        nkw[k, w] -= 1
        nk[k] -= 1
        for j in range(K):
            p[j] = (ndk[d, j] + alpha) * (nkw[j, w] + beta) / (nk[j] + vbeta)
        k = _draw(p)
        z[i] = k
        ndk[d, k] += 1
        nkw[k, w] += 1
        nk[k] += 1


@njit(cache=True)
def _fold_in(words, ptr, nkw, nk, alpha, beta, burn, samples, seed, out):
    K = nk.shape[0]
    vbeta = nkw.shape[1] * beta
    p = np.empty(K)
    for d in range(ptr.shape[0] - 1):
        lo, hi = ptr[d], ptr[d + 1]
        n = hi - lo
        if n == 0:
            for k in range(K):
                out[d, k] = 1.0 / K
            continue
        np.random.seed(seed)
        z = np.empty(n, np.int64)
        ndk = np.zeros(K)
        for i in range(n):
            z[i] = np.random.randint(K)
            ndk[z[i]] += 1
        acc = np.zeros(K)
        for sweep in range(burn + samples):
            for i in range(n):
                w = words[lo + i]
                ndk[z[i]] -= 1
                for j in range(K):
                    p[j] = (ndk[j] + alpha) * (nkw[j, w] + beta) / (nk[j] + vbeta)
                k = _draw(p)
                z[i] = k
                ndk[k] += 1
            if sweep >= burn:
                for j in range(K):
                    acc[j] += (ndk[j] + alpha) / (n + K * alpha)
        s = 0.0
        for j in range(K):
            s += acc[j]
        for j in range(K):
            out[d, j] = acc[j] / s


@dataclass(frozen=True)
class LdaModel:
    topic_word_counts: np.ndarray
    alpha: float
    beta: float
    seed: int = 0

    @property
    def n_topics(self) -> int:
        return self.topic_word_counts.shape[0]

    @property
    def vocab_size(self) -> int:
        return self.topic_word_counts.shape[1]

    @property
    def topic_totals(self) -> np.ndarray:
        return self.topic_word_counts.sum(axis=1)

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(MAGIC, FORMAT_VERSION, self.n_topics, self.vocab_size, self.alpha, self.beta, self.seed)
        return head + np.ascontiguousarray(self.topic_word_counts, dtype="<i8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "LdaModel":
        magic, version, k, v, alpha, beta, seed = _HEADER.unpack_from(blob)
        if magic != MAGIC or version != FORMAT_VERSION:
            raise ValueError("not an LDA model blob")
        counts = np.frombuffer(blob, dtype="<i8", offset=_HEADER.size, count=k * v)
        return cls(counts.reshape(k, v).astype(np.int64), alpha, beta, seed)


def _flatten(docs: Sequence[Sequence[int]]) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(docs) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(d) for d in docs])
    words = np.fromiter((w for d in docs for w in d), dtype=np.int64, count=int(ptr[-1]))
    return words, ptr


def lda_fit(
    train_docs: Sequence[Sequence[int]],
    vocab_size: int,
    n_topics: int = 100,
    alpha: float | None = None,
    beta: float = 0.01,
    iters: int = 500,
    seed: int = 0,
    on_sweep: Callable[[int, np.ndarray], None] | None = None,
) -> LdaModel:
    """Collapsed Gibbs sampling; ``alpha`` defaults to ``50 / n_topics``.

    ``on_sweep(i, topic_word_counts)`` is called after every full sweep.
    """
    if n_topics < 2:
        raise ValueError("n_topics must be at least 2")
    if iters < 1:
        raise ValueError("iters must be at least 1")
    if alpha is None:
        alpha = 50.0 / n_topics
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha and beta must be positive")
    if len(train_docs) == 0:
        raise ValueError("cannot fit LDA on an empty corpus")
    words, ptr = _flatten(train_docs)
    if len(words) and (words.min() < 0 or words.max() >= vocab_size):
        raise ValueError("token id outside vocabulary")
    doc_of = np.repeat(np.arange(len(train_docs), dtype=np.int64), np.diff(ptr))

    z = np.empty(len(words), dtype=np.int64)
    ndk = np.zeros((len(train_docs), n_topics), dtype=np.int64)
    nkw = np.zeros((n_topics, vocab_size), dtype=np.int64)
    nk = np.zeros(n_topics, dtype=np.int64)
    _seed(numba_seed(seed))
    _init(words, doc_of, z, ndk, nkw, nk)
    for it in range(iters):
        _sweep(words, doc_of, z, ndk, nkw, nk, float(alpha), float(beta))
        if on_sweep is not None:
            on_sweep(it, nkw)
    return LdaModel(nkw, float(alpha), float(beta), seed)


def lda_transform(
    docs: Sequence[Sequence[int]], model: LdaModel, burn: int = 50, samples: int = 20, seed: int = 0
) -> np.ndarray:
    """Fold-in topic proportions, one row per document.

    Every document restarts the generator from ``seed``, so a row depends only
    on its own tokens.
    """
    if samples < 1 or burn < 0:
        raise ValueError("need samples >= 1 and burn >= 0")
    words, ptr = _flatten(docs)
    out = np.empty((len(docs), model.n_topics))
    nkw = np.ascontiguousarray(model.topic_word_counts, dtype=np.int64)
    _fold_in(words, ptr, nkw, nkw.sum(axis=1), model.alpha, model.beta, burn, samples, numba_seed(seed), out)
    return out


def lda_infer(doc: Sequence[int], model: LdaModel, burn: int = 50, samples: int = 20, seed: int = 0) -> np.ndarray:
    return lda_transform([doc], model, burn, samples, seed)[0]
