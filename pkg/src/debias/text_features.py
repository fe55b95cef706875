"""Tokenization, n-gram vocabularies and tf-idf vectors.

Feature matrices are ``scipy.sparse.csr_matrix`` (tf-idf, raw counts) or dense
``numpy`` arrays (topic proportions, paragraph vectors).
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

FORMAT_VERSION = 1
DEFAULT_CAP = 25_000
NGRAM_MODES = ("unigram", "unigram+bigram")

_TOKEN_RE = re.compile(r"[^\W_]+")


def tokenize(summary: str, body: str) -> list[str]:
    """Lowercased alphanumeric runs of ``summary + " " + body``."""
    return _TOKEN_RE.findall(f"{summary} {body}".lower())


def ngrams(tokens: Sequence[str], mode: str) -> list[str]:
    if mode == "unigram":
        return list(tokens)
    if mode == "unigram+bigram":
        return list(tokens) + [f"{a} {b}" for a, b in zip(tokens, tokens[1:])]
    raise ValueError(f"unknown ngram mode {mode!r}")


def ngram_mode(n: int) -> str:
    return {1: "unigram", 2: "unigram+bigram"}[n]


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    values: np.ndarray

    @property
    def pairs(self) -> list[tuple[int, float]]:
        return list(zip(self.indices.tolist(), self.values.tolist()))

    def __len__(self) -> int:
        return len(self.indices)

    def norm(self) -> float:
        return float(np.sqrt(np.dot(self.values, self.values)))


@dataclass(frozen=True)
class Vocabulary:
    terms: tuple[str, ...]
    doc_freq: tuple[int, ...]
    n_docs: int
    mode: str = "unigram"
    index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self) -> int:
        return len(self.terms)

    @property
    def idf(self) -> np.ndarray:
        df = np.asarray(self.doc_freq, dtype=np.float64)
        return np.log((1.0 + self.n_docs) / (1.0 + df)) + 1.0

    def ids(self, tokens: Sequence[str]) -> list[int]:
        """Column ids of the in-vocabulary n-grams of a token list, in text order."""
        index = self.index
        return [index[t] for t in ngrams(tokens, self.mode) if t in index]

    def to_json(self) -> str:
        return json.dumps(
            {
                "format_version": FORMAT_VERSION,
                "mode": self.mode,
                "n_docs": self.n_docs,
                "terms": list(self.terms),
                "df": list(self.doc_freq),
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, text: str) -> "Vocabulary":
        doc = json.loads(text)
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported vocabulary version {doc.get('format_version')!r}")
        return cls(tuple(doc["terms"]), tuple(doc["df"]), doc["n_docs"], doc["mode"])


def build_vocab(train_docs: Iterable[Sequence[str]], mode: str = "unigram", cap: int = DEFAULT_CAP) -> Vocabulary:
    """Keep the ``cap`` n-grams with highest document frequency (ties: lexicographic)."""
    if cap < 1:
        raise ValueError("vocabulary cap must be positive")
    df: Counter[str] = Counter()
    n_docs = 0
    for toks in train_docs:
        n_docs += 1
        df.update(set(ngrams(toks, mode)))
    if n_docs == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:cap]
    return Vocabulary(tuple(t for t, _ in ranked), tuple(c for _, c in ranked), n_docs, mode)


def _counts(tokens: Sequence[str], vocab: Vocabulary) -> tuple[np.ndarray, np.ndarray]:
    c = Counter(vocab.ids(tokens))
    if not c:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64)
    idx = np.fromiter(sorted(c), dtype=np.int64, count=len(c))
    return idx, np.array([c[i] for i in idx.tolist()], dtype=np.float64)


def tfidf_vectorize(tokens: Sequence[str], vocab: Vocabulary, idf: np.ndarray | None = None) -> SparseVector:
    """Raw count times smoothed idf, scaled to unit L2 norm; OOV n-grams are ignored."""
    if idf is None:
        idf = vocab.idf
    idx, tf = _counts(tokens, vocab)
    w = tf * idf[idx]
    if len(w):
        w /= math.sqrt(float(np.dot(w, w)))
    return SparseVector(idx, w)


def _stack(vectors: list[SparseVector], n_cols: int) -> sp.csr_matrix:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(v) for v in vectors])
    indices = np.concatenate([v.indices for v in vectors]) if vectors else np.empty(0, np.int64)
    data = np.concatenate([v.values for v in vectors]) if vectors else np.empty(0)
    return sp.csr_matrix((data, indices, indptr), shape=(len(vectors), n_cols))


def tfidf_matrix(docs: Iterable[Sequence[str]], vocab: Vocabulary) -> sp.csr_matrix:
    idf = vocab.idf
    return _stack([tfidf_vectorize(d, vocab, idf) for d in docs], len(vocab))


def count_matrix(docs: Iterable[Sequence[str]], vocab: Vocabulary) -> sp.csr_matrix:
    """Raw term counts, the event model for multinomial naive Bayes."""
    return _stack([SparseVector(*_counts(d, vocab)) for d in docs], len(vocab))
