"""Rounding protocol, RMSE and result tables."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

ROUNDING_MODES = ("nearest", "floor")

METHOD_LABELS = {
    "majority": "Majority Voting",
    "user_mean": "User Mean",
    "user_mode": "User Mode",
    "product_mean": "Product Mean",
    "product_mode": "Product Mode",
    "linear_svm": "LinearSVM",
    "multinomial_nb": "MultinomialNB",
    "bernoulli_nb": "BernoulliNB",
    "decision_tree": "Decision Tree",
    "none": "Regression (no debias)",
    "ubr1": "UBR-I",
    "ubr2": "UBR-II",
}
FEATURE_LABELS = {"tfidf": "tf-idf", "lda": "LDA", "pvdbow": "PV-DBoW"}


def round_clamp(raw: float, mode: str = "nearest") -> int:
    """Round half-up (or floor) to an integer, then clamp into 1..5."""
    if not math.isfinite(raw):
        raise ValueError(f"cannot round non-finite prediction {raw!r}")
    if mode == "nearest":
        v = math.floor(raw + 0.5)
    elif mode == "floor":
        v = math.floor(raw)
    else:
        raise ValueError(f"unknown rounding mode {mode!r}")
    return int(min(5, max(1, v)))


def round_clamp_array(raw, mode: str = "nearest") -> np.ndarray:
    raw = np.asarray(raw, dtype=np.float64)
    if not np.all(np.isfinite(raw)):
        raise ValueError("cannot round non-finite predictions")
    if mode == "nearest":
        v = np.floor(raw + 0.5)
    elif mode == "floor":
        v = np.floor(raw)
    else:
        raise ValueError(f"unknown rounding mode {mode!r}")
    return np.clip(v, 1, 5).astype(np.int64)


def rmse(truth: Sequence[float], pred: Sequence[float]) -> float:
    t = np.asarray(truth, dtype=np.float64)
    p = np.asarray(pred, dtype=np.float64)
    if t.shape != p.shape or t.ndim != 1:
        raise ValueError("truth and prediction must be equal-length vectors")
    if len(t) == 0:
        raise ValueError("rmse of an empty vector")
    d = t - p
    return math.sqrt(math.fsum(d * d) / len(d))


@dataclass
class EvalReport:
    method: str
    feature: str
    ngram: int
    rmse: float
    n_test: int
    truth: np.ndarray = field(repr=False)
    raw: np.ndarray = field(repr=False)
    final: np.ndarray = field(repr=False)
    fallback: np.ndarray | None = field(default=None, repr=False)
    review_ids: Sequence[str] = field(default=(), repr=False)

    @property
    def label(self) -> str:
        name = METHOD_LABELS.get(self.method, self.method)
        return f"{name} (bi)" if self.ngram == 2 else name

    def tsv_row(self) -> str:
        return f"{self.method}\t{self.feature}\t{self.ngram}\t{self.rmse:.4f}\t{self.n_test}"

    def dump_lines(self):
        fb = self.fallback if self.fallback is not None else np.zeros(len(self.truth), bool)
        ids = self.review_ids or [""] * len(self.truth)
        for rid, t, r, f, c in zip(ids, self.truth, self.raw, self.final, fb):
            yield json.dumps(
                {"review_id": rid, "true": int(t), "raw": float(r), "final": int(f), "fallback": bool(c)},
                separators=(",", ":"),
            )


TSV_HEADER = "method\tfeature\tngram\trmse\tn_test"


def results_tsv(reports: Sequence[EvalReport]) -> str:
    return "\n".join([TSV_HEADER, *(r.tsv_row() for r in reports)]) + "\n"


def wide_table(reports: Sequence[EvalReport]) -> str:
    """Methods as rows and feature backends as columns; '-' marks missing cells."""
    features = [f for f in FEATURE_LABELS if any(r.feature == f for r in reports)]
    rows: dict[str, dict[str, float]] = {}
    for r in reports:
        rows.setdefault(r.label, {})[r.feature] = r.rmse
    lines = ["Methods\t" + "\t".join(FEATURE_LABELS[f] for f in features)]
    for label, cells in rows.items():
        lines.append(label + "\t" + "\t".join(f"{cells[f]:.3f}" if f in cells else "-" for f in features))
    return "\n".join(lines) + "\n"


def evaluate_pipeline(method: str, feature_backend: str, train, test, config=None) -> EvalReport:
    """Fit on ``train`` only, predict ``test``, denormalize, round and score."""
    from .config import RunConfig
    from .pipeline import fit_pipeline

    config = config or RunConfig()
    if len(test) == 0:
        raise ValueError("empty test set")
    pipe = fit_pipeline(method, feature_backend, train, config)
    return pipe.evaluate(test)
