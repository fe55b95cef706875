"""Synthetic review corpora with known per-user bias.

Each review has a latent true score drawn uniformly from 1..5 and text drawn
from a word set reserved for that score, so the text determines the true
score exactly. The observed score is the true score passed through the
author's scale and offset plus Gaussian noise, then rounded and clamped.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .corpus import Dataset, ReviewRecord
from .evalkit import round_clamp


@dataclass(frozen=True)
class SynthSpec:
    n_users: int = 100
    n_products: int = 200
    n_reviews: int = 5000
    user_bias_range: tuple[float, float] = (-1.5, 1.5)
    user_scale_range: tuple[float, float] = (1.0, 1.0)
    words_per_score: int = 20
    words_per_review: int = 8
    noise_std: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if min(self.n_users, self.n_products) < 1:
            raise ValueError("need at least one user and one product")
        if self.n_reviews < self.n_users:
            raise ValueError("n_reviews must be >= n_users so every user has a review")
        lo, hi = self.user_bias_range
        slo, shi = self.user_scale_range
        if lo > hi or slo > shi or slo <= 0:
            raise ValueError("bad bias or scale range")
        if self.noise_std < 0 or self.words_per_score < 1 or self.words_per_review < 1:
            raise ValueError("bad noise or vocabulary settings")

    @property
    def vocab_per_score(self) -> dict[int, list[str]]:
        return {s: [f"s{s}w{j}" for j in range(self.words_per_score)] for s in range(1, 6)}


@dataclass
class GroundTruth:
    user_bias: dict[str, float]
    user_scale: dict[str, float]
    true_score: dict[str, int]

    def to_json(self) -> str:
        return json.dumps(
            {"user_bias": self.user_bias, "user_scale": self.user_scale, "true_score": self.true_score},
            sort_keys=True,
        )


def generate(spec: SynthSpec) -> tuple[Dataset, GroundTruth]:
    rng = np.random.default_rng(spec.seed)
    users = [f"u{i:05d}" for i in range(spec.n_users)]
    bias = rng.uniform(*spec.user_bias_range, size=spec.n_users)
    scale = rng.uniform(*spec.user_scale_range, size=spec.n_users)
    # the first n_users reviews go one to each user
    author = np.concatenate([rng.permutation(spec.n_users), rng.integers(0, spec.n_users, spec.n_reviews - spec.n_users)])
    product = rng.integers(0, spec.n_products, spec.n_reviews)
    latent = rng.integers(1, 6, spec.n_reviews)
    noise = rng.normal(0.0, spec.noise_std, spec.n_reviews) if spec.noise_std > 0 else np.zeros(spec.n_reviews)
    words = rng.integers(0, spec.words_per_score, (spec.n_reviews, spec.words_per_review))

    records, truth = [], {}
    for i in range(spec.n_reviews):
        u, s = int(author[i]), int(latent[i])
        observed = round_clamp(scale[u] * (s - 3) + 3 + bias[u] + noise[i])
        text = " ".join(f"s{s}w{j}" for j in words[i])
        rid = f"r{i:07d}"
        records.append(ReviewRecord(rid, users[u], f"p{int(product[i]):05d}", observed, "", text))
        truth[rid] = s
    gt = GroundTruth(
        {u: float(b) for u, b in zip(users, bias)},
        {u: float(c) for u, c in zip(users, scale)},
        truth,
    )
    return Dataset(tuple(records), f"synth:{spec.seed}"), gt


def spec_dict(spec: SynthSpec) -> dict:
    return asdict(spec)
