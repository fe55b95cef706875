"""Per-user and per-product rating statistics and the two bias-removal transforms.

``ubr1`` rescales each user's scores to zero mean / unit (population) standard
deviation. ``ubr2`` subtracts the user's net bias, the average amount by which
the user rates above the mean score of the products they reviewed.

Sums go through :func:`math.fsum`, which is exactly rounded, so every statistic
is independent of record order.
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

from .corpus import Dataset

FORMAT_VERSION = 1


@dataclass(frozen=True)
class UserStats:
    mean: float
    std: float
    count: int


@dataclass(frozen=True)
class ProductStats:
    mean: float
    count: int


@dataclass(frozen=True)
class UserBias:
    net_bias: float
    count: int


def _group(train: Dataset, key: str) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = defaultdict(list)
    for rec in train:
        groups[getattr(rec, key)].append(rec.score)
    return groups


def _mean_std(xs) -> tuple[float, float]:
    n = len(xs)
    mean = math.fsum(xs) / n
    var = math.fsum((x - mean) ** 2 for x in xs) / n
    return mean, math.sqrt(var)


def fit_user_stats(train: Dataset) -> dict[str, UserStats]:
    out = {}
    for uid, scores in _group(train, "user_id").items():
        if len(scores) == 1:
            out[uid] = UserStats(float(scores[0]), 0.0, 1)
        else:
            mean, std = _mean_std(scores)
            out[uid] = UserStats(mean, std, len(scores))
    return out


def fit_product_stats(train: Dataset) -> dict[str, ProductStats]:
    return {
        pid: ProductStats(math.fsum(scores) / len(scores), len(scores))
        for pid, scores in _group(train, "product_id").items()
    }


def fit_user_net_bias(train: Dataset, pstats: dict[str, ProductStats]) -> dict[str, UserBias]:
    """Average of (score - product mean) over each user's training reviews.

    The user's own review is part of the product mean it is compared against.
    """
    gaps: dict[str, list[float]] = defaultdict(list)
    for rec in train:
        gaps[rec.user_id].append(rec.score - pstats[rec.product_id].mean)
    return {uid: UserBias(math.fsum(g) / len(g), len(g)) for uid, g in gaps.items()}


def ubr1_normalize(score: float, stats: UserStats) -> float:
    if stats.std == 0:
        return 0.0
    return (score - stats.mean) / stats.std


def ubr1_denormalize(pnr: float, stats: UserStats) -> float:
    return pnr * stats.std + stats.mean


def ubr2_normalize(score: float, bias: UserBias) -> float:
    return score - bias.net_bias


def ubr2_denormalize(pnr: float, bias: UserBias) -> float:
    return pnr + bias.net_bias


@dataclass(frozen=True)
class BiasTable:
    user_stats: dict[str, UserStats]
    product_stats: dict[str, ProductStats]
    user_bias: dict[str, UserBias]
    global_mean: float
    global_std: float
    n_train: int = 0
    global_stats: UserStats = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "global_stats", UserStats(self.global_mean, self.global_std, max(self.n_train, 1)))

    @classmethod
    def fit(cls, train: Dataset) -> "BiasTable":
        if len(train) == 0:
            raise ValueError("cannot fit bias statistics on an empty training set")
        pstats = fit_product_stats(train)
        gmean, gstd = _mean_std([r.score for r in train])
        return cls(
            user_stats=fit_user_stats(train),
            product_stats=pstats,
            user_bias=fit_user_net_bias(train, pstats),
            global_mean=gmean,
            global_std=gstd,
            n_train=len(train),
        )

    def stats_for(self, user_id: str) -> tuple[UserStats, bool]:
        """User statistics, or the global ones for an unseen user (second item True)."""
        st = self.user_stats.get(user_id)
        if st is None:
            return self.global_stats, True
        return st, False

    def bias_for(self, user_id: str) -> tuple[UserBias, bool]:
        b = self.user_bias.get(user_id)
        if b is None:
            return UserBias(0.0, 0), True
        return b, False

    def normalize(self, method: str, user_id: str, score: float) -> float:
        if method == "ubr1":
            return ubr1_normalize(score, self.stats_for(user_id)[0])
        if method == "ubr2":
            return ubr2_normalize(score, self.bias_for(user_id)[0])
        if method == "none":
            return float(score)
        raise ValueError(f"unknown method {method!r}")

    def denormalize(self, method: str, user_id: str, pnr: float) -> tuple[float, bool]:
        """Map a predicted normalized score back to the user's scale (unrounded)."""
        if method == "ubr1":
            st, cold = self.stats_for(user_id)
            return ubr1_denormalize(pnr, st), cold
        if method == "ubr2":
            b, cold = self.bias_for(user_id)
            return ubr2_denormalize(pnr, b), cold
        if method == "none":
            return float(pnr), False
        raise ValueError(f"unknown method {method!r}")

    def to_json(self) -> str:
        users = {}
        for uid in sorted(self.user_stats):
            st = self.user_stats[uid]
            users[uid] = {
                "mean": st.mean,
                "std": st.std,
                "count": st.count,
                "net_bias": self.user_bias[uid].net_bias,
            }
        products = {pid: {"mean": p.mean, "count": p.count} for pid, p in sorted(self.product_stats.items())}
        doc = {
            "format_version": FORMAT_VERSION,
            "users": users,
            "products": products,
            "global": {"mean": self.global_mean, "std": self.global_std, "count": self.n_train},
        }
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, text: str) -> "BiasTable":
        doc = json.loads(text)
        if doc.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported bias table version {doc.get('format_version')!r}")
        users = doc["users"]
        return cls(
            user_stats={u: UserStats(v["mean"], v["std"], v["count"]) for u, v in users.items()},
            product_stats={p: ProductStats(v["mean"], v["count"]) for p, v in doc["products"].items()},
            user_bias={u: UserBias(v["net_bias"], v["count"]) for u, v in users.items()},
            global_mean=doc["global"]["mean"],
            global_std=doc["global"]["std"],
            n_train=doc["global"]["count"],
        )
