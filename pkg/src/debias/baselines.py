"""Rating predictors that ignore user bias.

Five statistical predictors (global mode, user mean/mode, product mean/mode)
that never look at text, and four text classifiers whose predicted class is
used directly as the score. Class ties always resolve to the smaller score.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from numba import njit

from . import blobs
from .corpus import Dataset, ReviewRecord

CLASSES = np.arange(1, 6)
STAT_KINDS = ("majority", "user_mean", "user_mode", "product_mean", "product_mode")
CLASSIFIER_KINDS = ("linear_svm", "multinomial_nb", "bernoulli_nb", "decision_tree")


def _mode(scores) -> int:
    counts = Counter(scores)
    top = max(counts.values())
    return min(s for s, c in counts.items() if c == top)


def _labels(y) -> np.ndarray:
    y = np.asarray(y, dtype=np.int64).ravel()
    if len(y) and (y.min() < 1 or y.max() > 5):
        raise ValueError("labels must lie in 1..5")
    return y


# --------------------------------------------------------------------------
# statistical baselines


@dataclass(frozen=True)
class StatBaselineModel:
    kind: str
    lookup: dict[str, float]
    global_fallback: float

    def predict_one(self, rec: ReviewRecord) -> tuple[float, bool]:
        if self.kind == "majority":
            return self.global_fallback, False
        key = rec.user_id if self.kind.startswith("user") else rec.product_id
        v = self.lookup.get(key)
        if v is None:
            return self.global_fallback, True
        return v, False

    def predict(self, records) -> np.ndarray:
        return np.array([self.predict_one(r)[0] for r in records], dtype=np.float64)

    def to_bytes(self) -> bytes:
        return blobs.pack({"kind": self.kind, "lookup": self.lookup, "fallback": self.global_fallback})

    @classmethod
    def from_bytes(cls, blob: bytes) -> "StatBaselineModel":
        meta, _ = blobs.unpack(blob)
        return cls(meta["kind"], meta["lookup"], meta["fallback"])


def fit_majority(train: Dataset) -> StatBaselineModel:
    if len(train) == 0:
        raise ValueError("empty training set")
    return StatBaselineModel("majority", {}, float(_mode(r.score for r in train)))


def _fit_grouped(train: Dataset, key: str, kind: str, stat: str) -> StatBaselineModel:
    if len(train) == 0:
        raise ValueError("empty training set")
    if stat not in ("mean", "mode"):
        raise ValueError(f"unknown statistic {stat!r}")
    groups = defaultdict(list)
    for r in train:
        groups[getattr(r, key)].append(r.score)
    scores = [r.score for r in train]
    if stat == "mean":
        lookup = {k: math.fsum(v) / len(v) for k, v in groups.items()}
        fallback = math.fsum(scores) / len(scores)
    else:
        lookup = {k: float(_mode(v)) for k, v in groups.items()}
        fallback = float(_mode(scores))
    return StatBaselineModel(f"{kind}_{stat}", dict(sorted(lookup.items())), fallback)


def fit_user_stat(train: Dataset, stat: str = "mean") -> StatBaselineModel:
    return _fit_grouped(train, "user_id", "user", stat)


def fit_product_stat(train: Dataset, stat: str = "mean") -> StatBaselineModel:
    return _fit_grouped(train, "product_id", "product", stat)


def fit_stat_baseline(kind: str, train: Dataset) -> StatBaselineModel:
    if kind == "majority":
        return fit_majority(train)
    owner, stat = kind.split("_")
    return (fit_user_stat if owner == "user" else fit_product_stat)(train, stat)


# --------------------------------------------------------------------------
# one-vs-rest linear SVM (Pegasos)


@njit(cache=True)
def _pegasos(indptr, indices, data, sign, lam, orders, v):
    """Pegasos on rows augmented with a constant 1 (last coordinate of ``v``).

    ``w = scale * v``; the scale absorbs the shrinkage step so that each
    update only touches the row's nonzeros.
    """
    d = v.shape[0] - 1
    scale = 1.0
    t = 0
    for e in range(orders.shape[0]):
        for i in orders[e]:
            t += 1
            eta = 1.0 / (lam * t)
            margin = v[d]
            for p in range(indptr[i], indptr[i + 1]):
                margin += v[indices[p]] * data[p]
            margin *= scale * sign[i]
            shrink = 1.0 - eta * lam
            if shrink <= 0.0:
                for j in range(v.shape[0]):
                    v[j] = 0.0
                scale = 1.0
            else:
                scale *= shrink
            if margin < 1.0:
                step = eta * sign[i] / scale
                for p in range(indptr[i], indptr[i + 1]):
                    v[indices[p]] += step * data[p]
                v[d] += step
            if scale < 1e-9:
                for j in range(v.shape[0]):
                    v[j] *= scale
                scale = 1.0
    for j in range(v.shape[0]):
        v[j] *= scale


def _as_csr(X) -> sp.csr_matrix:
    X = sp.csr_matrix(X, dtype=np.float64)
    X.sort_indices()
    return X


@dataclass(frozen=True)
class LinearSvmOvr:
    weights: np.ndarray  # (5, n_features)
    biases: np.ndarray  # (5,)
    kind: str = field(default="linear_svm", init=False)

    def decision_function(self, X) -> np.ndarray:
        if X.shape[1] != self.weights.shape[1]:
            raise ValueError("feature dimension mismatch")
        return np.asarray(X @ self.weights.T) + self.biases

    def predict(self, X) -> np.ndarray:
        return CLASSES[np.argmax(self.decision_function(X), axis=1)]

    def to_bytes(self) -> bytes:
        return blobs.pack({"kind": self.kind}, {"weights": self.weights, "biases": self.biases})


def fit_linear_svm_ovr(X, y, l2_lambda: float = 1e-4, epochs: int = 5, seed: int = 0) -> LinearSvmOvr:
    """Five hinge-loss classifiers (class c vs rest) trained with Pegasos."""
    X = _as_csr(X)
    y = _labels(y)
    if X.shape[0] != len(y):
        raise ValueError("row count mismatch")
    if l2_lambda <= 0 or epochs < 1:
        raise ValueError("Pegasos needs l2_lambda > 0 and epochs >= 1")
    n, d = X.shape
    rng = np.random.default_rng(seed)
    orders = np.stack([rng.permutation(n) for _ in range(epochs)]).astype(np.int64)
    W = np.zeros((5, d))
    b = np.zeros(5)
    for ci, c in enumerate(CLASSES):
        v = np.zeros(d + 1)
        sign = np.where(y == c, 1.0, -1.0)
        _pegasos(X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data, sign, float(l2_lambda), orders, v)
        W[ci], b[ci] = v[:d], v[d]
    return LinearSvmOvr(W, b)


# --------------------------------------------------------------------------
# naive Bayes


def _logsumexp_rows(a: np.ndarray) -> np.ndarray:
    m = np.max(a, axis=1, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    return (m + np.log(np.sum(np.exp(a - m), axis=1, keepdims=True))).ravel()


@dataclass(frozen=True)
class NaiveBayes:
    kind: str  # multinomial_nb | bernoulli_nb
    class_log_prior: np.ndarray  # (5,), -inf for classes absent from training
    feature_log_prob: np.ndarray  # (5, n_features): log P(word | class)
    feature_log_neg: np.ndarray | None = None  # bernoulli: log(1 - P(word | class))

    def joint_log_likelihood(self, X) -> np.ndarray:
        if X.shape[1] != self.feature_log_prob.shape[1]:
            raise ValueError("feature dimension mismatch")
        if self.kind == "multinomial_nb":
            _check_nonnegative(X)
            return np.asarray(X @ self.feature_log_prob.T) + self.class_log_prior
        B = _binarize(X)
        delta = self.feature_log_prob - self.feature_log_neg
        return np.asarray(B @ delta.T) + self.feature_log_neg.sum(axis=1) + self.class_log_prior

    def predict_log_proba(self, X) -> np.ndarray:
        jll = self.joint_log_likelihood(X)
        return jll - _logsumexp_rows(jll)[:, None]

    def predict(self, X) -> np.ndarray:
        return CLASSES[np.argmax(self.joint_log_likelihood(X), axis=1)]

    def to_bytes(self) -> bytes:
        arrays = {"prior": self.class_log_prior, "logp": self.feature_log_prob}
        if self.feature_log_neg is not None:
            arrays["logn"] = self.feature_log_neg
        return blobs.pack({"kind": self.kind}, arrays)


def _check_nonnegative(X):
    data = X.data if sp.issparse(X) else np.asarray(X)
    if data.size and data.min() < 0:
        raise ValueError("multinomial naive Bayes needs nonnegative features")


def _binarize(X):
    if sp.issparse(X):
        B = sp.csr_matrix(X, dtype=np.float64, copy=True)
        B.data = (B.data > 0).astype(np.float64)
        B.eliminate_zeros()
        return B
    return (np.asarray(X) > 0).astype(np.float64)


def _class_sums(X, y) -> tuple[np.ndarray, np.ndarray]:
    onehot = (y[:, None] == CLASSES[None, :]).astype(np.float64)
    return np.asarray(X.T @ onehot).T, onehot.sum(axis=0)


def _log_prior(class_counts: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(class_counts) - math.log(class_counts.sum())


def fit_multinomial_nb(X_counts, y, alpha_smooth: float = 1.0) -> NaiveBayes:
    """P(w | c) = (N_cw + alpha) / (N_c + alpha * |V|) over nonnegative counts."""
    y = _labels(y)
    _check_nonnegative(X_counts)
    if X_counts.shape[0] != len(y) or len(y) == 0:
        raise ValueError("row count mismatch or empty training set")
    fc, cc = _class_sums(X_counts, y)
    smoothed = fc + alpha_smooth
    logp = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    return NaiveBayes("multinomial_nb", _log_prior(cc), logp)


def fit_bernoulli_nb(X, y, alpha_smooth: float = 1.0) -> NaiveBayes:
    """Presence/absence model on ``X > 0``: P(w | c) = (D_cw + alpha) / (D_c + 2 alpha)."""
    y = _labels(y)
    if X.shape[0] != len(y) or len(y) == 0:
        raise ValueError("row count mismatch or empty training set")
    fc, cc = _class_sums(_binarize(X), y)
    denom = (cc + 2.0 * alpha_smooth)[:, None]
    p = (fc + alpha_smooth) / denom
    return NaiveBayes("bernoulli_nb", _log_prior(cc), np.log(p), np.log1p(-p))


# --------------------------------------------------------------------------
# CART decision tree


@dataclass(frozen=True)
class DecisionTree:
    feature: np.ndarray  # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    leaf_class: np.ndarray  # 0 at internal nodes
    n_features: int
    kind: str = field(default="decision_tree", init=False)

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for i in range(self.n_nodes):
            if self.feature[i] >= 0:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict(self, X) -> np.ndarray:
        if X.shape[1] != self.n_features:
            raise ValueError("feature dimension mismatch")
        X = _as_csr(X)
        out = np.empty(X.shape[0], dtype=np.int64)
        _tree_predict(
            X.indptr.astype(np.int64), X.indices.astype(np.int64), X.data,
            self.feature, self.threshold, self.left, self.right, self.leaf_class, out,
        )
        return out

    def to_bytes(self) -> bytes:
        return blobs.pack(
            {"kind": self.kind, "n_features": self.n_features},
            {"feature": self.feature, "threshold": self.threshold, "left": self.left, "right": self.right, "leaf_class": self.leaf_class},
        )


@njit(cache=True)
def _tree_predict(indptr, indices, data, feature, threshold, left, right, leaf_class, out):
    for i in range(indptr.shape[0] - 1):
        lo, hi = indptr[i], indptr[i + 1]
        node = 0
        while feature[node] >= 0:
            f = feature[node]
            p = lo + np.searchsorted(indices[lo:hi], f)
            x = data[p] if p < hi and indices[p] == f else 0.0
            node = left[node] if x <= threshold[node] else right[node]
        out[i] = leaf_class[node]


def _majority_class(counts: np.ndarray) -> int:
    return int(CLASSES[np.argmax(counts)])


def _best_split_for_column(rows_nz, vals, y_node, node_counts, min_leaf):
    """Best (score, threshold) for one column; score = sum l^2/n_l + sum r^2/n_r."""
    n = len(y_node)
    n_zero = n - len(vals)
    onehot = np.zeros((len(vals) + (n_zero > 0), 5))
    onehot[np.arange(len(vals)), y_node[rows_nz] - 1] = 1.0
    keys = vals
    if n_zero:
        onehot[-1] = node_counts - onehot[: len(vals)].sum(axis=0)
        keys = np.append(vals, 0.0)
    order = np.argsort(keys, kind="stable")
    keys, onehot = keys[order], onehot[order]
    left = np.cumsum(onehot, axis=0)[:-1]
    n_left = left.sum(axis=1)
    ok = (keys[1:] > keys[:-1]) & (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not ok.any():
        return -np.inf, 0.0
    right = node_counts - left
    with np.errstate(divide="ignore", invalid="ignore"):
        score = (left * left).sum(axis=1) / n_left + (right * right).sum(axis=1) / (n - n_left)
    score = np.where(ok, score, -np.inf)
    j = int(np.argmax(score))
    return float(score[j]), float((keys[j] + keys[j + 1]) / 2.0)


def fit_decision_tree(
    X, y, max_depth: int | None = 20, min_leaf: int = 1, max_candidates: int | None = 1000
) -> DecisionTree:
    """Greedy CART on weighted Gini impurity.

    At each node only the ``max_candidates`` features with the most nonzeros
    among the node's rows are searched (``None`` searches all of them).
    Ties go to the lowest feature id, then the lowest threshold.
    """
    y = _labels(y)
    X = _as_csr(X)
    X.eliminate_zeros()
    if X.shape[0] != len(y) or len(y) == 0:
        raise ValueError("row count mismatch or empty training set")
    if min_leaf < 1:
        raise ValueError("min_leaf must be positive")
    feature, threshold, left, right, leaf = [], [], [], [], []

    def new_node():
        for arr in (feature, left, right, leaf):
            arr.append(-1)
        threshold.append(0.0)
        return len(feature) - 1

    stack = [(new_node(), np.arange(len(y)), 0)]
    while stack:
        node, rows, depth = stack.pop()
        y_node = y[rows]
        counts = np.bincount(y_node - 1, minlength=5).astype(np.float64)
        n = len(rows)
        leaf[node] = _majority_class(counts)
        if counts.max() == n or n < 2 * min_leaf or (max_depth is not None and depth >= max_depth):
            continue
        sub = X[rows].tocsc()
        sub.sort_indices()
        nnz = np.diff(sub.indptr)
        cand = np.flatnonzero(nnz)
        if max_candidates is not None and len(cand) > max_candidates:
            cand = cand[np.lexsort((cand, -nnz[cand]))[:max_candidates]]
            cand.sort()
        parent = (counts * counts).sum() / n
        best = (parent, -1, 0.0)
        for f in cand:
            lo, hi = sub.indptr[f], sub.indptr[f + 1]
            score, thr = _best_split_for_column(sub.indices[lo:hi], sub.data[lo:hi], y_node, counts, min_leaf)
            if score > best[0] + 1e-12:
                best = (score, int(f), thr)
        if best[1] < 0:
            continue
        _, f, thr = best
        col = np.asarray(sub[:, f].todense()).ravel()
        go_left = col <= thr
        feature[node], threshold[node], leaf[node] = f, thr, 0
        lnode, rnode = new_node(), new_node()
        left[node], right[node] = lnode, rnode
        # right pushed first so the left subtree is numbered first
        stack.append((rnode, rows[~go_left], depth + 1))
        stack.append((lnode, rows[go_left], depth + 1))

    return DecisionTree(
        np.array(feature, dtype=np.int64),
        np.array(threshold, dtype=np.float64),
        np.array(left, dtype=np.int64),
        np.array(right, dtype=np.int64),
        np.array(leaf, dtype=np.int64),
        X.shape[1],
    )


# --------------------------------------------------------------------------


def classifier_from_bytes(blob: bytes):
    meta, a = blobs.unpack(blob)
    kind = meta["kind"]
    if kind == "linear_svm":
        return LinearSvmOvr(a["weights"], a["biases"])
    if kind in ("multinomial_nb", "bernoulli_nb"):
        return NaiveBayes(kind, a["prior"], a["logp"], a.get("logn"))
    if kind == "decision_tree":
        return DecisionTree(a["feature"], a["threshold"], a["left"], a["right"], a["leaf_class"], meta["n_features"])
    raise ValueError(f"unknown classifier kind {kind!r}")
