"""Least-squares linear regression on (sparse) document features.

Minimizes ``mean((X w + b - y)^2) + l2_lambda * |w|^2`` by mini-batch SGD
with a per-epoch full-gradient control variate (SVRG) and diagonal
preconditioning. The control variate lets a constant step size converge to
the exact ridge optimum, which the small-instance tests check against the
normal equations.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .text_features import SparseVector

MAGIC = b"DLIN"
FORMAT_VERSION = 1
_HEADER = struct.Struct("<4sIQd d")


@dataclass(frozen=True)
class LinearRegressor:
    weights: np.ndarray
    intercept: float
    l2_lambda: float = 0.0
    history: tuple[float, ...] = field(default=(), compare=False, repr=False)

    @property
    def n_features(self) -> int:
        return len(self.weights)

    def predict(self, X) -> np.ndarray:
        if X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[1]}")
        return np.asarray(X @ self.weights).ravel() + self.intercept

    def to_bytes(self) -> bytes:
        head = _HEADER.pack(MAGIC, FORMAT_VERSION, self.n_features, self.intercept, self.l2_lambda)
        return head + np.ascontiguousarray(self.weights, dtype="<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "LinearRegressor":
        magic, version, n, b, lam = _HEADER.unpack_from(blob)
        if magic != MAGIC or version != FORMAT_VERSION:
            raise ValueError("not a linear regressor blob")
        w = np.frombuffer(blob, "<f8", n, _HEADER.size).astype(np.float64)
        return cls(w, b, lam)


def objective(X, y, w, b, l2_lambda) -> float:
    r = np.asarray(X @ w).ravel() + b - y
    return float(np.mean(r * r) + l2_lambda * np.dot(w, w))


def _row_sq_norms(X) -> np.ndarray:
    if sp.issparse(X):
        return np.asarray(X.multiply(X).sum(axis=1)).ravel()
    return np.einsum("ij,ij->i", X, X)


def _top_eigenvalue(X, xbar, rng, iters: int = 30) -> float:
    """Power-iteration estimate of the largest eigenvalue of the centered covariance."""
    n, d = X.shape
    v = rng.standard_normal(d)
    lam = 0.0
    for _ in range(iters):
        nv = np.linalg.norm(v)
        if nv == 0:
            return 0.0
        v /= nv
        u = np.asarray(X @ v).ravel() - float(np.dot(xbar, v))
        v = (np.asarray(X.T @ u).ravel() - xbar * u.sum()) / n
        lam = float(np.linalg.norm(v))
    return lam


def linreg_fit(
    X,
    y,
    l2_lambda: float = 1e-4,
    epochs: int = 10,
    lr: float = 0.5,
    seed: int = 0,
    batch_size: int = 32,
    precondition_floor: float = 0.1,
) -> LinearRegressor:
    """Fit ``w, b``; the intercept is not regularized.

    Columns are rescaled by the inverse square root of their variance, floored
    at ``precondition_floor`` times the mean column variance (0 disables the
    rescaling). The step size is ``lr`` divided by an estimate of the
    mini-batch loss smoothness, so ``lr`` is insensitive to feature scale.
    Rows are reshuffled each epoch with a generator seeded by ``seed``.
    """
    if sp.issparse(X):
        X = sp.csr_matrix(X, dtype=np.float64)
    else:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise ValueError("X must be two-dimensional")
    y = np.asarray(y, dtype=np.float64).ravel()
    n, d = X.shape
    if n != len(y):
        raise ValueError(f"X has {n} rows but y has {len(y)} entries")
    if n == 0:
        raise ValueError("cannot fit on zero rows")
    if not np.all(np.isfinite(y)):
        raise ValueError("non-finite regression target")
    if l2_lambda < 0 or lr <= 0 or epochs < 1 or batch_size < 1 or precondition_floor < 0:
        raise ValueError("invalid solver configuration")

    # Jacobi preconditioning: rescale column j by 1/sqrt(var_j), with the
    # variance floored at a fraction of the mean so rare sparse columns are
    # not blown up. Solve for v = w / s, then map back.
    xbar = np.asarray(X.mean(axis=0)).ravel()
    sq_mean = np.asarray(X.multiply(X).mean(axis=0)).ravel() if sp.issparse(X) else np.mean(X * X, axis=0)
    var = np.maximum(sq_mean - xbar * xbar, 0.0)
    floor = precondition_floor * float(var.mean()) if var.any() else 1.0
    s = 1.0 / np.sqrt(np.maximum(var, floor)) if precondition_floor > 0 else np.ones(d)
    Xs = X @ sp.diags(s) if sp.issparse(X) else X * s
    Xs = sp.csr_matrix(Xs) if sp.issparse(X) else Xs
    xbar_s = xbar * s
    pen = l2_lambda * s * s  # penalty on v, per coordinate

    # Work with implicitly centered features, x - mean(x), so the intercept
    # decouples from v; sparse X stays sparse.
    sq = _row_sq_norms(Xs) - 2.0 * np.asarray(Xs @ xbar_s).ravel() + float(np.dot(xbar_s, xbar_s))
    rng = np.random.default_rng(seed)
    bs = min(batch_size, n)
    # smoothness of a size-bs mini-batch loss: curvature of the full loss
    # (at least 1, the intercept's) plus the per-row excess shrunk by the batch size
    smooth = 2.0 * (max(_top_eigenvalue(Xs, xbar_s, rng), 1.0) + float(sq.max()) / bs + float(pen.max(initial=0.0)))
    step = lr / smooth
    v = np.zeros(d)
    c = float(np.mean(y))
    history = [objective(X, y, v * s, c, l2_lambda)]

    for _ in range(epochs):
        v_snap, c_snap = v.copy(), c
        r_snap = np.asarray(Xs @ v_snap).ravel() - float(np.dot(xbar_s, v_snap)) + c_snap - y
        mu_v = (2.0 / n) * (np.asarray(Xs.T @ r_snap).ravel() - xbar_s * r_snap.sum())
        mu_c = 2.0 * float(np.mean(r_snap))
        order = rng.permutation(n)
        for start in range(0, n, bs):
            idx = order[start : start + bs]
            Xb = Xs[idx]
            dv = v - v_snap
            diff = np.asarray(Xb @ dv).ravel() - float(np.dot(xbar_s, dv)) + (c - c_snap)
            scale = 2.0 / len(idx)
            gv = scale * (np.asarray(Xb.T @ diff).ravel() - xbar_s * diff.sum())
            v -= step * (gv + mu_v + 2.0 * pen * v)
            c -= step * (scale * float(diff.sum()) + mu_c)
        history.append(objective(X, y, v * s, c - float(np.dot(xbar_s, v)), l2_lambda))
        if not np.isfinite(history[-1]):
            raise FloatingPointError("regression diverged; lower lr")
    w = v * s
    b = c - float(np.dot(xbar_s, v))
    return LinearRegressor(w, b, float(l2_lambda), tuple(history))


def linreg_predict(x, model: LinearRegressor) -> float:
    """``w . x + b`` for one sparse or dense feature vector."""
    if isinstance(x, SparseVector):
        if len(x.indices) and x.indices.max() >= model.n_features:
            raise ValueError("feature index beyond model dimension")
        return float(np.dot(model.weights[x.indices], x.values) + model.intercept)
    x = np.asarray(x, dtype=np.float64).ravel()
    if len(x) != model.n_features:
        raise ValueError(f"expected {model.n_features} features, got {len(x)}")
    return float(np.dot(model.weights, x) + model.intercept)
