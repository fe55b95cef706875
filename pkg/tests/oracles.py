"""Independent reference computations used as test oracles.

None of these share code with the implementations they check.
"""

import math

import numpy as np


def ridge_closed_form(X, y, lam):
    """Normal equations for mean squared error + lam * |w|^2, intercept unpenalized."""
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    A = np.hstack([X, np.ones((n, 1))])
    P = np.diag([lam] * d + [0.0])
    sol = np.linalg.solve(A.T @ A / n + P, A.T @ np.asarray(y, float) / n)
    return sol[:-1], sol[-1]


def ridge_objective(X, y, w, b, lam):
    r = np.asarray(X, float) @ w + b - np.asarray(y, float)
    return float(np.mean(r**2) + lam * np.dot(w, w))


def nb_multinomial_posterior(counts_by_class, class_counts, x, alpha):
    """P(class | x) by direct products of probabilities (no logs)."""
    V = len(x)
    joint = []
    total_docs = sum(class_counts)
    for c, n_c in enumerate(class_counts):
        if n_c == 0:
            joint.append(0.0)
            continue
        tot = sum(counts_by_class[c])
        p = n_c / total_docs
        for w in range(V):
            theta = (counts_by_class[c][w] + alpha) / (tot + alpha * V)
            p *= theta ** x[w]
        joint.append(p)
    z = sum(joint)
    return [j / z for j in joint]


def nb_bernoulli_posterior(docs_by_class, class_counts, x, alpha):
    V = len(x)
    total_docs = sum(class_counts)
    joint = []
    for c, n_c in enumerate(class_counts):
        if n_c == 0:
            joint.append(0.0)
            continue
        p = n_c / total_docs
        for w in range(V):
            theta = (docs_by_class[c][w] + alpha) / (n_c + 2 * alpha)
            p *= theta if x[w] > 0 else (1 - theta)
        joint.append(p)
    z = sum(joint)
    return [j / z for j in joint]


def _thresholds(col):
    vals = sorted(set(col))
    return [(a + b) / 2 for a, b in zip(vals, vals[1:])]


def _leaf_correct(y):
    if len(y) == 0:
        return 0
    return max(np.bincount(y).tolist())


def best_depth2_accuracy(X, y):
    """Exhaustive search over every tree of depth <= 2 for training accuracy."""
    X = np.asarray(X, float)
    y = np.asarray(y)
    n, d = X.shape

    def best_depth1(idx):
        best = _leaf_correct(y[idx])
        for f in range(d):
            for t in _thresholds(X[idx, f]):
                m = X[idx, f] <= t
                best = max(best, _leaf_correct(y[idx][m]) + _leaf_correct(y[idx][~m]))
        return best

    all_idx = np.arange(n)
    best = best_depth1(all_idx)
    for f in range(d):
        for t in _thresholds(X[:, f]):
            m = X[:, f] <= t
            best = max(best, best_depth1(all_idx[m]) + best_depth1(all_idx[~m]))
    return best / n


def central_difference(f, x, h=1e-6):
    """Gradient of scalar f at x by central differences."""
    x = np.array(x, dtype=float)
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        fp = f(x)
        x[i] = old - h
        fm = f(x)
        x[i] = old
        g[i] = (fp - fm) / (2 * h)
    return g


def rmse_loop(truth, pred):
    s = 0.0
    for t, p in zip(truth, pred):
        s += (t - p) * (t - p)
    return math.sqrt(s / len(truth))


def topic_purity(topic_word_counts, word_groups):
    """Greedy-aligned purity: share of each topic's mass in its best group, averaged."""
    K = topic_word_counts.shape[0]
    mass = np.array([[topic_word_counts[k, g].sum() for g in word_groups] for k in range(K)], float)
    used, purities = set(), []
    for k in np.argsort(-mass.sum(axis=1)):
        order = [g for g in np.argsort(-mass[k]) if g not in used]
        if not order:
            break
        g = order[0]
        used.add(g)
        purities.append(mass[k, g] / mass[k].sum())
    return float(np.mean(purities)), used

