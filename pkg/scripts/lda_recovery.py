"""Topic recovery on a corpus drawn from K disjoint word groups.

    python scripts/lda_recovery.py --topics 4 --docs 400
"""

import argparse

import numpy as np

from debias.lda import lda_fit, lda_transform


def purity(nkw, groups):
    mass = np.array([[nkw[k, g].sum() for g in groups] for k in range(nkw.shape[0])], float)
    return float(np.mean(mass.max(axis=1) / mass.sum(axis=1)))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--topics", type=int, default=2)
    ap.add_argument("--words-per-topic", type=int, default=10)
    ap.add_argument("--docs", type=int, default=200)
    ap.add_argument("--length", type=int, default=30)
    ap.add_argument("--mix", type=float, default=0.0, help="share of tokens drawn from a random other group")
    ap.add_argument("--iters", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    K, W = args.topics, args.words_per_topic
    groups = [list(range(k * W, (k + 1) * W)) for k in range(K)]
    docs = []
    for i in range(args.docs):
        home = i % K
        src = np.where(rng.random(args.length) < args.mix, rng.integers(0, K, args.length), home)
        docs.append((src * W + rng.integers(0, W, args.length)).tolist())
    model = lda_fit(docs, K * W, n_topics=K, iters=args.iters, seed=args.seed)
    theta = lda_transform(docs, model, seed=args.seed)
    print(f"purity {purity(model.topic_word_counts, groups):.3f}")
    print(f"mean max proportion {theta.max(axis=1).mean():.3f}")


if __name__ == "__main__":
    main()
