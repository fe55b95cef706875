"""Full method x feature grid on the Amazon Fine Food reviews CSV.

Ingests ``Reviews.csv``, makes a seeded 4:1 split and writes the long-form
results plus a methods x features table. LDA and PV-DBOW at default settings
are the slow part; ``--fast`` shrinks them for a smoke run.

    python scripts/finefood_grid.py data/Reviews.csv --out results/finefood
"""

import argparse
import logging
import time
from pathlib import Path

from debias.baselines import STAT_KINDS
from debias.config import load_config
from debias.corpus import SplitSpec, read_dataset, train_test_split
from debias.evalkit import results_tsv, wide_table
from debias.pipeline import FEATURES, METHODS, fit_pipeline

FAST = {"n_topics": "20", "lda_iters": "50", "pv_dim": "50", "pv_epochs": "5"}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv")
    ap.add_argument("--out", default="results/finefood")
    ap.add_argument("--split-seed", type=int, default=0)
    ap.add_argument("--methods", default=",".join(METHODS))
    ap.add_argument("--features", default=",".join(FEATURES))
    ap.add_argument("--config", help="run config file")
    ap.add_argument("--fast", action="store_true")
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(name)s: %(message)s")
    log = logging.getLogger("finefood")

    cfg = load_config(args.config, FAST if args.fast else None)
    data = read_dataset(args.csv, "csv")
    train, test = train_test_split(data, SplitSpec(0.8, args.split_seed))
    log.info("%d reviews (%d rejected): %d train, %d test", len(data), len(data.errors), len(train), len(test))

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    for method in args.methods.split(","):
        feats = ["tfidf"] if method in STAT_KINDS else args.features.split(",")
        for feat in feats:
            for n in (1, 2) if feat == "tfidf" and method not in STAT_KINDS else (1,):
                t0 = time.perf_counter()
                try:
                    rep = fit_pipeline(method, feat, train, cfg.replace(ngrams=n)).evaluate(test)
                except ValueError as exc:
                    log.warning("skip %s/%s: %s", method, feat, exc)
                    continue
                reports.append(rep)
                log.info("%s/%s/%d rmse %.4f (%.0fs)", method, feat, n, rep.rmse, time.perf_counter() - t0)
                (out / "results.tsv").write_text(results_tsv(reports), encoding="utf-8")
    (out / "table.tsv").write_text(wide_table(reports), encoding="utf-8")
    print(wide_table(reports), end="")


if __name__ == "__main__":
    main()
