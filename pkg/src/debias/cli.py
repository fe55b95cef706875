"""``debias`` command line: ingest, split, train, predict, evaluate, synth.

Exit codes: 0 success, 1 usage/config error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .baselines import STAT_KINDS
from .bundle import BundleError, load_bundle, save_bundle
from .config import ConfigError, load_config
from .corpus import DataError, SplitSpec, read_dataset, train_test_split, write_canonical
from .evalkit import results_tsv, wide_table
from .pipeline import FEATURES, METHODS, check_combo, fit_pipeline
from .synth import SynthSpec, generate, spec_dict

logger = logging.getLogger("debias")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _overrides(args) -> dict:
    out = {}
    for item in args.set or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        out[key.strip()] = value
    for key in ("seed", "rounding", "ngrams"):
        if getattr(args, key, None) is not None:
            out[key] = getattr(args, key)
    return out


def _config(args):
    return load_config(args.config, _overrides(args))


def _nonempty(path):
    data = read_dataset(path)
    if len(data) == 0:
        raise DataError(f"{path}: no records")
    return data


def cmd_ingest(args) -> int:
    fmt = args.format or ("csv" if str(args.input).lower().endswith(".csv") else "jsonl")
    data = read_dataset(args.input, fmt)
    if len(data) == 0:
        raise DataError(f"{args.input}: no records")
    write_canonical(data, args.output)
    logger.info("wrote %d records to %s (%d rows rejected)", len(data), args.output, len(data.errors))
    return EXIT_OK


def cmd_split(args) -> int:
    if not 0 < args.ratio < 1:
        raise ConfigError("--ratio must lie strictly between 0 and 1")
    data = _nonempty(args.corpus)
    train, test = train_test_split(data, SplitSpec(args.ratio, args.seed))
    stem = Path(args.corpus).with_suffix("")
    train_out = args.train_out or f"{stem}.train.jsonl"
    test_out = args.test_out or f"{stem}.test.jsonl"
    write_canonical(train, train_out)
    write_canonical(test, test_out)
    logger.info("split %d records: %d train -> %s, %d test -> %s", len(data), len(train), train_out, len(test), test_out)
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    check_combo(args.method, args.features, cfg.ngrams)
    pipe = fit_pipeline(args.method, args.features, _nonempty(args.train), cfg)
    save_bundle(pipe, args.output)
    logger.info("saved %s/%s bundle to %s", args.method, args.features, args.output)
    return EXIT_OK


def cmd_predict(args) -> int:
    pipe = load_bundle(args.bundle)
    data = _nonempty(args.corpus)
    pred = pipe.predict(data.records)
    out = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        for rec, raw, final, cold in zip(data, pred.raw, pred.final, pred.fallback):
            row = {
                "review_id": rec.review_id,
                "user_id": rec.user_id,
                "product_id": rec.product_id,
                "raw": float(raw),
                "final": int(final),
                "fallback": bool(cold),
            }
            out.write(json.dumps(row, separators=(",", ":")) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def _grid_reports(args, test):
    cfg = _config(args)
    if not args.train:
        raise ConfigError("--grid needs --train")
    train = _nonempty(args.train)
    methods = args.methods.split(",") if args.methods else list(METHODS)
    features = args.features.split(",") if args.features else list(FEATURES)
    ngram_list = [int(n) for n in args.ngram_list.split(",")]
    reports = []
    for method in methods:
        if method in STAT_KINDS:
            # feature-independent: fit once, report under every feature column
            rep = fit_pipeline(method, "tfidf", train, cfg.replace(ngrams=1)).evaluate(test)
            for f in features:
                reports.append(replace(rep, feature=f))
            continue
        for f in features:
            for n in ngram_list:
                if n == 2 and f != "tfidf":
                    continue
                check_combo(method, f, n)
                try:
                    reports.append(fit_pipeline(method, f, train, cfg.replace(ngrams=n)).evaluate(test))
                except ValueError as exc:
                    logger.warning("%s/%s/%d not applicable: %s", method, f, n, exc)
                logger.info("done %s/%s/%d", method, f, n)
    return reports


def cmd_evaluate(args) -> int:
    test = _nonempty(args.test)
    if args.grid:
        reports = _grid_reports(args, test)
    elif args.bundle:
        reports = [load_bundle(b).evaluate(test) for b in args.bundle]
    else:
        raise ConfigError("give --bundle or --grid")
    tsv = results_tsv(reports)
    if args.output:
        Path(args.output).write_text(tsv, encoding="utf-8")
    else:
        sys.stdout.write(tsv)
    if args.table:
        Path(args.table).write_text(wide_table(reports), encoding="utf-8")
    if args.dump:
        with open(args.dump, "w", encoding="utf-8") as fh:
            for rep in reports:
                for line in rep.dump_lines():
                    fh.write(json.dumps({"method": rep.method, "feature": rep.feature, "ngram": rep.ngram, **json.loads(line)}, separators=(",", ":")) + "\n")
    return EXIT_OK


def cmd_synth(args) -> int:
    spec = SynthSpec(
        n_users=args.users,
        n_products=args.products,
        n_reviews=args.reviews,
        user_bias_range=(args.bias_lo, args.bias_hi),
        user_scale_range=(args.scale_lo, args.scale_hi),
        words_per_score=args.words_per_score,
        words_per_review=args.words_per_review,
        noise_std=args.noise,
        seed=args.seed,
    )
    data, truth = generate(spec)
    write_canonical(data, args.output)
    if args.truth:
        doc = json.loads(truth.to_json())
        doc["spec"] = spec_dict(spec)
        Path(args.truth).write_text(json.dumps(doc, sort_keys=True), encoding="utf-8")
    return EXIT_OK


def _add_config_flags(p):
    p.add_argument("--config", help="flat key=value config file (default: $DEBIAS_CONFIG)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--seed", type=int)
    p.add_argument("--rounding", choices=("nearest", "floor"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="debias", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-v", "--verbose", action="store_true", help="log progress and the resolved config")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    _add = sub.add_parser

    def add_parser(name, **kw):
        return _add(name, parents=[common], **kw)

    sub.add_parser = add_parser

    p = sub.add_parser("ingest", help="convert CSV/SNAP JSONL reviews to the canonical JSONL corpus")
    p.add_argument("input")
    p.add_argument("-f", "--format", choices=("csv", "jsonl"))
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("split", help="seeded train/test split of a canonical corpus")
    p.add_argument("corpus")
    p.add_argument("--ratio", type=float, default=0.8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--train-out")
    p.add_argument("--test-out")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="fit a pipeline and write a model bundle")
    p.add_argument("train")
    p.add_argument("--method", required=True, choices=METHODS)
    p.add_argument("--features", default="tfidf", choices=FEATURES)
    p.add_argument("--ngrams", type=int, choices=(1, 2))
    p.add_argument("-o", "--output", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="score a corpus with a bundle")
    p.add_argument("bundle")
    p.add_argument("corpus")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="RMSE of bundles, or of a method x feature grid")
    p.add_argument("test")
    p.add_argument("--bundle", nargs="+")
    p.add_argument("--grid", action="store_true")
    p.add_argument("--train", help="training corpus for --grid")
    p.add_argument("--methods", help="comma-separated methods for --grid (default: all)")
    p.add_argument("--features", help="comma-separated feature backends for --grid (default: all)")
    p.add_argument("--ngram-list", default="1,2", help="tf-idf n-gram settings for --grid")
    p.add_argument("-o", "--output", help="long-form TSV (default: stdout)")
    p.add_argument("--table", help="also write a methods x features TSV table here")
    p.add_argument("--dump", help="per-record JSONL dump")
    _add_config_flags(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("synth", help="generate a synthetic biased-review corpus")
    p.add_argument("--users", type=int, default=100)
    p.add_argument("--products", type=int, default=200)
    p.add_argument("--reviews", type=int, default=5000)
    p.add_argument("--bias-lo", type=float, default=-1.5)
    p.add_argument("--bias-hi", type=float, default=1.5)
    p.add_argument("--scale-lo", type=float, default=1.0)
    p.add_argument("--scale-hi", type=float, default=1.0)
    p.add_argument("--words-per-score", type=int, default=20)
    p.add_argument("--words-per-review", type=int, default=8)
    p.add_argument("--noise", type=float, default=0.25)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--truth", help="ground-truth JSON sidecar")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except BrokenPipeError:
        return EXIT_OK
    except ConfigError as exc:
        print(f"debias: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, BundleError, OSError, ValueError) as exc:
        print(f"debias: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"debias: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
