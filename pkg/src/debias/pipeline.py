"""End-to-end predictors: feature backend + bias table + regressor or baseline."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .baselines import (
    CLASSIFIER_KINDS,
    STAT_KINDS,
    fit_bernoulli_nb,
    fit_decision_tree,
    fit_linear_svm_ovr,
    fit_multinomial_nb,
    fit_stat_baseline,
)
from .bias_stats import BiasTable
from .config import ConfigError, RunConfig
from .corpus import Dataset
from .evalkit import EvalReport, rmse, round_clamp_array
from .lda import LdaModel, lda_fit, lda_transform
from .pvdbow import PvdbowConfig, PvdbowModel, pvdbow_fit, pvdbow_transform
from .regress import linreg_fit
from .text_features import Vocabulary, build_vocab, count_matrix, ngram_mode, tfidf_matrix, tokenize

logger = logging.getLogger(__name__)

REGRESSION_METHODS = ("ubr1", "ubr2", "none")
METHODS = REGRESSION_METHODS + STAT_KINDS + CLASSIFIER_KINDS
FEATURES = ("tfidf", "lda", "pvdbow")


def check_combo(method: str, features: str, ngrams: int) -> None:
    if method not in METHODS:
        raise ConfigError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if features not in FEATURES:
        raise ConfigError(f"unknown feature backend {features!r}")
    if ngrams == 2 and features != "tfidf":
        raise ConfigError(f"{features} features are unigram only (bigrams apply to tf-idf)")


@dataclass(frozen=True)
class Predictions:
    raw: np.ndarray
    final: np.ndarray
    fallback: np.ndarray


def _docs(records) -> list[list[str]]:
    return [tokenize(r.summary, r.body) for r in records]


@dataclass
class Pipeline:
    method: str
    features: str
    config: RunConfig
    bias: BiasTable | None = None
    vocab: Vocabulary | None = None
    feature_model: LdaModel | PvdbowModel | None = None
    predictor: object = None

    @property
    def uses_text(self) -> bool:
        return self.method not in STAT_KINDS

    def featurize(self, records, counts: bool = False):
        docs = _docs(records)
        if self.features == "tfidf":
            return count_matrix(docs, self.vocab) if counts else tfidf_matrix(docs, self.vocab)
        ids = [self.vocab.ids(d) for d in docs]
        c = self.config
        if self.features == "lda":
            return lda_transform(ids, self.feature_model, c.lda_burn, c.lda_samples, c.seed)
        return pvdbow_transform(ids, self.feature_model, c.pv_infer_steps, c.seed).astype(np.float64)

    def _raw_scores(self, records, X=None) -> tuple[np.ndarray, np.ndarray]:
        if self.method in STAT_KINDS:
            out = [self.predictor.predict_one(r) for r in records]
            return np.array([v for v, _ in out], dtype=np.float64), np.array([f for _, f in out], dtype=bool)
        if X is None:
            X = self.featurize(records, counts=self.method == "multinomial_nb")
        if self.method in CLASSIFIER_KINDS:
            return self.predictor.predict(X).astype(np.float64), np.zeros(len(records), dtype=bool)
        pnr = self.predictor.predict(X)
        if self.bias is None:
            return pnr, np.zeros(len(records), dtype=bool)
        raw = np.empty(len(records))
        cold = np.zeros(len(records), dtype=bool)
        for i, (rec, p) in enumerate(zip(records, pnr)):
            raw[i], cold[i] = self.bias.denormalize(self.method, rec.user_id, float(p))
        return raw, cold

    def predict(self, records, X=None) -> Predictions:
        raw, cold = self._raw_scores(records, X)
        return Predictions(raw, round_clamp_array(raw, self.config.rounding), cold)

    def evaluate(self, test: Dataset) -> EvalReport:
        if len(test) == 0:
            raise ValueError("empty test set")
        pred = self.predict(test.records)
        truth = test.scores
        ngram = self.config.ngrams if self.uses_text else 1
        return EvalReport(
            self.method, self.features, ngram, rmse(truth, pred.final), len(test),
            truth, pred.raw, pred.final, pred.fallback, [r.review_id for r in test],
        )


def _fit_features(pipe: Pipeline, train: Dataset):
    """Fit the text representation on train and return the training feature matrix."""
    c = pipe.config
    docs = _docs(train)
    mode = ngram_mode(c.ngrams)
    pipe.vocab = build_vocab(docs, mode, c.vocab_cap)
    logger.info("vocabulary: %d terms (%s) from %d docs", len(pipe.vocab), mode, len(docs))
    if pipe.features == "tfidf":
        return None
    ids = [pipe.vocab.ids(d) for d in docs]
    if pipe.features == "lda":
        pipe.feature_model = lda_fit(ids, len(pipe.vocab), c.n_topics, c.lda_alpha, c.lda_beta, c.lda_iters, c.seed)
        return lda_transform(ids, pipe.feature_model, c.lda_burn, c.lda_samples, c.seed)
    cfg = PvdbowConfig(c.pv_dim, c.pv_epochs, c.pv_negative, c.pv_lr_start, c.pv_lr_end, c.pv_min_count, c.pv_infer_steps, c.seed)
    pipe.feature_model = pvdbow_fit(ids, len(pipe.vocab), cfg)
    return pipe.feature_model.doc_vectors.astype(np.float64)


def fit_pipeline(method: str, features: str, train: Dataset, config: RunConfig | None = None) -> Pipeline:
    config = config or RunConfig()
    check_combo(method, features, config.ngrams)
    if len(train) == 0:
        raise ValueError("empty training set")
    pipe = Pipeline(method, features, config)
    c = config

    if method in STAT_KINDS:
        pipe.predictor = fit_stat_baseline(method, train)
        return pipe

    X = _fit_features(pipe, train)
    y = train.scores
    if method == "multinomial_nb":
        Xc = pipe.featurize(train.records, counts=True) if features == "tfidf" else X
        pipe.predictor = fit_multinomial_nb(Xc, y, c.nb_alpha)
        return pipe
    if X is None:
        X = pipe.featurize(train.records)
    if method == "bernoulli_nb":
        pipe.predictor = fit_bernoulli_nb(X, y, c.nb_alpha)
    elif method == "linear_svm":
        pipe.predictor = fit_linear_svm_ovr(X, y, c.svm_lambda, c.svm_epochs, c.seed)
    elif method == "decision_tree":
        pipe.predictor = fit_decision_tree(X, y, c.tree_max_depth, c.tree_min_leaf, c.tree_max_candidates or None)
    else:
        if method != "none":
            pipe.bias = BiasTable.fit(train)
        targets = np.array([pipe.bias.normalize(method, r.user_id, r.score) if pipe.bias else float(r.score) for r in train])
        pipe.predictor = linreg_fit(X, targets, c.reg_lambda, c.reg_epochs, c.reg_lr, c.seed, c.reg_batch, c.reg_precond_floor)
        logger.info("regressor objective %.5f -> %.5f", pipe.predictor.history[0], pipe.predictor.history[-1])
    return pipe

