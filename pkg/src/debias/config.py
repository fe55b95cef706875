"""Run configuration: every tunable knob with its default.

Config files are flat ``key = value`` lines (an optional ``[section]`` header
is ignored). Unknown keys are rejected.
"""

from __future__ import annotations

import configparser
import dataclasses
import logging
import os
import types
import typing
from dataclasses import dataclass

logger = logging.getLogger(__name__)

CONFIG_ENV = "DEBIAS_CONFIG"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    # text features
    vocab_cap: int = 25_000
    ngrams: int = 1
    # LDA
    n_topics: int = 100
    lda_alpha: float | None = None  # None: 50 / n_topics
    lda_beta: float = 0.01
    lda_iters: int = 500
    lda_burn: int = 50
    lda_samples: int = 20
    # PV-DBOW
    pv_dim: int = 100
    pv_epochs: int = 20
    pv_negative: int = 5
    pv_lr_start: float = 0.025
    pv_lr_end: float = 0.0001
    pv_min_count: int = 2
    pv_infer_steps: int = 20
    # least-squares regressor
    reg_lambda: float = 1e-4
    reg_epochs: int = 10
    reg_lr: float = 0.5
    reg_batch: int = 32
    reg_precond_floor: float = 0.1  # 0 turns off column rescaling
    # classifiers
    svm_lambda: float = 1e-4
    svm_epochs: int = 5
    nb_alpha: float = 1.0
    tree_max_depth: int = 20
    tree_min_leaf: int = 1
    tree_max_candidates: int = 1000  # 0 searches every feature
    # evaluation
    rounding: str = "nearest"
    seed: int = 0

    def __post_init__(self):
        if self.ngrams not in (1, 2):
            raise ConfigError("ngrams must be 1 or 2")
        if self.rounding not in ("nearest", "floor"):
            raise ConfigError("rounding must be 'nearest' or 'floor'")
        if self.vocab_cap < 1:
            raise ConfigError("vocab_cap must be positive")
        if self.n_topics < 2:
            raise ConfigError("n_topics must be at least 2")
        if self.lda_iters < 1 or self.pv_epochs < 1 or self.reg_epochs < 1:
            raise ConfigError("iteration counts must be at least 1")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **_coerce_all(changes))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def dumps(self) -> str:
        return "".join(f"{k} = {'auto' if v is None else v}\n" for k, v in self.to_dict().items())


_HINTS = typing.get_type_hints(RunConfig)


def _coerce(key: str, value):
    if key not in _HINTS:
        raise ConfigError(f"unknown config key {key!r}")
    if not isinstance(value, str):
        return value
    hint = _HINTS[key]
    text = value.strip()
    if typing.get_origin(hint) in (typing.Union, types.UnionType):
        if text.lower() in ("auto", "none", ""):
            return None
        hint = next(a for a in typing.get_args(hint) if a is not type(None))
    try:
        return hint(text)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {value!r}") from None


def _coerce_all(values: dict) -> dict:
    return {k: _coerce(k, v) for k, v in values.items()}


def parse_config_text(text: str) -> dict:
    if not text.lstrip().startswith("["):
        text = "[run]\n" + text
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    parser.read_string(text)
    out = {}
    for section in parser.sections():
        out.update(parser.items(section))
    return _coerce_all(out)


def load_config(path: str | None = None, overrides: dict | None = None) -> RunConfig:
    """Defaults, then the config file (``path`` or ``$DEBIAS_CONFIG``), then overrides."""
    values: dict = {}
    path = path or os.environ.get(CONFIG_ENV)
    if path:
        with open(path, encoding="utf-8") as fh:
            values.update(parse_config_text(fh.read()))
    values.update(_coerce_all({k: v for k, v in (overrides or {}).items() if v is not None}))
    try:
        cfg = RunConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    logger.info("resolved config:\n%s", cfg.dumps())
    return cfg
