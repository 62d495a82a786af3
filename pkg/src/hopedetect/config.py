"""Run configuration: packaged defaults < user INI file < command-line flags."""
from __future__ import annotations

import configparser
import os
from dataclasses import asdict, dataclass, field
from importlib import resources

from .corpus import LABELS, LANGUAGES

CONFIG_ENV = "HOPEDETECT_CONFIG"
MODELS = ("lr", "svm", "dt", "rf", "ensemble", "cnn-bilstm-ke", "cnn-bilstm-ft")

# regularization and sequence lengths used for each language's baselines
LANGUAGE_DEFAULTS = {
    "english": {"lr_C": 2.0, "svm_C": 10.0, "max_len": 100},
    "tamil": {"lr_C": 5.0, "svm_C": 1.0, "max_len": 50},
    "malayalam": {"lr_C": 1.0, "svm_C": 0.5, "max_len": 80},
    "other": {"lr_C": 1.0, "svm_C": 1.0, "max_len": 100},
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    language: str = "other"
    model: str = "lr"
    seed: int = 0
    out: str = "runs"
    train: str | None = None
    valid: str | None = None
    test: str | None = None
    vectors: str | None = None
    labels: dict = field(default_factory=dict)
    lr_C: float | None = None
    lr_max_iter: int = 1000
    lr_tol: float = 1e-4
    svm_C: float | None = None
    svm_max_iter: int = 1000
    svm_tol: float = 1e-4
    n_estimators: int = 100
    tree_max_features: int | None = 20000
    n_jobs: int = 1
    tie_policy: str = "first"
    max_len: int | None = None
    embed_dim: int = 100
    vectors_dim: int = 300
    conv_filters: int = 128
    conv_kernel: int = 3
    pool_window: int = 5
    lstm_units: int = 100
    dropout: float = 0.2
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 30
    patience: int = 3
    output_mode: str = "final"

    def resolve(self) -> "RunConfig":
        """Fill per-language defaults and validate."""
        if self.language not in LANGUAGES:
            raise ConfigError(f"language must be one of {LANGUAGES}, got {self.language!r}")
        if self.model not in MODELS:
            raise ConfigError(f"model must be one of {MODELS}, got {self.model!r}")
        for key, value in LANGUAGE_DEFAULTS[self.language].items():
            if getattr(self, key) is None:
                setattr(self, key, value)
        bad = {k: v for k, v in self.labels.items() if v not in LABELS}
        if bad:
            raise ConfigError(f"label aliases must map to {LABELS}: {bad}")
        return self

    def snapshot(self) -> dict:
        return asdict(self)


# (section, key) -> (RunConfig field, converter)
_KEYS = {
    ("run", "language"): ("language", str),
    ("run", "model"): ("model", str),
    ("run", "seed"): ("seed", int),
    ("run", "out"): ("out", str),
    ("paths", "train"): ("train", str),
    ("paths", "valid"): ("valid", str),
    ("paths", "test"): ("test", str),
    ("paths", "vectors"): ("vectors", str),
    ("lr", "c"): ("lr_C", float),
    ("lr", "max_iter"): ("lr_max_iter", int),
    ("lr", "tol"): ("lr_tol", float),
    ("svm", "c"): ("svm_C", float),
    ("svm", "max_iter"): ("svm_max_iter", int),
    ("svm", "tol"): ("svm_tol", float),
    ("forest", "n_estimators"): ("n_estimators", int),
    ("forest", "tree_max_features"): ("tree_max_features", lambda s: None if s.lower() == "none" else int(s)),
    ("forest", "n_jobs"): ("n_jobs", int),
    ("ensemble", "tie_policy"): ("tie_policy", str),
    ("neural", "max_len"): ("max_len", int),
    ("neural", "embed_dim"): ("embed_dim", int),
    ("neural", "vectors_dim"): ("vectors_dim", int),
    ("neural", "conv_filters"): ("conv_filters", int),
    ("neural", "conv_kernel"): ("conv_kernel", int),
    ("neural", "pool_window"): ("pool_window", int),
    ("neural", "lstm_units"): ("lstm_units", int),
    ("neural", "dropout"): ("dropout", float),
    ("neural", "learning_rate"): ("learning_rate", float),
    ("neural", "batch_size"): ("batch_size", int),
    ("neural", "epochs"): ("epochs", int),
    ("neural", "patience"): ("patience", int),
    ("neural", "output_mode"): ("output_mode", str),
}


def _parser():
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str  # label aliases are case-sensitive
    return parser


def _apply(cfg: RunConfig, parser: configparser.ConfigParser, origin: str):
    for section in parser.sections():
        if section == "labels":
            cfg.labels.update(dict(parser.items("labels")))
            continue
        for key, raw in parser.items(section):
            spec = _KEYS.get((section, key.lower()))
            if spec is None:
                raise ConfigError(f"{origin}: unknown key [{section}] {key}")
            name, conv = spec
            try:
                setattr(cfg, name, conv(raw.strip()))
            except ValueError:
                raise ConfigError(f"{origin}: bad value for [{section}] {key}: {raw!r}") from None


def load_config(path=None, overrides=None) -> RunConfig:
    """Build a :class:`RunConfig` from defaults, an optional INI file and overrides.

    ``path`` falls back to ``$HOPEDETECT_CONFIG``. ``overrides`` maps field
    names to values; ``None`` values are ignored.
    """
    cfg = RunConfig()
    defaults = _parser()
    defaults.read_string(resources.files("hopedetect").joinpath("default.ini").read_text("utf-8"))
    _apply(cfg, defaults, "default.ini")
    path = path or os.environ.get(CONFIG_ENV) or None
    if path:
        user = _parser()
        if not user.read(path, encoding="utf-8"):
            raise ConfigError(f"config file not found: {path}")
        _apply(cfg, user, path)
    for key, value in (overrides or {}).items():
        if value is not None:
            if not hasattr(cfg, key):
                raise ConfigError(f"unknown config field {key!r}")
            setattr(cfg, key, value)
    return cfg.resolve()
