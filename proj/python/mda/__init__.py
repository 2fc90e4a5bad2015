"""Multi-domain text classification with label-shift adaptation."""

import json

from ._core import (
    Corpus,
    DataError,
    Model,
    TrainConfig,
    UsageError,
    default_benchmark_spec,
    estimate_label_distribution,
    generate_corpus,
    mcnemar,
    power,
    train,
)
from . import _core

__all__ = [
    "Corpus",
    "DataError",
    "Model",
    "TrainConfig",
    "UsageError",
    "config",
    "default_benchmark_spec",
    "estimate_label_distribution",
    "generate_corpus",
    "holdout_protocol",
    "mcnemar",
    "power",
    "synthesize",
    "train",
]


def config(name="base", **overrides):
    """Build a TrainConfig from a CLI-style name such as "gr+dsb" or "base+dsn+dsb"."""
    parts = name.split("+")
    cfg = TrainConfig()
    cfg.technique = parts[0]
    for flag in parts[1:]:
        if flag not in ("dsb", "dsn"):
            raise ValueError(f"unknown flag {flag!r} in config {name!r}")
        setattr(cfg, flag, True)
    for key, value in overrides.items():
        setattr(cfg, "lambda_" if key == "lambda" else key, value)
    return cfg


def synthesize(spec=None, **overrides):
    """Generate a labeled synthetic corpus. `spec` is a dict or JSON string;
    the default benchmark is used when it is omitted."""
    if spec is None:
        spec = json.loads(default_benchmark_spec())
    elif isinstance(spec, str):
        spec = json.loads(spec)
    spec = {**spec, **overrides}
    return generate_corpus(json.dumps(spec))


def holdout_protocol(corpus, configs, estimate_sizes=(250,), trials=5, k_folds=3, lambda_grid=None, seed=0):
    """Hold out each domain in turn; returns the protocol report as a dict."""
    configs = [config(c) if isinstance(c, str) else c for c in configs]
    grid = list(lambda_grid) if lambda_grid is not None else None
    text = _core._holdout_json(corpus, configs, list(estimate_sizes), trials, k_folds, grid, seed)
    return json.loads(text)
