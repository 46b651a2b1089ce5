# Copyright 2026 The slowvae Authors
# SPDX-License-Identifier: Apache-2.0
"""Slowness-regularized VAE experiments on a bouncing-ball simulator.

Configs are plain dicts mirroring the JSON config files; they are passed to
the native core as JSON text.
"""

import json as _json

from . import _core
from ._core import (
    ConfigError,
    FormatError,
    InvalidInput,
    TrainingDivergence,
    bias_variance,
    data_efficiency,
    encode,
    file_sha256,
    kl_to_standard_normal,
    latent_slowness_ratio,
    mean_squared_error,
    read_dataset,
    set_verbose,
    set_warnings_enabled,
    similarity_loss,
)

__all__ = [
    "ConfigError",
    "FormatError",
    "InvalidInput",
    "TrainingDivergence",
    "bias_variance",
    "config",
    "data_efficiency",
    "encode",
    "evaluate",
    "file_sha256",
    "generate",
    "generate_dataset",
    "kl_to_standard_normal",
    "latent_slowness_ratio",
    "mean_squared_error",
    "read_checkpoint_header",
    "read_dataset",
    "run_all",
    "set_verbose",
    "set_warnings_enabled",
    "similarity_loss",
]


def _text(cfg):
    return cfg if isinstance(cfg, str) else _json.dumps(cfg)


def config(profile="desk", **overrides):
    """Full config dict for a built-in profile, with top-level sections
    shallow-merged from ``overrides`` (e.g. ``dataset={"n_sequences": 40}``)."""
    base = _json.loads(_core.paper_config() if profile == "paper" else _core.desk_config())
    for section, values in overrides.items():
        if section not in base:
            raise ConfigError(f"unknown config section {section!r}")
        if isinstance(values, dict) and section != "representation":
            base[section].update(values)
        else:
            base[section] = values
    return _json.loads(_core.normalize_config(_json.dumps(base)))


def generate_dataset(cfg):
    """Simulates the dataset in memory: dict of frames, labels, positions."""
    return _core.generate_dataset(_text(cfg))


def generate(cfg, out):
    """Writes the dataset file and returns its SHA-256."""
    return _core.generate(_text(cfg), out)


def run_all(cfg, out, workers=1):
    return _core.run_all(_text(cfg), out, workers)


def evaluate(cfg, run_dir, out):
    return _core.evaluate(_text(cfg), run_dir, out)


def read_checkpoint_header(path):
    return _json.loads(_core.read_checkpoint_header(path))
