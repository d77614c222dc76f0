"""Experiment configuration: ``[section]`` + ``key = value`` files with a fixed schema."""
from __future__ import annotations

import configparser
import hashlib
import json
from pathlib import Path


class ConfigError(ValueError):
    pass


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _ints(v: str):
    return [int(t) for t in v.replace(",", " ").split()]


def _floats(v: str):
    return [float(t) for t in v.replace(",", " ").split()]


SCHEMA = {
    "mcvi": {
        "target": (str, "gaussian"),
        "step": (float, 0.015),
        "q0_mean": (float, 0.0),
        "q0_std": (float, 1.0),
        "M": (_ints, [1, 5, 10, 15, 20, 25, 30, 40]),
        "K": (_ints, [1, 4, 16]),
        "replicates": (int, 2000),
        "train_iters": (int, 1000),
        "train_batch": (int, 256),
        "learning_rate": (float, 0.01),
        "freeze_q": (_bool, False),
        "ais_steps": (_ints, [1, 5, 10, 20, 40, 80, 160]),
        "quadrature_points": (int, 100_000),
        "block": (int, 500),
    },
    "dpmm": {
        "dataset": (str, "gaussian"),
        "path": (str, ""),
        "kind": (str, "real"),
        "n": (int, 6),
        "alpha": (float, 1.0),
        "mu0": (float, 0.0),
        "kappa0": (float, 0.1),
        "a0": (float, 1.0),
        "b0": (float, 1.0),
        "K": (_ints, [1, 4]),
        "N": (_ints, [10, 100]),
        "replicates": (int, 100),
        "rejuvenate_every": (int, 20),
        "typo_clusters": (int, 4),
        "typo_per_cluster": (int, 5),
        "normalize": (_bool, True),
    },
    "diagnose": {
        "mh": (_bool, True),
        "mh_steps": (int, 100_000),
        "rtol": (float, 1e-8),
        "unbiased_rtol": (float, 1e-10),
    },
    "kl-bound": {
        "strategies": (str, "exact,crude"),
        "replicates": (int, 20000),
    },
}

CHOICES = {
    ("mcvi", "target"): ("gaussian", "mixture"),
    ("dpmm", "dataset"): ("gaussian", "typos", "file"),
    ("dpmm", "kind"): ("real", "string"),
}


def defaults(section: str) -> dict:
    return {k: (list(d) if isinstance(d, list) else d) for k, (_, d) in SCHEMA[section].items()}


def load(section: str, path=None) -> dict:
    """Defaults for ``section`` overridden by the file at ``path``.

    Unknown sections or keys are errors. Sections for other subcommands are
    validated but ignored, so one file can configure every subcommand.
    """
    cfg = defaults(section)
    if path is None:
        return cfg
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"unknown section [{sec}]")
        for key, raw in parser.items(sec):
            if key not in SCHEMA[sec]:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            conv = SCHEMA[sec][key][0]
            try:
                val = conv(raw)
            except ValueError as e:
                raise ConfigError(f"[{sec}] {key}: {e}") from e
            allowed = CHOICES.get((sec, key))
            if allowed and val not in allowed:
                raise ConfigError(f"[{sec}] {key} must be one of {allowed}")
            if sec == section:
                cfg[key] = val
    _validate(section, cfg)
    return cfg


def _validate(section, cfg):
    for k, v in cfg.items():
        vals = v if isinstance(v, list) else [v]
        if k in ("replicates", "train_iters", "train_batch", "quadrature_points", "block", "n",
                 "K", "N", "typo_clusters", "typo_per_cluster") and any(x < 1 for x in vals):
            raise ConfigError(f"[{section}] {k} must be positive")
        if k == "mh_steps" and v < 0:
            raise ConfigError(f"[{section}] mh_steps must be non-negative")
        if k == "M" and any(x < 0 for x in vals):
            raise ConfigError(f"[{section}] M must be non-negative")
    if section == "dpmm" and cfg["dataset"] == "file" and not cfg["path"]:
        raise ConfigError("[dpmm] dataset = file needs path")


def config_hash(section: str, cfg: dict) -> str:
    blob = json.dumps({"section": section, "config": cfg}, sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def ensure_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p
