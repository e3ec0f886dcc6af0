"""Experiment configuration: YAML file + dotted-key overrides.

The fully-resolved config is written next to every command's outputs so
any run can be replayed byte-identically.
"""

from __future__ import annotations

import copy

import yaml


class ConfigError(Exception):
    """Invalid configuration; the CLI maps this to exit code 2."""


DEFAULTS = {
    "seed": 0,
    "out_dir": "runs/out",
    "dataset": {
        "kind": "two_moons",  # two_moons | gaussian_clusters | cifar10
        "n_per_class": 200,
        "noise": 0.1,
        "centers": [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]],
        "sigma": 0.1,
        "path": "",
        "limit": 0,
    },
    "gen": {
        "variant": "cnc",  # cnc | r_cnc | pbcc_only | corruption_only
        "lambda_low": 0.0,
        "lambda_high": 1.0,
        "op_pool": [],
        "severity_pool": [1, 2, 3, 4, 5],
        "ood_ratio": 1.0,
    },
    "train": {
        "vanilla": False,
        "hidden": [32, 32],
        "alpha": 1.0,
        "lr": 0.05,
        "momentum": 0.9,
        "epochs": 2000,
        "batch_size": 64,
        "weight_decay": 0.0,
    },
    "eval": {
        "checkpoint": "",  # default: <out_dir>/model.ckpt
        "ood_source": "ring",  # ring | cache
        "ring_radius_scale": 3.0,
        "n_test_per_class": 200,
        "n_ood": 400,
        "cache_dir": "",
        "bins": 15,
    },
    "polytope": {
        "checkpoint": "",
        "domain_factor": 1.5,
        "metric_variant": "region",  # region | cell
    },
    "generate": {
        "count": 64,
        "preview_ppm": True,
    },
    "diversity": {
        "n_samples": 400,
        "ref_epochs": 300,
        "variants": ["pbcc_only", "corruption_only", "r_cnc", "cnc"],
    },
    "fig2": {
        "n_points": 600,
    },
}


def _merge(base: dict, override: dict, path="") -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = f"{path}.{key}" if path else key
        if key not in base:
            raise ConfigError(f"unknown config key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a mapping")
            out[key] = _merge(base[key], value, where)
        else:
            out[key] = value
    return out


def _parse_scalar(text: str):
    return yaml.safe_load(text)


def apply_override(cfg: dict, assignment: str) -> dict:
    """Apply one 'dotted.key=value' override (value parsed as YAML)."""
    if "=" not in assignment:
        raise ConfigError(f"override {assignment!r} must look like key=value")
    key, _, raw = assignment.partition("=")
    node = {}
    leaf = node
    parts = key.strip().split(".")
    for part in parts[:-1]:
        leaf[part] = {}
        leaf = leaf[part]
    try:
        leaf[parts[-1]] = _parse_scalar(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse value for {key!r}: {exc}") from exc
    return _merge(cfg, node)


def load_config(path=None, overrides=()) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if path is not None:
        try:
            with open(path) as fh:
                loaded = yaml.safe_load(fh) or {}
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        cfg = _merge(cfg, loaded)
    for assignment in overrides:
        cfg = apply_override(cfg, assignment)
    validate(cfg)
    return cfg


def validate(cfg: dict) -> None:
    ds = cfg["dataset"]
    if ds["kind"] not in ("two_moons", "gaussian_clusters", "cifar10"):
        raise ConfigError(f"dataset.kind {ds['kind']!r} unknown")
    if ds["kind"] == "cifar10" and not ds["path"]:
        raise ConfigError("dataset.path required for kind=cifar10")
    if ds["kind"] != "cifar10" and ds["n_per_class"] < 1:
        raise ConfigError("dataset.n_per_class must be >= 1")
    gen = cfg["gen"]
    if gen["variant"] not in ("cnc", "r_cnc", "pbcc_only", "corruption_only"):
        raise ConfigError(f"gen.variant {gen['variant']!r} unknown")
    if not 0.0 <= gen["lambda_low"] <= gen["lambda_high"] <= 1.0:
        raise ConfigError("gen.lambda_low/high must satisfy 0 <= lo <= hi <= 1")
    if gen["ood_ratio"] <= 0:
        raise ConfigError("gen.ood_ratio must be > 0")
    tr = cfg["train"]
    if tr["epochs"] < 0 or tr["batch_size"] < 1 or tr["lr"] <= 0:
        raise ConfigError("train.epochs/batch_size/lr out of range")
    if not 0.0 <= tr["momentum"] < 1.0:
        raise ConfigError("train.momentum must lie in [0, 1)")
    ev = cfg["eval"]
    if ev["ood_source"] not in ("ring", "cache"):
        raise ConfigError(f"eval.ood_source {ev['ood_source']!r} unknown")
    if ev["ood_source"] == "cache" and not ev["cache_dir"]:
        raise ConfigError("eval.cache_dir required for ood_source=cache")
    if cfg["polytope"]["metric_variant"] not in ("region", "cell"):
        raise ConfigError("polytope.metric_variant must be region or cell")
    for variant in cfg["diversity"]["variants"]:
        if variant not in ("cnc", "r_cnc", "pbcc_only", "corruption_only"):
            raise ConfigError(f"diversity.variants entry {variant!r} unknown")


def dump_config(cfg: dict, path) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=True, default_flow_style=False)
