"""Flat ``key = value`` run configuration and run manifests.

One setting per line, ``#`` starts a comment, blank lines are ignored.
Lists are comma separated. A manifest is a config file with every key
resolved, so running it again repeats the run.
"""
from __future__ import annotations

import platform
from pathlib import Path

import numpy as np

from . import kernels
from .errors import ConfigError

TASKS = ("reconstruct", "classify", "compress")


def _bool(text):
    low = text.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text):
    return None if text.lower() == "none" else float(text)


def _float_list(text):
    return [float(x) for x in text.split(",") if x.strip()]


# key -> (parser, default)
SCHEMA = {
    "task": (str, None),
    "dataset": (str, None),
    "num_graphs": (int, 1),
    "n": (int, 50),
    "m": (int, 150),
    "n_points": (int, 200),
    "k_neighbors": (int, 4),
    "n_color_clusters": (int, 3),
    "n_min": (int, 6),
    "n_max": (int, 12),
    "data_seed": (int, 0),
    "hidden": (int, 32),
    "node_ratio": (_optional_float, None),
    "edge_ratio": (float, 0.25),
    "edge_ratios": (_float_list, [0.05, 0.1, 0.25, 0.5]),
    "keep_ratio": (float, 0.5),
    "edge_model": (str, "ehgnn"),
    "categorical": (_bool, False),
    "accuracy": (float, 0.75),
    "epochs": (int, 500),
    "patience": (int, 200),
    "batch_size": (int, 128),
    "lr": (float, 5e-3),
    "lr_node": (float, 5e-3),
    "lr_edge": (float, 1e-3),
    "seed": (int, 0),
    "out": (str, "runs"),
}


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, list):
        return ",".join(repr(v) for v in value)
    if value is None:
        return "none"
    return repr(value) if isinstance(value, float) else str(value)


def parse_config(text, source="<config>"):
    """Parse config text into a dict with defaults filled in."""
    values, seen = {}, {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = (part.strip() for part in line.partition("="))
        where = f"{source}:{lineno}"
        if not sep or not key:
            raise ConfigError(f"{where}: expected 'key = value', got {raw.strip()!r}")
        if key not in SCHEMA:
            raise ConfigError(f"{where}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"{where}: duplicate key {key!r} (first set on line {seen[key]})")
        seen[key] = lineno
        try:
            values[key] = SCHEMA[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"{where}: bad value for {key!r}: {exc}") from None
    config = {key: default for key, (_, default) in SCHEMA.items()}
    config.update(values)
    if config["task"] is not None and config["task"] not in TASKS:
        raise ConfigError(f"{source}: task must be one of {', '.join(TASKS)}, got {config['task']!r}")
    return config


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise FileNotFoundError(f"config file not found: {path}") from None
    return parse_config(text, str(path))


def dump_config(config):
    # unset keys are left out; their default is None anyway
    return "".join(f"{key} = {_format(config[key])}\n" for key in SCHEMA if config.get(key) is not None)


def versions():
    from . import __version__

    return {
        "ehgnn": __version__,
        "numpy": np.__version__,
        "python": platform.python_version(),
        "kernels": kernels.BACKEND,
    }


def write_manifest(config, out_dir):
    """Write ``manifest.cfg``: the resolved config plus version comments."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    header = "".join(f"# {k} {v}\n" for k, v in versions().items())
    path = out_dir / "manifest.cfg"
    path.write_text(header + dump_config(config), encoding="utf-8")
    return path
