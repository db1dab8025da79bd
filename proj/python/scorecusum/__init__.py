"""Score-based CUSUM monitoring of clinical risk models.

Run configurations use the same JSON layout as the command-line tool:
``{"scenario": ..., "monitor": {...}, "experiment": {...}}``. Every entry
point accepts a dict, a JSON string or a path to a JSON file.
"""

import json
import os

from . import _core
from ._core import (
    ConfigError,
    Error,
    ParseError,
    catalog_names,
    cross_info,
    cusum_stat,
    info_theta,
    score_delta,
    score_theta,
    sigmoid,
)

__all__ = [
    "ConfigError",
    "Error",
    "ParseError",
    "catalog_names",
    "cross_info",
    "cusum_stat",
    "experiment",
    "info_theta",
    "monitor",
    "scenario_catalog",
    "score_delta",
    "score_theta",
    "sigmoid",
    "simulate",
]


def _as_json(config):
    if isinstance(config, dict):
        return json.dumps(config)
    if isinstance(config, (str, os.PathLike)) and os.path.isfile(config):
        with open(config, encoding="utf-8") as fh:
            return fh.read()
    if isinstance(config, str):
        return config
    raise TypeError("config must be a dict, a JSON string or a path")


def scenario_catalog(name, m=100, K=4.0):
    """Catalog scenario as a dict of its generative parameters."""
    return json.loads(_core.scenario_catalog(name, m, K))


def simulate(config):
    """Patient stream as a dict of numpy columns (x is n by p)."""
    return _core.simulate(_as_json(config))


def monitor(config):
    """One monitoring run: alarm time, trace and diagnostics."""
    return json.loads(_core.monitor(_as_json(config)))


def experiment(config):
    """Replicated experiment or suite; one report per scenario and monitor."""
    return json.loads(_core.experiment(_as_json(config)))
