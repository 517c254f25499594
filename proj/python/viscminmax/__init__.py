"""Viscosity min-max numerics: width curves, entropy selection, index-bounded critical points."""

import json

from ._core import (
    ConfigError,
    Problem,
    VmmError,
    canonical_problem_key,
    config_keys,
    entropy_bound,
    problem_names,
)
from . import _core

__all__ = [
    "ConfigError",
    "Problem",
    "VmmError",
    "canonical_problem_key",
    "config_keys",
    "default_config",
    "entropy_bound",
    "load_run",
    "problem_names",
    "run",
    "selftest",
    "solve",
]


def _overrides(config, kwargs):
    items = dict(config or {})
    # Keyword form: problem__key="planted_saddle" stands for problem.key.
    items.update({k.replace("__", "."): v for k, v in kwargs.items()})
    out = []
    for k, v in items.items():
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, (list, tuple)):
            v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
        out.append(f"{k}={v}")
    return out


def default_config():
    """Every config key with its default, as strings."""
    return json.loads(_core._default_config())


def run(config=None, *, timings=False, **kwargs):
    """Run the pipeline and return the run record as a dict.

    Timings are left out unless asked for, so two calls with the same config compare equal.
    """
    return json.loads(_core._run(_overrides(config, kwargs), timings))


def solve(out_dir, config=None, **kwargs):
    """Run the pipeline and write run.json and the CSV files to out_dir."""
    return json.loads(_core._solve(_overrides(config, kwargs), str(out_dir)))


def load_run(path):
    return json.loads(_core._load_run(str(path)))


def selftest(filter=""):
    return _core._selftest(filter)
