"""
Unified configuration for triple_lab.

Resolution priority (highest wins):
  1. CLI arguments (where applicable)
  2. Environment variables (TRIPLE_LAB_SEED, TRIPLE_LAB_WORKERS, TRIPLE_LAB_TOLERANCE)
  3. config.toml in the run root directory
  4. Built-in defaults (DEFAULTS below)

Library modules never read configuration; only the runner does, and it
passes explicit values down.
"""

import copy
import os

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from triples.errors import SpecFormatError
from triples.log import logger


DEFAULTS = {
    "seed": 0,
    "workers": 1,
    "grid": {
        "re_min": -2.0,
        "re_max": 2.0,
        "im_min": 0.1,
        "im_max": 10.0,
        "re_count": 5,
        "im_count": 4,
    },
    "tolerances": {
        "invariance": 1e-6,
        "bounded": 1e-4,
        "oracle": 1e-8,
        "rank_one": 1e-10,
        "identity": 1e-10,
    },
    "oracle": {
        "n": 4000,
        "quantile_cut": 1e-4,
        "random_n": 50,
    },
}

_config_cache = {}


def load_config(root):
    """Load and cache config.toml from root, merged over defaults and env vars."""
    if root in _config_cache:
        return _config_cache[root]

    cfg = _merge(DEFAULTS, _read_toml(root))

    env_seed = _env_number("TRIPLE_LAB_SEED", int)
    if env_seed is not None:
        cfg["seed"] = env_seed

    env_workers = _env_number("TRIPLE_LAB_WORKERS", int)
    if env_workers is not None:
        cfg["workers"] = env_workers

    # A single env tolerance overrides every check (handy for CI smoke runs)
    env_tol = _env_number("TRIPLE_LAB_TOLERANCE", float)
    if env_tol is not None:
        cfg["tolerances"] = {name: env_tol for name in cfg["tolerances"]}

    _config_cache[root] = cfg
    return cfg


def _env_number(name, cast):
    raw = os.environ.get(name)
    if not raw:
        return None
    try:
        return cast(raw)
    except ValueError:
        kind = "an integer" if cast is int else "a number"
        raise SpecFormatError(f"environment variable {name} must be {kind}, got {raw!r}") from None


def get_seed(root, arg_seed=None):
    """Seed for random model generation. CLI argument wins."""
    if arg_seed is not None:
        return int(arg_seed)
    return int(load_config(root)["seed"])


def get_workers(root, arg_workers=None):
    """Number of threads used for grid evaluation. CLI argument wins."""
    if arg_workers is not None:
        return max(1, int(arg_workers))
    return max(1, int(load_config(root)["workers"]))


def get_tolerance(root, name, arg_value=None):
    """
    Tolerance for a named check ("invariance", "bounded", "oracle",
    "rank_one", "identity").  Priority:
      1. CLI argument
      2. TRIPLE_LAB_TOLERANCE
      3. config.toml [tolerances]
      4. DEFAULTS
    """
    if arg_value is not None:
        return float(arg_value)
    tolerances = load_config(root)["tolerances"]
    if name not in tolerances:
        raise KeyError(f"Unknown tolerance {name!r}; expected one of {sorted(tolerances)}")
    return float(tolerances[name])


def get_grid(root):
    """Return the [grid] table (already merged with defaults)."""
    return dict(load_config(root)["grid"])


def get_oracle_settings(root):
    """Return the [oracle] table (already merged with defaults)."""
    return dict(load_config(root)["oracle"])


def _merge(base, override):
    """Recursively merge override into a deep copy of base."""
    merged = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def _read_toml(root):
    """Read config.toml from root. Returns dict (empty if missing)."""
    path = os.path.join(root, "config.toml")
    if not os.path.exists(path):
        return {}
    logger.debug("Reading configuration from %s", path)
    with open(path, "rb") as f:
        return tomllib.load(f)
