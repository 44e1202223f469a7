"""Run configuration: defaults, validation, YAML loading and echo."""

import copy
from pathlib import Path

import yaml

from .errors import ConfigError

SOLVERS = ("cauchy", "spectral")

DEFAULTS = {
    "grid": {"c": None, "L_x": 7.0, "L_y": 4.0, "h_x": 0.25, "h_y": 0.025},
    "mollifier": {"beta": "morozov", "pad_factor": 2},
    "morozov": {"tau": 1.01, "q": 0.98, "beta0": 1000.0, "max_steps": 2000, "search": "auto"},
    "solver": {
        "name": "cauchy",
        "method": "direct",
        "cg_tol": 1e-10,
        "cg_maxit": 5000,
        "preconditioner": None,
        "warm_start": False,
    },
    "spectral": {"u_max": 40.0, "count": 16384},
    "reconstruction": {"pad": 8, "t_max": 10.0},
    "bench": {
        "examples": [1, 2, 3],
        "solvers": ["cauchy", "spectral"],
        "noise_levels": [0.001, 0.01, 0.1],
        "seeds": [0, 1, 2, 3, 4],
        "deltas": [1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
        "beta_noiseless": 1e-9,
    },
    "output": {"dir": "out"},
}


def default_config():
    """A deep copy of :data:`DEFAULTS`."""
    return copy.deepcopy(DEFAULTS)


def _is_number(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _positive(v):
    return _is_number(v) and v > 0


def _check(cond, key, why):
    if not cond:
        raise ConfigError(f"invalid value for '{key}': {why}")


def validate(cfg):
    """Check every key of a complete configuration; raise :class:`ConfigError`."""
    _walk_keys(cfg, DEFAULTS, "")
    g = cfg["grid"]
    _check(g["c"] is None or _is_number(g["c"]), "grid.c", "number or null")
    for k in ("L_x", "L_y", "h_x", "h_y"):
        _check(_positive(g[k]), f"grid.{k}", "positive number")
    m = cfg["mollifier"]
    _check(m["beta"] == "morozov" or _positive(m["beta"]), "mollifier.beta",
           "positive number or 'morozov'")
    _check(isinstance(m["pad_factor"], int) and m["pad_factor"] >= 2, "mollifier.pad_factor",
           "integer >= 2")
    mz = cfg["morozov"]
    _check(_is_number(mz["tau"]) and mz["tau"] > 1, "morozov.tau", "number > 1")
    _check(_is_number(mz["q"]) and 0 < mz["q"] < 1, "morozov.q", "number in (0, 1)")
    _check(_positive(mz["beta0"]), "morozov.beta0", "positive number")
    _check(isinstance(mz["max_steps"], int) and mz["max_steps"] >= 0, "morozov.max_steps",
           "non-negative integer")
    _check(mz["search"] in ("auto", "linear", "bisect"), "morozov.search",
           "one of auto, linear, bisect")
    s = cfg["solver"]
    _check(s["name"] in SOLVERS, "solver.name", f"one of {', '.join(SOLVERS)}")
    _check(s["method"] in ("direct", "cg"), "solver.method", "direct or cg")
    _check(_is_number(s["cg_tol"]) and 0 < s["cg_tol"] < 1, "solver.cg_tol", "number in (0, 1)")
    _check(isinstance(s["cg_maxit"], int) and s["cg_maxit"] >= 1, "solver.cg_maxit",
           "positive integer")
    _check(s["preconditioner"] in (None, "jacobi"), "solver.preconditioner", "null or jacobi")
    _check(isinstance(s["warm_start"], bool), "solver.warm_start", "true or false")
    sp = cfg["spectral"]
    _check(_positive(sp["u_max"]), "spectral.u_max", "positive number")
    _check(isinstance(sp["count"], int) and sp["count"] >= 64, "spectral.count", "integer >= 64")
    r = cfg["reconstruction"]
    _check(isinstance(r["pad"], int) and r["pad"] >= 1, "reconstruction.pad", "positive integer")
    _check(_positive(r["t_max"]), "reconstruction.t_max", "positive number")
    b = cfg["bench"]
    _check(isinstance(b["examples"], list) and b["examples"]
           and all(e in (1, 2, 3) for e in b["examples"]), "bench.examples", "list drawn from 1, 2, 3")
    _check(isinstance(b["solvers"], list) and b["solvers"]
           and all(x in SOLVERS for x in b["solvers"]), "bench.solvers", "list of solver names")
    _check(isinstance(b["noise_levels"], list) and b["noise_levels"]
           and all(_is_number(x) and x >= 0 for x in b["noise_levels"]), "bench.noise_levels",
           "non-empty list of numbers >= 0")
    _check(isinstance(b["seeds"], list) and b["seeds"]
           and all(isinstance(x, int) for x in b["seeds"]), "bench.seeds", "non-empty list of integers")
    _check(isinstance(b["deltas"], list) and len(b["deltas"]) >= 3
           and all(_positive(x) for x in b["deltas"]), "bench.deltas",
           "list of at least 3 positive percentages")
    _check(_positive(b["beta_noiseless"]), "bench.beta_noiseless", "positive number")
    _check(isinstance(cfg["output"]["dir"], str) and cfg["output"]["dir"], "output.dir",
           "non-empty string")
    return cfg


def _walk_keys(cfg, ref, prefix):
    if not isinstance(cfg, dict):
        raise ConfigError(f"section '{prefix.rstrip('.') or '<root>'}' must be a mapping")
    for key in cfg:
        if key not in ref:
            raise ConfigError(f"unknown config key '{prefix}{key}'")
    for key, sub in ref.items():
        if key not in cfg:
            raise ConfigError(f"missing config key '{prefix}{key}'")
        if isinstance(sub, dict):
            _walk_keys(cfg[key], sub, f"{prefix}{key}.")


def load_config(path):
    """Read a complete YAML configuration file and validate it."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from None
    if data is None:
        data = {}
    return validate(data)


def set_key(cfg, dotted, value):
    """Override ``section.key`` in place; the key must already exist."""
    parts = dotted.split(".")
    node = cfg
    for p in parts[:-1]:
        if p not in node or not isinstance(node[p], dict):
            raise ConfigError(f"unknown config key '{dotted}'")
        node = node[p]
    if parts[-1] not in node:
        raise ConfigError(f"unknown config key '{dotted}'")
    node[parts[-1]] = value


def dump_config(cfg, path):
    """Write the configuration snapshot used for a run."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=False)
