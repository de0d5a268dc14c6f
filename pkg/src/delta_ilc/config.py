"""Experiment configuration: nested YAML with strict keys and dotted overrides."""
import copy

import yaml

from .errors import ConfigError

DEFAULTS = {
    "robot": {},
    "trajectory": {"kind": "square", "dt": 1e-3, "options": {}},
    "controller": {"name": "amcilc", "preset": "case2", "gains": {}},
    "compare": {"controllers": ["amcilc", "pidilc", "afc"]},
    "shaper": {
        "enabled": False,
        "f_n": None,
        "k_t": None,
        "zeta": 0.075,
        "f_range": [16.0, 24.0],
        "k_range": [0.0, 1.0],
        "grid": 0.01,
        "weighting": "uniform",
        "w1": 0.5,
        "w2": 0.5,
    },
    "simulation": {
        "iterations": 20,
        "theta_dot_max": None,
        "noise_std": 0.0,
        "perturbation": {"m_p": 0.05, "rho_r": 0.05},
        "damping": True,
    },
    "workspace": {"spacing": 0.02, "z_planes": None, "extent": None},
    "out": "results",
    "seed": 0,
}

# sections whose contents are free-form mappings checked elsewhere
OPEN_SECTIONS = {("robot",), ("trajectory", "options"), ("controller", "gains"),
                 ("simulation", "perturbation")}


def _merge(base, update, path=()):
    for key, value in update.items():
        where = path + (key,)
        if path not in OPEN_SECTIONS and key not in base:
            raise ConfigError(f"unknown config key {'.'.join(where)!r}")
        current = base.get(key)
        if isinstance(current, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{'.'.join(where)} must be a mapping")
            _merge(current, value, where)
        else:
            base[key] = value
    return base


def parse_override(text):
    """``a.b.c=value`` with the value parsed as YAML."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    key, raw = text.split("=", 1)
    value = yaml.safe_load(raw) if raw.strip() else None
    out = {}
    node = out
    parts = key.strip().split(".")
    for part in parts[:-1]:
        node = node.setdefault(part, {})
    node[parts[-1]] = value
    return out


def resolve(data=None, overrides=()):
    cfg = copy.deepcopy(DEFAULTS)
    if data:
        if not isinstance(data, dict):
            raise ConfigError("config root must be a mapping")
        _merge(cfg, data)
    for text in overrides:
        _merge(cfg, parse_override(text))
    validate(cfg)
    return cfg


def load(path=None, overrides=()):
    data = None
    if path is not None:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    return resolve(data, overrides)


def validate(cfg):
    kinds = ("square", "butterfly", "pick_and_place")
    if cfg["trajectory"]["kind"] not in kinds:
        raise ConfigError(f"trajectory.kind must be one of {kinds}")
    if not cfg["trajectory"]["dt"] > 0:
        raise ConfigError("trajectory.dt must be positive")
    names = ("amcilc", "pidilc", "afc")
    if cfg["controller"]["name"] not in names:
        raise ConfigError(f"controller.name must be one of {names}")
    if cfg["controller"]["preset"] not in ("case1", "case2"):
        raise ConfigError("controller.preset must be case1 or case2")
    listed = cfg["compare"]["controllers"]
    if not isinstance(listed, list) or any(c not in names for c in listed):
        raise ConfigError(f"compare.controllers must list names from {names}")
    if cfg["shaper"]["weighting"] not in ("uniform", "workspace"):
        raise ConfigError("shaper.weighting must be uniform or workspace")
    if int(cfg["simulation"]["iterations"]) < 0:
        raise ConfigError("simulation.iterations must be non-negative")
    if not isinstance(cfg["seed"], int):
        raise ConfigError("seed must be an integer")


def dump(cfg, path):
    with open(path, "w") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=True)
