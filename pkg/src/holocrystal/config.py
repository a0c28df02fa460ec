"""Run configuration: per-command defaults, JSON files and ``--set`` overrides."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import ConfigError

_LATTICE = {
    "J": 1.0,
    "U": 10.0,
    "num_sites": 2,
    "num_particles": None,
    "geometry": "ring",
    "a": 1.0,
    "K": None,
    "pair_sign": 1,
}

_SHOOTING = {
    "epsilon": 1e-4,
    "series_order": 8,
    "steps": 1000,
    "boundary_x_factor": 1e-3,
    "tol": 1e-8,
    "max_iter": 40,
    "fd_step": 1e-7,
    "step_tol": 1e-10,
}

DEFAULTS = {
    "basis": {
        "lattice": {"num_sites": 2, "num_particles": None, "max_dim": 10**6},
    },
    "spectrum": {
        "lattice": dict(_LATTICE, J=0.1),
        "spectrum": {"model": "bare", "num_eigenvalues": None, "max_dim": 10**6},
    },
    "swt-check": {
        "swt": {"J": 1.0, "u_over_j": [10.0, 20.0, 50.0, 100.0], "half_filling": [10, 50, 200]},
    },
    "dynamics": {
        "lattice": dict(_LATTICE, num_sites=32),
        "dynamics": {
            "initial": "staggered",
            "psi0": 1.0,
            "epsilon": 0.01,
            "t_max": 50.0,
            "dt": 0.005,
            "noise": "none",
            "method": "gl4",
            "sample_every": 20,
        },
        "seed": 0,
    },
    "correlator": {
        "lattice": dict(_LATTICE, num_sites=4),
        "correlator": {"model": "effective", "t_max": 20.0, "num_times": 2001, "temperature": None, "max_dim": 10**6},
    },
    "qnm": {
        "background": {"L": 1.0, "mu": 2.0, "Q": 0.0},
        "scalar": {"m": 0.0, "lam": 0.0, "q": 0.0},
        "qnm": {"guesses": [[2.5, -2.0]], "pairing": True},
        "shooting": dict(_SHOOTING),
    },
    "tc": {
        "background": {"r_h": 1.0, "L": 1.0, "Q": 0.0},
        "bec": {"J": 1.0, "U": 10.0, "z": 6, "psi0_sq": 1.0, "q": 0.0, "N": 100, "a": 1.0},
        "spin": {"J_ex": 1.0, "s": 0.5},
        "scan": {
            "enabled": False,
            "L": 1.0,
            "Q": 0.05,
            "q": 100.0,
            "m": 0.0,
            "r_h_min": 0.08,
            "r_h_max": 0.16,
            "num": 5,
            "omega_guess": None,
            "bisection_tol": 1e-7,
        },
        "shooting": dict(_SHOOTING),
    },
    "phase-diagram": {
        "phases": {
            "J": 1.0,
            "num_sites": 16,
            "geometry": "ring",
            "a": 1.0,
            "filling": 10,
            "L": 1.0,
            "alpha": 1.0,
            "beta": 1.0,
            "gamma": 0.05,
            "epsilon": 0.01,
            "noise": "weak",
            "periods": 30.0,
            "samples_per_period": 40,
            "method": "gl4",
            "n_max": None,
        },
        "grid": {"u_min": 1.0, "u_max": 50.0, "num_u": 20, "T_min": 0.25, "T_max": 100.0, "num_T": 20, "spacing": "log"},
        "thresholds": {"condensate_fraction": 0.1, "oscillation_snr": 5.0, "min_u_over_j_tc": 5.0},
        "seed": 0,
    },
}

COMMANDS = tuple(DEFAULTS)


@dataclass(frozen=True)
class RunConfig:
    """Resolved configuration for one command."""

    command: str
    params: dict

    @property
    def seed(self):
        return self.params.get("seed")

    def block(self, name):
        return self.params[name]


def _compatible(default, value):
    if default is None or value is None:
        return True
    if isinstance(default, bool):
        return isinstance(value, bool)
    if isinstance(default, (int, float)):
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if isinstance(default, str):
        return isinstance(value, (str, int, float)) and not isinstance(value, bool)
    if isinstance(default, list):
        return isinstance(value, list)
    return isinstance(value, type(default))


def _merge(base, update, path=""):
    for key, value in update.items():
        where = f"{path}{key}"
        if key not in base:
            raise ConfigError(f"unknown configuration key {where!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{where!r} must be a block of key-value pairs")
            _merge(base[key], value, where + ".")
        else:
            if not _compatible(base[key], value):
                raise ConfigError(f"{where!r}: {value!r} does not match the type of the default {base[key]!r}")
            base[key] = value


def parse_override(text):
    """``path.to.key=value``; the value is read as JSON and falls back to a string."""
    if "=" not in text:
        raise ConfigError(f"override {text!r} is not of the form key=value")
    path, raw = text.split("=", 1)
    keys = [k for k in path.strip().split(".") if k]
    if not keys:
        raise ConfigError(f"override {text!r} has an empty key")
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    out = value
    for k in reversed(keys):
        out = {k: out}
    return out


def load_file(path, command):
    """Read a JSON config or a manifest written by an earlier run."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    if "config" in data and "files" in data:
        if data.get("command") != command:
            raise ConfigError(f"manifest was written by {data.get('command')!r}, not {command!r}")
        data = data["config"]
    return data


def resolve(command, config_path=None, overrides=(), seed=None):
    """Defaults, then the config file, then ``--set`` overrides, then ``--seed``."""
    if command not in DEFAULTS:
        raise ConfigError(f"unknown command {command!r}")
    params = copy.deepcopy(DEFAULTS[command])
    if config_path is not None:
        _merge(params, load_file(config_path, command))
    for text in overrides:
        _merge(params, parse_override(text))
    if seed is not None:
        if "seed" not in params:
            raise ConfigError(f"command {command!r} takes no seed")
        params["seed"] = int(seed)
    return RunConfig(command, params)
