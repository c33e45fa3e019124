"""Run configuration: defaults, JSON/TOML loading, overrides, validation."""

from __future__ import annotations

import copy
import json
import math
import sys
from pathlib import Path

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

DEFAULTS: dict = {
    "seed": 0,
    "jobs": 1,
    "map": {"family": "doubling"},
    "nondegeneracy": None,
    "orbit": {"x": 0.3, "n": 100},
    "certify": {
        "bc": {"kappa": 1.01, "beta": 0.1, "lambda": math.log(4.0), "sigma": math.log(4.0) / 6,
               "delta": 0.1, "horizon": 100, "sample_orbits": 100},
        "rovella": {"lambda_c": 1.0, "alpha": 0.1, "horizon": 100, "sample_count": 200},
    },
    "hyperbolic": {"sigma": 0.75, "epsilon": 0.0, "delta_ball": 0.1, "b_exponent": None,
                   "x": 0.3, "horizon": 1000, "points": 100, "grid": "regular"},
    "inducing": {"hyperbolic_returns": True, "base_point": 0.25, "base_region": None, "max_time": 30,
                 "resolution": 1e-6, "max_pieces": 200000, "variation_depth": 8, "pair_samples": 200},
    "shift": {"potential": {"kind": "bernoulli", "p": [0.5, 0.5]}, "N": None, "depth": None, "tol": 1e-12,
              "max_iter": 100000, "budget": 2000000, "strategy": "truncation_sup", "n_max": 12, "anchor": 0,
              "gibbs_depth": 5, "decay_depth": 6},
    "thermo": {
        "potential": {"kind": "constant", "value": 0.0},
        "pressure": {"method": "caratheodory", "sample_size": 200, "delta": 0.05, "N": 0, "budget": 40,
                     "orbit_length": 100000},
        "normalize": "variational_truncation",
        "truncation": None,
        "support_samples": 200,
        "expansion_horizon": 1000,
        "viana": {"box": [[0.25, 0.30], [-0.6, -0.5]], "bump": "cosine", "L": 1000000, "pressure_hc": None,
                  "c_hat": 1.5, "claim_orbits": 100, "claim_length": 1000},
        "gap": {"K": 1.0, "lam": 2.0, "gamma": 0.9, "n": 1, "m": 0.01, "mu": 0.01, "reading": "B"},
    },
    "output": {"dir": None, "formats": ["json", "csv"]},
}

# sections each subcommand reads (beyond seed/jobs/output)
REQUIRES = {
    "maps orbit": ("map", "orbit"),
    "maps certify-bc": ("map", "certify"),
    "maps certify-rovella": ("certify",),
    "hyp detect": ("map", "hyperbolic"),
    "hyp frequency": ("map", "hyperbolic"),
    "induce build": ("map", "hyperbolic", "inducing"),
    "induce variation": ("map", "hyperbolic", "inducing", "thermo"),
    "shift pressure": ("shift",),
    "shift rpf": ("shift",),
    "shift gibbs-check": ("shift",),
    "thermo pressure": ("map", "thermo"),
    "thermo equilibrium": ("map", "hyperbolic", "inducing", "thermo"),
    "thermo abramov-check": ("map", "hyperbolic", "inducing", "thermo"),
    "thermo viana-potential": ("map", "thermo"),
    "thermo finiteness-gap": ("thermo",),
}


def _merge(base: dict, extra: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        where = f"{path}{k}"
        if k not in out:
            # free-form sections: family parameters and potential specs
            if path.rstrip(".").split(".")[-1] not in ("map", "potential", "nondegeneracy"):
                raise ConfigError(f"unknown config key {where!r}")
            out[k] = v
        elif isinstance(out[k], dict) and isinstance(v, dict) and k not in ("potential",):
            out[k] = _merge(out[k], v, where + ".")
        else:
            out[k] = copy.deepcopy(v)
    return out


def load(path: str | None) -> dict:
    if path is None:
        return {}
    p = Path(path)
    try:
        text = p.read_bytes()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}", path=str(p)) from None
    try:
        if p.suffix.lower() == ".toml":
            return tomllib.loads(text.decode("utf-8"))
        return json.loads(text.decode("utf-8"))
    except (ValueError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot parse config: {e}", path=str(p)) from None


def _parse_value(text: str):
    try:
        return json.loads(text)
    except ValueError:
        return text


def set_path(cfg: dict, dotted: str, value) -> None:
    keys = dotted.split(".")
    cur = cfg
    for k in keys[:-1]:
        if cur.get(k) is None:
            cur[k] = {}
        if not isinstance(cur[k], dict):
            raise ConfigError(f"cannot set {dotted!r}: {k!r} is not a section")
        cur = cur[k]
    cur[keys[-1]] = value


def resolve(path: str | None, overrides: dict | None = None, sets: list[str] | None = None) -> dict:
    """Defaults, then the config file, then ``--set`` pairs, then flag overrides."""
    raw = load(path)
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a table/object")
    cfg = _merge(DEFAULTS, raw)
    for item in sets or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        set_path(cfg, k.strip(), _parse_value(v))
    for k, v in (overrides or {}).items():
        if v is not None:
            set_path(cfg, k, v)
    return cfg


def _num(cfg: dict, dotted: str, positive: bool = False, integer: bool = False, allow_none: bool = False):
    cur = cfg
    for k in dotted.split("."):
        if not isinstance(cur, dict) or k not in cur:
            raise ConfigError(f"missing config key {dotted!r}")
        cur = cur[k]
    if cur is None and allow_none:
        return
    if isinstance(cur, bool) or not isinstance(cur, (int, float)):
        raise ConfigError(f"{dotted!r} must be a number", value=cur)
    if integer and int(cur) != cur:
        raise ConfigError(f"{dotted!r} must be an integer", value=cur)
    if positive and not cur > 0:
        raise ConfigError(f"{dotted!r} must be positive", value=cur)


def validate(cfg: dict, command: str) -> dict:
    if command not in REQUIRES:
        raise ConfigError(f"unknown subcommand {command!r}")
    for sec in REQUIRES[command]:
        if not isinstance(cfg.get(sec), dict):
            raise ConfigError(f"subcommand {command!r} needs a [{sec}] section")
    _num(cfg, "seed", integer=True)
    _num(cfg, "jobs", positive=True, integer=True)
    if command == "maps orbit":
        _num(cfg, "orbit.n", positive=True, integer=True)
    if command == "maps certify-bc":
        _num(cfg, "certify.bc.horizon", positive=True, integer=True)
    if command == "maps certify-rovella":
        _num(cfg, "certify.rovella.horizon", positive=True, integer=True)
    if command == "hyp frequency":
        _num(cfg, "hyperbolic.points", positive=True, integer=True)
    if "map" in REQUIRES[command]:
        fam = cfg["map"].get("family")
        if not isinstance(fam, str):
            raise ConfigError("map.family must be a string")
    if "hyperbolic" in REQUIRES[command]:
        for k in ("sigma", "epsilon", "delta_ball"):
            _num(cfg, f"hyperbolic.{k}")
        _num(cfg, "hyperbolic.horizon", positive=True, integer=True)
    if "inducing" in REQUIRES[command]:
        _num(cfg, "inducing.max_time", positive=True, integer=True)
        _num(cfg, "inducing.resolution", positive=True)
    if "shift" in REQUIRES[command]:
        if not isinstance(cfg["shift"].get("potential"), dict):
            raise ConfigError("shift.potential must be a table")
        _num(cfg, "shift.n_max", positive=True, integer=True)
        _num(cfg, "shift.tol", positive=True)
    if command == "thermo finiteness-gap":
        for k in ("K", "lam", "gamma", "m", "mu"):
            _num(cfg, f"thermo.gap.{k}")
        _num(cfg, "thermo.gap.n", integer=True)
    fm = cfg.get("output", {}).get("formats", [])
    if not set(fm) <= {"json", "csv"}:
        raise ConfigError("output.formats may only contain 'json' and 'csv'", formats=fm)
    return cfg
