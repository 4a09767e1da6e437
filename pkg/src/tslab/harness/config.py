"""Experiment configuration: a versioned key-value tree loaded from YAML."""
import copy
import hashlib
import json
import math
from dataclasses import dataclass, field, fields, asdict
from typing import Optional

import numpy as np
import yaml

from tslab.environment import (ADVERSARIES, LinearEnvironment, NoiseKind, greedy_trap_mu,
                               make_adversary)
from tslab.errors import ConfigError, OutputError
from tslab.policy import POLICIES, SamplerConfig, make_policy
from tslab.rng import instance_generator

SCHEMA_VERSION = 1
FORMATS = ("csv", "json", "both")

# keys that change where results go, not what they are
_NON_SEMANTIC = ("output", "workers")


@dataclass
class ExperimentConfig:
    d: int = 2
    N: Optional[int] = 5
    T: int = 100
    R: float = 0.5
    delta: float = 0.1
    v_mode: str = "anytime"
    policy: dict = field(default_factory=lambda: {"id": "ts"})
    adversary: dict = field(default_factory=lambda: {"id": "sphere-iid"})
    noise: dict = field(default_factory=dict)
    mu: Optional[object] = None
    mu_norm: float = 1.0
    seed: int = 0
    reps: int = 1
    assert_unit_gaps: bool = False
    check_eigen: bool = True
    thin: int = 1
    constants: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"dir": "tslab-out", "format": "both"})
    workers: int = 1
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.schema_version != SCHEMA_VERSION:
            raise ConfigError(f"unsupported schema_version {self.schema_version}")
        for name in ("d", "T", "reps", "thin", "workers", "seed"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)):
                raise ConfigError(f"{name} must be an integer, got {value!r}")
        if self.d < 1:
            raise ConfigError(f"d must be >= 1, got {self.d}")
        if self.T < 1:
            raise ConfigError(f"T must be >= 1, got {self.T}")
        if self.reps < 1:
            raise ConfigError(f"reps must be >= 1, got {self.reps}")
        if self.thin < 1 or self.workers < 1:
            raise ConfigError("thin and workers must be >= 1")
        if not 0 < self.delta < 1:
            raise ConfigError(f"delta must lie in (0, 1), got {self.delta}")
        if not self.R >= 0:
            raise ConfigError(f"R must be >= 0, got {self.R}")
        if self.v_mode not in ("anytime", "fixed"):
            raise ConfigError(f"v_mode must be 'anytime' or 'fixed', got {self.v_mode!r}")
        if self.N is not None and self.N < 1:
            raise ConfigError(f"N must be >= 1, got {self.N}")
        pid = self.policy.get("id") if isinstance(self.policy, dict) else None
        if pid not in POLICIES:
            raise ConfigError(f"unknown policy id {pid!r}")
        aid = self.adversary.get("id") if isinstance(self.adversary, dict) else None
        if aid not in ADVERSARIES:
            raise ConfigError(f"unknown adversary id {aid!r}")
        unknown = set(self.constants) - {"v", "ell", "g", "p"}
        if unknown:
            raise ConfigError(f"unknown constant overrides {sorted(unknown)}")
        fmt = self.output.get("format", "both")
        if fmt not in FORMATS:
            raise ConfigError(f"output format must be one of {FORMATS}, got {fmt!r}")
        NoiseKind(**self.noise_spec())

    # --- derived objects ---------------------------------------------------

    def noise_spec(self):
        spec = {"kind": "gaussian", "R": self.R}
        spec.update(self.noise)
        return spec

    def sampler_config(self):
        c = self.constants
        return SamplerConfig(
            R=float(self.R), delta=float(self.delta), d=int(self.d),
            horizon=int(self.T) if self.v_mode == "fixed" else None,
            v_const=c.get("v"), ell_const=c.get("ell"), g_const=c.get("g"), p_const=c.get("p"),
        )

    def make_policy(self):
        return make_policy(self.policy)

    def make_adversary(self):
        return make_adversary(self.adversary, self.d, self.N)

    def mu_star(self):
        if self.mu is not None:
            mu = np.asarray(self.mu, dtype=np.float64)
            if mu.shape != (self.d,):
                raise ConfigError(f"mu has shape {mu.shape}, expected ({self.d},)")
            return mu
        if self.adversary.get("id") == "greedy-trap":
            return greedy_trap_mu(self.d)
        g = instance_generator(self.seed).standard_normal(self.d)
        return self.mu_norm * g / np.linalg.norm(g)

    def environment(self):
        return LinearEnvironment(self.mu_star(), NoiseKind(**self.noise_spec()))

    # --- serialization -----------------------------------------------------

    def to_dict(self):
        out = asdict(self)
        if isinstance(out["mu"], np.ndarray):
            out["mu"] = out["mu"].tolist()
        return out

    def semantic_dict(self):
        out = self.to_dict()
        for key in _NON_SEMANTIC:
            out.pop(key, None)
        return out

    def digest(self):
        blob = json.dumps(self.semantic_dict(), sort_keys=True, separators=(",", ":"),
                          default=_jsonable)
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()

    def replace(self, **changes):
        data = copy.deepcopy(self.to_dict())
        data.update(changes)
        return ExperimentConfig.from_dict(data)

    @classmethod
    def from_dict(cls, data):
        data = dict(data or {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if isinstance(data.get("policy"), str):
            data["policy"] = {"id": data["policy"]}
        if isinstance(data.get("adversary"), str):
            data["adversary"] = {"id": data["adversary"]}
        if isinstance(data.get("noise"), str):
            data["noise"] = {"kind": data["noise"]}
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"not serializable: {type(obj).__name__}")


def load_config(path, overrides=None):
    """Read a YAML config file and apply ``overrides`` (CLI flags win)."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise OutputError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config {path} is not valid YAML: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping at top level")
    data.update({k: v for k, v in (overrides or {}).items() if v is not None})
    return ExperimentConfig.from_dict(data)


def dump_config(cfg, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        yaml.safe_dump(cfg.to_dict(), fh, sort_keys=True)


def is_infinite(n):
    return n is None or (isinstance(n, float) and math.isinf(n))
