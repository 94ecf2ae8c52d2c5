"""Experiment configuration: dataclass defaults < key-value file < environment < flags."""

import dataclasses
import os
from dataclasses import dataclass, fields

ENV_PREFIX = "PRIVCTRL_"


def _default_grid():
    return tuple(round(0.02 * k, 2) for k in range(9))


@dataclass(frozen=True)
class ExperimentConfig:
    plant: str = "batch-reactor"
    T: int = 20
    input_range: tuple = (-5.0, 5.0)
    x0_range: tuple = (-2.5, 2.5)
    key_range: tuple = (-1.0, 1.0)
    rho: float = 0.9
    d_max: float = 0.0
    d_max_grid: tuple = dataclasses.field(default_factory=_default_grid)
    trials: int = 100
    seed: int = 0
    trial: int = 0
    beta: float = 0.5
    delta_alpha: float = 0.2
    T_inj: int = 10
    T_a: int = 400
    T_end: int = 500
    outdir: str = "out"
    jobs: int = 1

    def __post_init__(self):
        for name in ("input_range", "x0_range", "key_range"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name} must satisfy lo < hi, got {(lo, hi)}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.T < 1:
            raise ValueError("T must be positive")
        if any(d < 0 for d in self.d_max_grid) or self.d_max < 0:
            raise ValueError("disturbance amplitudes must be non-negative")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


KEYS = tuple(f.name for f in fields(ExperimentConfig))
_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def coerce(key, value):
    """Parse a string value for config field ``key``."""
    if key not in _TYPES:
        raise KeyError(f"unknown config key {key!r}; known keys: {', '.join(KEYS)}")
    if not isinstance(value, str):
        return value
    kind = _TYPES[key]
    if kind in (int, "int"):
        return int(value)
    if kind in (float, "float"):
        return float(value)
    if kind in (tuple, "tuple"):
        parts = [p for p in value.replace(" ", "").split(",") if p]
        return tuple(float(p) for p in parts)
    return value


def from_sources(file_values=None, env=None, flags=None):
    """Merge config sources; later sources win. Values may be strings."""
    merged = {}
    for source in (file_values or {}, env_values(env), flags or {}):
        for key, value in source.items():
            if value is None:
                continue
            merged[key] = coerce(key, value)
    return ExperimentConfig(**merged)


def env_values(env=None):
    env = os.environ if env is None else env
    out = {}
    for key in KEYS:
        name = ENV_PREFIX + key.upper()
        if name in env:
            out[key] = env[name]
    return out


def to_mapping(config):
    out = {}
    for key in KEYS:
        value = getattr(config, key)
        if isinstance(value, tuple):
            value = ",".join(repr(float(v)) for v in value)
        out[key] = value
    return out
