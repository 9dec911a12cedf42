"""Experiment configuration: a single flat JSON document."""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields

from .errors import ConfigError

MODES = ("paper-eps", "direct-t")
ARMS = ("heavy", "gdm", "noise")


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: float
    M: int
    N: int
    s0: float = 1.0
    c_N: float | None = None
    mode: str = "paper-eps"
    eps_a: float | None = None
    eps_b: float | None = None
    t_target: float | None = None
    replicates: int = 100
    master_seed: int = 0
    workers: int = 1
    output_path: str = "out"
    arm: str = "heavy"
    save_spectra: bool = False

    def __post_init__(self):
        if not 2.0 < self.alpha < 4.0:
            raise ConfigError(f"alpha must lie in (2, 4), got {self.alpha}")
        if not (isinstance(self.M, int) and isinstance(self.N, int)) or not 1 <= self.M < self.N:
            raise ConfigError(f"need integers 1 <= M < N, got M={self.M}, N={self.N}")
        if self.c_N is not None and not math.isclose(self.c_N, self.M / self.N, rel_tol=1e-12):
            raise ConfigError(f"c_N={self.c_N} disagrees with M/N={self.M / self.N}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.arm not in ARMS:
            raise ConfigError(f"arm must be one of {ARMS}, got {self.arm!r}")
        if self.mode == "direct-t":
            if self.t_target is None or not 0 < self.t_target < 1:
                raise ConfigError("direct-t mode needs t_target in (0, 1)")
            if self.eps_a is not None:
                raise ConfigError("eps_a and t_target are mutually exclusive")
        elif self.t_target is not None:
            raise ConfigError("t_target is only allowed in direct-t mode")
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")

    @property
    def c(self) -> float:
        return self.M / self.N

    def to_dict(self) -> dict:
        return asdict(self)

    def replace(self, **kw) -> "ExperimentConfig":
        d = self.to_dict()
        d.update({k: v for k, v in kw.items() if v is not None})
        return config_from_dict(d)


def config_from_dict(d: dict) -> ExperimentConfig:
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    try:
        return ExperimentConfig(**d)
    except TypeError as e:
        raise ConfigError(str(e)) from e


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            d = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e})") from e
    if not isinstance(d, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return config_from_dict(d)
