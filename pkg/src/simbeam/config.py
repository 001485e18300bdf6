"""Experiment configuration: JSON schema, validation, and file round-trip.

The file layout mirrors the dataclasses below::

    {
      "system":    {"K", "M", "N", "N_r", "L", "b", "f_carrier_hz",
                    "thickness_wavelengths", "d_x_wavelengths",
                    "d_y_wavelengths", "lattice_step"},
      "power":     {"P_max_dBm", "sigma2_dBm"},
      "users":     {"r_in_m", "r_out_m"},
      "optimizer": {"rate_tol", "max_outer_iters", "power_tol",
                    "admm_tol", "admm_max_iters", "beta_penalty"},
      "run":       {"seeds", "n_mc", "output_dir"}
    }

``b`` is an int or the string "continuous"; ``beta_penalty`` is a float or
"auto".  dBm fields are converted to watts once, at load time.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import os
import tempfile
from dataclasses import dataclass, field

from .channel import dbm_to_watts
from .exceptions import ConfigError


@dataclass
class SystemConfig:
    K: int = 5
    M: int = 5
    N: int = 49
    N_r: int = 7
    L: int = 3
    b: int | None = 2
    f_carrier_hz: float = 2.0e9
    thickness_wavelengths: float = 5.0
    d_x_wavelengths: float = 0.5
    d_y_wavelengths: float = 0.5
    lattice_step: str = "half"


@dataclass
class PowerConfig:
    P_max_dBm: float = 30.0
    sigma2_dBm: float = -80.0

    @property
    def P_max_watts(self) -> float:
        return dbm_to_watts(self.P_max_dBm)

    @property
    def sigma2_watts(self) -> float:
        return dbm_to_watts(self.sigma2_dBm)


@dataclass
class UserConfig:
    r_in_m: float = 60.0
    r_out_m: float = 80.0


@dataclass
class OptimizerSettings:
    rate_tol: float = 1e-4
    max_outer_iters: int = 50
    power_tol: float = 1e-5
    admm_tol: float = 1e-5
    admm_max_iters: int = 100
    beta_penalty: float | None = None  # None = "auto"


@dataclass
class RunConfig:
    seeds: list = field(default_factory=lambda: list(range(1, 21)))
    n_mc: int = 2000
    output_dir: str = "out"


@dataclass
class ExperimentConfig:
    system: SystemConfig = field(default_factory=SystemConfig)
    power: PowerConfig = field(default_factory=PowerConfig)
    users: UserConfig = field(default_factory=UserConfig)
    optimizer: OptimizerSettings = field(default_factory=OptimizerSettings)
    run: RunConfig = field(default_factory=RunConfig)


def default_config() -> ExperimentConfig:
    return ExperimentConfig()


_SECTIONS = {
    "system": SystemConfig,
    "power": PowerConfig,
    "users": UserConfig,
    "optimizer": OptimizerSettings,
    "run": RunConfig,
}


def _parse_section(name: str, cls, data: dict):
    fields = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in fields:
            raise ConfigError(f"unknown field {name}.{key}")
        kwargs[key] = value
    # every field must be present in the file: explicit beats defaulted
    for key in fields:
        if key not in kwargs:
            raise ConfigError(f"missing required field {name}.{key}")
    return cls(**kwargs)


def _validate(cfg: ExperimentConfig) -> ExperimentConfig:
    sys_ = cfg.system
    if sys_.b == "continuous":
        sys_.b = None
    if sys_.b is not None and (not isinstance(sys_.b, int) or sys_.b < 1):
        raise ConfigError(f"system.b must be a positive int or \"continuous\", got {sys_.b!r}")
    if sys_.K != sys_.M:
        raise ConfigError(f"system.M must equal system.K (got M={sys_.M}, K={sys_.K})")
    for name, value in (("system.K", sys_.K), ("system.N", sys_.N),
                        ("system.N_r", sys_.N_r), ("system.L", sys_.L)):
        if not isinstance(value, int) or value < 1:
            raise ConfigError(f"{name} must be a positive int, got {value!r}")
    if sys_.N % sys_.N_r != 0:
        raise ConfigError(f"system.N_r must divide system.N (N={sys_.N}, N_r={sys_.N_r})")
    if sys_.f_carrier_hz <= 0:
        raise ConfigError("system.f_carrier_hz must be positive")
    if sys_.lattice_step not in ("half", "full"):
        raise ConfigError(f"system.lattice_step must be 'half' or 'full', got {sys_.lattice_step!r}")
    if not 0 < cfg.users.r_in_m < cfg.users.r_out_m:
        raise ConfigError("users must satisfy 0 < r_in_m < r_out_m")
    opt = cfg.optimizer
    if opt.beta_penalty == "auto":
        opt.beta_penalty = None
    if opt.beta_penalty is not None and not opt.beta_penalty > 0:
        raise ConfigError("optimizer.beta_penalty must be positive or \"auto\"")
    if opt.max_outer_iters < 1 or opt.admm_max_iters < 1:
        raise ConfigError("optimizer iteration caps must be >= 1")
    run = cfg.run
    if not isinstance(run.seeds, list) or not run.seeds:
        raise ConfigError("run.seeds must be a non-empty list of ints")
    if run.n_mc < 2:
        raise ConfigError("run.n_mc must be >= 2")
    return cfg


def config_from_dict(data: dict) -> ExperimentConfig:
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    for key in data:
        if key not in _SECTIONS:
            raise ConfigError(f"unknown section {key}")
    sections = {}
    for name, cls in _SECTIONS.items():
        if name not in data:
            raise ConfigError(f"missing required section {name}")
        if not isinstance(data[name], dict):
            raise ConfigError(f"section {name} must be an object")
        sections[name] = _parse_section(name, cls, data[name])
    return _validate(ExperimentConfig(**sections))


def config_to_dict(cfg: ExperimentConfig) -> dict:
    data = dataclasses.asdict(cfg)
    if data["system"]["b"] is None:
        data["system"]["b"] = "continuous"
    if data["optimizer"]["beta_penalty"] is None:
        data["optimizer"]["beta_penalty"] = "auto"
    return data


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(cfg: ExperimentConfig, path) -> None:
    atomic_write_text(json.dumps(config_to_dict(cfg), indent=2) + "\n", path)


def config_hash(cfg: ExperimentConfig) -> str:
    canonical = json.dumps(config_to_dict(cfg), sort_keys=True)
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def atomic_write_text(text: str, path) -> None:
    """Write via a sibling temp file and rename, so partial files never land."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
