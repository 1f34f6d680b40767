"""Experiment configuration: dataclass sections loaded strictly from YAML/JSON."""

from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, get_type_hints

import yaml

KINDS = ("heat_periodic", "heat_dirichlet", "burgers2d", "convergence", "verify")


class ConfigError(ValueError):
    """Invalid or unknown configuration content."""


@dataclass
class HeatSection:
    # sine-mode benchmark
    nu: float = 0.01
    dt: float = 0.01
    m_s: int = 100
    n_mc: int = 100
    t_final: float = 0.1
    mode: int = 1
    phase: str = "sin"


@dataclass
class DirichletSection:
    domain: tuple[float, float] = (-1.0, 1.0)
    nu: float = 0.1
    dt: float = 0.01
    dx: float = 0.01
    n_interior: int = 10
    n_boundary: int = 100
    tau: float = 0.001
    boundary_margin: float = 0.1
    t_final: float = 0.1
    bridge_test: bool = True


@dataclass
class BurgersSection:
    nu: float = 0.001
    dt: float = 0.02
    dx: float = 0.04
    n_interior: int = 10
    n_boundary: int = 100
    tau: float = 0.002
    interior_zone: tuple[tuple[float, float], tuple[float, float]] = ((-0.8, 0.8), (-0.8, 0.8))
    t_final: float = 2.0
    forcing: str = "sine"
    bridge_test: bool = True
    snapshot_times: list[float] = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0])


@dataclass
class ConvergenceSection:
    """dt = dx = 1/n sweep; default sweep."""

    problem: str = "heat_periodic"
    nu: float = 0.1
    t_final: float = 0.1
    mode: int = 1
    phase: str = "cos"
    n_values: list[int] = field(default_factory=lambda: [50, 100, 200, 400])
    n_mc_values: list[int] = field(default_factory=lambda: [10, 20, 40, 80])
    # heat_dirichlet only: N_b = boundary_ratio * N, tau = dt / substeps
    boundary_ratio: int = 10
    substeps: int = 10


@dataclass
class VerifySection:
    m_s: int = 64
    nu: float = 0.1
    dt: float = 0.01
    sample_m_s: int = 32
    n_samples: int = 100
    n_random: int = 100
    unbiased_m_s: int = 8
    unbiased_samples: int = 100_000


@dataclass
class ExperimentConfig:
    kind: str = "heat_periodic"
    seed: int = 0
    output_dir: str = "out"
    repetitions: int = 20
    heat: HeatSection = field(default_factory=HeatSection)
    dirichlet: DirichletSection = field(default_factory=DirichletSection)
    burgers: BurgersSection = field(default_factory=BurgersSection)
    convergence: ConvergenceSection = field(default_factory=ConvergenceSection)
    verify: VerifySection = field(default_factory=VerifySection)

    def validate(self) -> "ExperimentConfig":
        if self.kind not in KINDS:
            raise ConfigError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.repetitions < 2:
            raise ConfigError("repetitions must be >= 2")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.kind == "convergence":
            c = self.convergence
            if not c.n_values or not c.n_mc_values:
                raise ConfigError("convergence sweeps need nonempty n_values and n_mc_values")
            if len(c.n_values) < 3:
                raise ConfigError("slope fits need at least 3 n values")
            if c.problem not in ("heat_periodic", "heat_dirichlet"):
                raise ConfigError(f"unsupported convergence problem {c.problem!r}")
        return self

    def as_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        """Digest of every field that affects results (the output directory does not)."""
        d = self.as_dict()
        d.pop("output_dir")
        blob = json.dumps(d, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _coerce(tp, value, where: str):
    origin = getattr(tp, "__origin__", None)
    if dataclasses.is_dataclass(tp):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping")
        return _build(tp, value, where)
    if origin is tuple:
        if not isinstance(value, (list, tuple)) or len(value) != len(tp.__args__):
            raise ConfigError(f"{where}: expected a list of length {len(tp.__args__)}")
        return tuple(_coerce(a, v, f"{where}[{i}]") for i, (a, v) in enumerate(zip(tp.__args__, value)))
    if origin is list:
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list")
        (arg,) = tp.__args__
        return [_coerce(arg, v, f"{where}[{i}]") for i, v in enumerate(value)]
    if tp is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean")
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    raise ConfigError(f"{where}: unsupported field type {tp}")


def _build(cls, data: dict, where: str):
    hints = get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where or 'config'}: unknown keys {unknown}")
    kwargs = {
        k: _coerce(hints[k], v, f"{where}.{k}" if where else k) for k, v in data.items()
    }
    return cls(**kwargs)


def config_from_dict(data: dict | None) -> ExperimentConfig:
    return _build(ExperimentConfig, data or {}, "").validate()


def load_config(path: str | Path) -> ExperimentConfig:
    """Read a YAML (or JSON, which YAML parses) document into an :class:`ExperimentConfig`."""
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML/JSON: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return config_from_dict(data)
