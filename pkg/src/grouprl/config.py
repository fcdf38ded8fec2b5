"""Experiment configuration: YAML file with nested sections, validated on load.

An empty file yields the full default setting (five groups of ten users,
p=3, sigma_s=sigma_r=1, sigma_b=0.01, zeta_a=zeta_c=0.01, six discount
factors, T in {42, 100}, 5000-step evaluation with 1000 burn-in).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml

from .sim import DEFAULT_BASIC_BETAS
from .trainers import REGIMES, ClusterParams, LoopParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PopulationConfig:
    M: int = 5
    N_m: int = 10
    p: int = 3
    q: int = 4
    basic_betas: tuple[tuple[float, ...], ...] = DEFAULT_BASIC_BETAS
    sigma_s: float = 1.0
    sigma_r: float = 1.0
    sigma_b: float = 0.01
    # None means the identity matrix
    Sigma: tuple[tuple[float, ...], ...] | None = None

    @property
    def N(self) -> int:
        return self.M * self.N_m

    def sigma_matrix(self) -> np.ndarray:
        return np.eye(self.p) if self.Sigma is None else np.array(self.Sigma, dtype=float)


@dataclass(frozen=True)
class GridConfig:
    T_list: tuple[int, ...] = (42, 100)
    gamma_list: tuple[float, ...] = (0.0, 0.2, 0.4, 0.6, 0.8, 0.95)
    methods: tuple[str, ...] = REGIMES
    K_list: tuple[int, ...] = (3, 7)
    seeds: tuple[int, ...] = tuple(range(10))


@dataclass(frozen=True)
class LearningConfig:
    zeta_a: float = 0.01
    zeta_c: float = 0.01
    outer_tol: float = 1e-4
    max_outer_iters: int = 50
    opt_tol: float = 1e-6
    max_opt_iters: int = 500
    optimizer: str = "newton"

    def loop_params(self) -> LoopParams:
        return LoopParams(self.outer_tol, self.max_outer_iters, self.opt_tol, self.max_opt_iters, self.optimizer)


@dataclass(frozen=True)
class ClusterConfig:
    restarts: int = 10
    tol: float = 1e-8
    max_iters: int = 300
    standardize: bool = False

    def params(self) -> ClusterParams:
        return ClusterParams(self.restarts, self.tol, self.max_iters, self.standardize)


@dataclass(frozen=True)
class EvaluationConfig:
    horizon: int = 5000
    burn_in: int = 1000


@dataclass(frozen=True)
class OutputConfig:
    dir: str = "results"


@dataclass(frozen=True)
class ExperimentConfig:
    population: PopulationConfig = field(default_factory=PopulationConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    learning: LearningConfig = field(default_factory=LearningConfig)
    cluster: ClusterConfig = field(default_factory=ClusterConfig)
    evaluation: EvaluationConfig = field(default_factory=EvaluationConfig)
    output: OutputConfig = field(default_factory=OutputConfig)

    def validate(self) -> "ExperimentConfig":
        pop, grid = self.population, self.grid
        if pop.p < 3:
            raise ConfigError("population.p must be >= 3")
        if pop.q != pop.p + 1:
            raise ConfigError(f"q must equal p+1 (p={pop.p}, q={pop.q})")
        if pop.M < 1 or pop.N_m < 1:
            raise ConfigError("population.M and population.N_m must be positive")
        if len(pop.basic_betas) != pop.M:
            raise ConfigError(f"population.basic_betas has {len(pop.basic_betas)} rows, expected M={pop.M}")
        for i, row in enumerate(pop.basic_betas):
            if len(row) != 14:
                raise ConfigError(f"population.basic_betas[{i}] has {len(row)} entries, expected 14")
        for name in ("sigma_s", "sigma_r", "sigma_b"):
            if getattr(pop, name) < 0:
                raise ConfigError(f"population.{name} must be non-negative")
        if pop.Sigma is not None:
            from .sim import ConfigurationError, validate_sigma

            try:
                validate_sigma(pop.Sigma, pop.p)
            except ConfigurationError as exc:
                raise ConfigError(f"population.Sigma: {exc}") from None
        for g in grid.gamma_list:
            if not 0.0 <= g < 1.0:
                raise ConfigError(f"grid.gamma_list: gamma must lie in [0, 1), got {g}")
        for T in grid.T_list:
            if T < 1:
                raise ConfigError(f"grid.T_list: T must be positive, got {T}")
        for m in grid.methods:
            if m not in REGIMES:
                raise ConfigError(f"grid.methods: unknown method {m!r} (choose from {', '.join(REGIMES)})")
        for K in grid.K_list:
            if not 1 <= K <= pop.N:
                raise ConfigError(f"grid.K_list: K={K} outside [1, N={pop.N}]")
        if len(set(grid.seeds)) != len(grid.seeds):
            raise ConfigError("grid.seeds contains duplicates")
        if self.learning.optimizer not in ("newton", "gradient"):
            raise ConfigError("learning.optimizer must be 'newton' or 'gradient'")
        if self.learning.zeta_a < 0 or self.learning.zeta_c < 0:
            raise ConfigError("learning.zeta_a and learning.zeta_c must be non-negative")
        ev = self.evaluation
        if not 0 <= ev.burn_in < ev.horizon:
            raise ConfigError(f"evaluation.burn_in must lie in [0, horizon), got {ev.burn_in}")
        return self

    def to_dict(self) -> dict:
        def plain(obj):
            if isinstance(obj, tuple):
                return [plain(v) for v in obj]
            return obj

        return {
            f.name: {k: plain(v) for k, v in dataclasses.asdict(getattr(self, f.name)).items()}
            for f in fields(self)
        }


_SECTION_TYPES = {
    "population": PopulationConfig,
    "grid": GridConfig,
    "learning": LearningConfig,
    "cluster": ClusterConfig,
    "evaluation": EvaluationConfig,
    "output": OutputConfig,
}


def _coerce(section: str, cls, values: dict):
    if not isinstance(values, dict):
        raise ConfigError(f"section {section!r} must be a mapping")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in values.items():
        if key not in known:
            raise ConfigError(f"unknown field {section}.{key}")
        default = getattr(cls(), key)
        try:
            kwargs[key] = _convert(value, default)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"{section}.{key}: {exc}") from None
    return cls(**kwargs)


def _convert(value, default):
    if value is None:
        return None
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise TypeError(f"expected a boolean, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise TypeError(f"expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError(f"expected a number, got {value!r}")
        return float(value)
    if isinstance(default, str):
        return str(value)
    if isinstance(default, tuple) or default is None:
        if not isinstance(value, (list, tuple)):
            raise TypeError(f"expected a list, got {value!r}")
        sample = default[0] if default else None
        return tuple(_convert(v, sample) if sample is not None else _list_item(v) for v in value)
    return value


def _list_item(v):
    if isinstance(v, (list, tuple)):
        return tuple(float(x) for x in v)
    return v


def config_from_dict(data: dict | None) -> ExperimentConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("config root must be a mapping of sections")
    sections = {}
    for name, values in data.items():
        if name not in _SECTION_TYPES:
            raise ConfigError(f"unknown section {name!r}")
        sections[name] = _coerce(name, _SECTION_TYPES[name], values or {})
    return ExperimentConfig(**sections).validate()


def load_config(path: str | Path | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig().validate()
    text = Path(path).read_text()
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"cannot parse {path}{where}: {getattr(exc, 'problem', exc)}") from None
    return config_from_dict(data)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=False, default_flow_style=None))
