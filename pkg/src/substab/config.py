"""Experiment configuration: strict YAML parsing with benchmark defaults.

Unknown keys are rejected so typos never silently fall back to defaults.
"""
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from .errors import ConfigError
from .lqr import CostMatrices
from .zo import EstimationParams


@dataclass(frozen=True)
class SystemSpec:
    kind: str = "cartpole"  # cartpole | pendulum | random | spiked
    target_dim: int = 30  # ambient dimension after augmentation (cartpole/pendulum)
    inputs: int = 3  # random systems only
    seed: int = 0
    # spiked systems only
    unstable_count: int = 2
    unstable_modulus: float = 1.5
    stable_modulus: float = 0.9
    jordan: bool = False


@dataclass(frozen=True)
class SubspaceSpec:
    horizon: int = 40  # T, adjoint samples
    ell: int = None  # None -> number of unstable modes of the built system
    ell_auto: bool = False  # use the singular-gap diagnostic instead
    horizon_sweep: tuple = ()  # non-empty enables the distance-vs-T sweep mode


@dataclass(frozen=True)
class AnnealSpec:
    gamma0: float = 0.1
    xi: float = 0.9
    inner_steps: int = 10
    step_size: float = 1e-3
    baseline_step_size: float = None  # None -> step_size (full-state runs)
    max_outer_iters: int = 3000
    alpha_max: float = 1.0
    final_phase_iters: int = 1  # extra gamma = 1 polishing iterations
    rho_bar: float = None  # None -> filled from the true system (recorded)


@dataclass(frozen=True)
class EvaluationSpec:
    repeats: int = 5
    master_seed: int = 0
    baseline: bool = True
    out_dir: str = "out"
    name: str = None  # output subdirectory; None -> derived from the system


@dataclass(frozen=True)
class ExperimentConfig:
    system: SystemSpec = field(default_factory=SystemSpec)
    subspace: SubspaceSpec = field(default_factory=SubspaceSpec)
    anneal: AnnealSpec = field(default_factory=AnnealSpec)
    estimation: EstimationParams = field(default_factory=EstimationParams)
    evaluation: EvaluationSpec = field(default_factory=EvaluationSpec)

    def anneal_config(self, state_dim, input_dim, rho_bar):
        from .anneal import AnnealConfig

        return AnnealConfig(
            gamma0=self.anneal.gamma0,
            xi=self.anneal.xi,
            inner_steps=self.anneal.inner_steps,
            step_size=self.anneal.step_size,
            max_outer_iters=self.anneal.max_outer_iters,
            alpha_max=self.anneal.alpha_max,
            final_phase_iters=self.anneal.final_phase_iters,
            rho_bar=rho_bar,
            est=self.estimation,
            costs=CostMatrices.identity(state_dim, input_dim),
        )


_SECTIONS = {
    "system": SystemSpec,
    "subspace": SubspaceSpec,
    "anneal": AnnealSpec,
    "estimation": EstimationParams,
    "evaluation": EvaluationSpec,
}

_FIELD_ALIASES = {
    # short names used in configs -> dataclass field names
    ("subspace", "T"): "horizon",
    ("estimation", "r"): "smoothing_radius",
    ("estimation", "n_s"): "n_grad_rollouts",
    ("estimation", "n_c"): "n_cost_rollouts",
    ("estimation", "tau"): "horizon",
    ("estimation", "mu0"): "x0_radius",
    ("anneal", "N"): "inner_steps",
    ("anneal", "eta"): "step_size",
    ("anneal", "eta_baseline"): "baseline_step_size",
}


def _coerce(section, key, ftype, value):
    """Cast scalars to the annotated field type (YAML reads '1.0e6' as str)."""
    if value is None or ftype not in (int, float, bool):
        return value
    if isinstance(value, bool) is not (ftype is bool):
        raise ConfigError(f"key '{section}.{key}' must be {ftype.__name__}")
    try:
        cast = ftype(value)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"key '{section}.{key}': {exc}") from exc
    if ftype is int and float(value) != cast:
        raise ConfigError(f"key '{section}.{key}' must be an integer")
    return cast


def _build_section(section_name, cls, raw):
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"section '{section_name}' must be a mapping")
    known = {f.name: f.type for f in fields(cls)}
    kwargs = {}
    for key, value in raw.items():
        name = _FIELD_ALIASES.get((section_name, key), key)
        if name not in known:
            raise ConfigError(f"unknown key '{section_name}.{key}'")
        if name in kwargs:
            raise ConfigError(f"duplicate key '{section_name}.{key}' (alias clash)")
        kwargs[name] = _coerce(section_name, key, known[name], value)
    if "horizon_sweep" in kwargs and kwargs["horizon_sweep"] is not None:
        kwargs["horizon_sweep"] = tuple(int(t) for t in kwargs["horizon_sweep"])
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid section '{section_name}': {exc}") from exc


def _validate(cfg):
    sys_kinds = ("cartpole", "pendulum", "random", "spiked")
    if cfg.system.kind not in sys_kinds:
        raise ConfigError(f"system.kind must be one of {sys_kinds}")
    if not 0 < cfg.anneal.gamma0 < 1:
        raise ConfigError("anneal.gamma0 must lie in (0,1)")
    if not 0 < cfg.anneal.xi < 1:
        raise ConfigError("anneal.xi must lie in (0,1)")
    for label, value in [
        ("subspace.horizon", cfg.subspace.horizon),
        ("anneal.inner_steps", cfg.anneal.inner_steps),
        ("anneal.max_outer_iters", cfg.anneal.max_outer_iters),
        ("evaluation.repeats", cfg.evaluation.repeats),
    ]:
        if int(value) < 1:
            raise ConfigError(f"{label} must be >= 1")
    if cfg.subspace.ell is not None and cfg.subspace.ell < 1:
        raise ConfigError("subspace.ell must be >= 1")
    if cfg.anneal.step_size <= 0:
        raise ConfigError("anneal.step_size must be positive")
    if cfg.anneal.baseline_step_size is not None and cfg.anneal.baseline_step_size <= 0:
        raise ConfigError("anneal.baseline_step_size must be positive")
    return cfg


def config_from_dict(data):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top-level config must be a mapping")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown section(s): {sorted(unknown)}")
    sections = {
        name: _build_section(name, cls, data.get(name)) for name, cls in _SECTIONS.items()
    }
    return _validate(ExperimentConfig(**sections))


def parse_config(path):
    """Load and validate a YAML experiment config; empty file means defaults."""
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc
    return config_from_dict(data)
