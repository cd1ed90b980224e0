"""Experiment configuration: YAML on disk, validated dataclasses in memory, named presets."""

import copy
import itertools
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from ..core import RngStream
from ..exceptions import ConfigError
from ..models import (
    BlrModel,
    GaussianDataModel,
    MixtureModel,
    csv_load_blr,
    generate_blr_data,
    generate_gaussian_data,
    generate_mixture_data,
)
from ..samplers import SAMPLERS

# stream key reserved for dataset generation, disjoint from (cell, chain) keys
DATA_STREAM = 2**31 - 1
MODEL_KINDS = ("gaussian", "mixture", "blr")
OBSERVABLES = ("variance", "mean")


@dataclass
class ModelSpec:
    kind: str = "mixture"
    n_data: int = 1000
    dim: int = 2
    theta_star: list = None
    eta: float = 0.0
    omega: float = 1.0
    prior_var: float = 100.0
    csv: str = None

    def validate(self):
        if self.kind not in MODEL_KINDS:
            raise ConfigError(f"model.kind must be one of {MODEL_KINDS}, got {self.kind!r}")
        if self.csv is None and (not isinstance(self.n_data, int) or self.n_data < 1):
            raise ConfigError("model.n_data must be a positive integer")
        if self.kind == "blr" and self.csv is None and self.dim < 2:
            raise ConfigError("model.dim must be >= 2 for blr (constant column included)")
        if self.kind == "mixture" and self.theta_star is not None and len(self.theta_star) != 2:
            raise ConfigError("model.theta_star must have two entries for the mixture")
        if self.omega <= 0 or self.prior_var <= 0:
            raise ConfigError("model.omega and model.prior_var must be positive")


@dataclass
class ReferenceSpec:
    h: float = 0.01
    samples: int = 1_000_000
    chains: int = 100
    burn_in: int = 2000
    thin: int = 1
    jitter: float = 0.1

    def validate(self):
        if self.jitter < 0:
            raise ConfigError("reference.jitter must be non-negative")
        if self.h <= 0 or self.samples < 1 or self.chains < 1 or self.burn_in < 0 or self.thin < 1:
            raise ConfigError("reference settings must be positive (burn_in may be zero)")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce a reference run and a sweep.

    ``grid`` holds lists ``h`` and ``n``; cells are their product. ``n`` values
    above the dataset size are rejected. Per-method stepsizes are
    ``h * stepsize_multipliers.get(method, 1)``; ``method_params`` passes
    extra sampler arguments such as ``gamma``.
    """

    name: str = "experiment"
    model: ModelSpec = field(default_factory=ModelSpec)
    methods: list = field(default_factory=lambda: ["nogin", "sgld"])
    grid: dict = field(default_factory=lambda: {"h": [0.05], "n": [10]})
    chains: int = 1
    epochs: float = 10.0
    seed: int = 0
    out: str = "results"
    theta0: list = None
    observables: list = field(default_factory=lambda: ["variance"])
    first_checkpoint: float = 1.0
    checkpoints_per_decade: int = 32
    stepsize_multipliers: dict = field(default_factory=dict)
    method_params: dict = field(default_factory=dict)
    reference: ReferenceSpec = field(default_factory=ReferenceSpec)

    def validate(self):
        self.model.validate()
        self.reference.validate()
        if not self.methods:
            raise ConfigError("methods must list at least one sampler")
        for m in self.methods:
            if m not in SAMPLERS:
                raise ConfigError(f"unknown method {m!r}; choose from {sorted(SAMPLERS)}")
        for key in ("h", "n"):
            if key not in self.grid or not self.grid[key]:
                raise ConfigError(f"grid.{key} must be a non-empty list")
        if any(not float(h) > 0 for h in self.grid["h"]):
            raise ConfigError("grid.h values must be positive")
        if any(not isinstance(n, int) or n < 1 for n in self.grid["n"]):
            raise ConfigError("grid.n values must be positive integers")
        if self.model.csv is None and max(self.grid["n"]) > self.model.n_data:
            raise ConfigError(f"grid.n exceeds the dataset size {self.model.n_data}")
        if self.chains < 1 or not self.epochs > 0:
            raise ConfigError("chains must be >= 1 and epochs > 0")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for obs in self.observables:
            if obs not in OBSERVABLES:
                raise ConfigError(f"observable must be one of {OBSERVABLES}, got {obs!r}")
        if self.checkpoints_per_decade < 1 or not self.first_checkpoint > 0:
            raise ConfigError("checkpoint settings must be positive")
        for m, mult in self.stepsize_multipliers.items():
            if m not in SAMPLERS or not float(mult) > 0:
                raise ConfigError(f"bad stepsize multiplier for {m!r}")
        for m, params in self.method_params.items():
            if m not in SAMPLERS or not isinstance(params, dict):
                raise ConfigError(f"method_params.{m} must be a mapping for a known method")
        return self

    def cells(self):
        """``(index, h, n)`` for each grid cell in a fixed order."""
        pairs = itertools.product(self.grid["h"], self.grid["n"])
        return [(i, float(h), int(n)) for i, (h, n) in enumerate(pairs)]

    def stepsize(self, method, h):
        return float(h) * float(self.stepsize_multipliers.get(method, 1.0))

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("configuration must be a mapping")
        data = copy.deepcopy(data)
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        model = data.pop("model", {}) or {}
        reference = data.pop("reference", {}) or {}
        try:
            cfg = cls(model=ModelSpec(**model), reference=ReferenceSpec(**reference), **data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None
        return cfg.validate()


def load_config(source):
    """Load a config from a YAML path or a preset name."""
    if source in PRESETS:
        return preset(source)
    path = Path(source)
    if not path.exists():
        raise ConfigError(f"config file {source!r} not found and not a preset ({sorted(PRESETS)})")
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {source}: {exc}") from None
    return ExperimentConfig.from_dict(data or {})


def dump_config(cfg):
    return yaml.safe_dump(cfg.to_dict(), sort_keys=True, default_flow_style=None)


def save_config(cfg, path):
    Path(path).write_text(dump_config(cfg), encoding="utf-8")


def build_model(spec, seed):
    """Instantiate the target model; synthetic data come from a stream derived from ``seed``."""
    rng = RngStream(seed, DATA_STREAM)
    if spec.kind == "gaussian":
        data = generate_gaussian_data(rng, spec.n_data, spec.eta, spec.omega, dim=spec.dim)
        return GaussianDataModel(data, spec.omega)
    if spec.kind == "mixture":
        star = (0.5, 0.0) if spec.theta_star is None else spec.theta_star
        return MixtureModel(generate_mixture_data(rng, spec.n_data, star))
    if spec.csv is not None:
        X, labels = csv_load_blr(spec.csv)
    else:
        X, labels, _ = generate_blr_data(rng, spec.n_data, spec.dim, spec.theta_star)
    return BlrModel(X, labels, spec.prior_var)


PRESETS = {
    "gmix-paper": {
        "name": "gmix-paper",
        "model": {"kind": "mixture", "n_data": 1000, "dim": 2, "theta_star": [0.5, 0.0]},
        "methods": ["nogin", "sgld", "msgld", "sghmc", "sgnht", "ccadl"],
        "grid": {"h": [0.01, 0.02, 0.04, 0.08], "n": [10, 100, 1000]},
        "chains": 4,
        "epochs": 300.0,
        "seed": 2017,
        "out": "results/gmix-paper",
        # covariance-aware methods estimate the noise from earlier batches only
        "method_params": {"nogin": {"gamma": 1.0, "include_current_batch": False},
                          "msgld": {"include_current_batch": False},
                          "sghmc": {"gamma": 1.0, "include_current_batch": False},
                          "sgnht": {"gamma": 1.0},
                          "ccadl": {"gamma": 1.0, "include_current_batch": False}},
        "stepsize_multipliers": {"sgld": 0.02, "msgld": 0.02},
        "reference": {"h": 0.002, "samples": 1_000_000, "chains": 100, "burn_in": 2000, "thin": 1},
    },
    "blr-desk": {
        "name": "blr-desk",
        "model": {"kind": "blr", "n_data": 2000, "dim": 16, "prior_var": 100.0},
        "methods": ["nogin", "sgld", "msgld", "sghmc", "sgnht", "ccadl"],
        "grid": {"h": [0.002, 0.005, 0.01], "n": [20, 200, 2000]},
        "chains": 2,
        "epochs": 200.0,
        "seed": 2017,
        "out": "results/blr-desk",
        # covariance-aware methods estimate the noise from earlier batches only
        "method_params": {"nogin": {"gamma": 1.0, "include_current_batch": False},
                          "msgld": {"include_current_batch": False},
                          "sghmc": {"gamma": 1.0, "include_current_batch": False},
                          "sgnht": {"gamma": 1.0},
                          "ccadl": {"gamma": 1.0, "include_current_batch": False}},
        "stepsize_multipliers": {"sgld": 0.5, "msgld": 0.5},
        "reference": {"h": 0.002, "samples": 200_000, "chains": 40, "burn_in": 4000, "thin": 1},
    },
    "gaussian-check": {
        "name": "gaussian-check",
        "model": {"kind": "gaussian", "n_data": 100, "dim": 1, "eta": 0.0, "omega": 1.0},
        "methods": ["nogin", "aboba"],
        "grid": {"h": [0.2], "n": [100]},
        "chains": 2,
        "epochs": 2000.0,
        "seed": 7,
        "out": "results/gaussian-check",
        "reference": {"h": 0.8, "samples": 400_000, "chains": 40, "burn_in": 500, "thin": 1},
    },
}


def preset(name):
    try:
        return ExperimentConfig.from_dict(PRESETS[name])
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def apply_overrides(cfg, seed=None, out=None):
    """Apply command-line overrides, returning a validated copy."""
    data = cfg.to_dict()
    if seed is not None:
        data["seed"] = int(seed)
    if out is not None:
        data["out"] = str(out)
    return ExperimentConfig.from_dict(data)
