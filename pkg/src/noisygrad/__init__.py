"""Stochastic-gradient MCMC with noise-absorbing Langevin splitting, baselines and diagnostics."""

from .classifier import BayesianLogisticRegression
from .core import Mass, RngStream, SamplerConfig, State, Trajectory, mass_sample, standard_normal_vector
from .diagnostics import (
    IatResult,
    LinearGaussianOracle,
    OscillatoryRegime,
    estimate_iat,
    linear_gaussian_oracle,
    mse_curve,
    oracle_tau,
)
from .exceptions import (
    ConfigError,
    DivergenceError,
    ModelEvaluationError,
    NumericalError,
    StabilityError,
)
from .gradients import CovarianceTracker, NoisyForce, minibatch_force, true_force
from .lowrank import LowRankPSD
from .models import (
    BlrModel,
    GaussianDataModel,
    GaussianSyntheticModel,
    MixtureModel,
    QuarticSyntheticModel,
    TargetModel,
)
from .samplers import ABOBA, CCADL, MALA, MSGLD, NOGIN, SGHMC, SGLD, SGNHT, make_sampler

__version__ = "0.1.0"

__all__ = [
    "ABOBA", "BayesianLogisticRegression", "BlrModel", "CCADL", "ConfigError", "CovarianceTracker",
    "DivergenceError", "GaussianDataModel", "GaussianSyntheticModel", "IatResult", "LinearGaussianOracle",
    "LowRankPSD", "MALA", "MSGLD", "Mass", "MixtureModel", "ModelEvaluationError", "NOGIN",
    "NoisyForce", "NumericalError", "OscillatoryRegime", "QuarticSyntheticModel", "RngStream",
    "SGHMC", "SGLD", "SGNHT", "SamplerConfig", "StabilityError", "State", "TargetModel",
    "Trajectory", "estimate_iat", "linear_gaussian_oracle", "make_sampler", "mass_sample",
    "minibatch_force", "mse_curve", "oracle_tau", "standard_normal_vector", "true_force",
]
