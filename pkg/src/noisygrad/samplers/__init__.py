"""Samplers: the noisy-gradient integrator, exact-gradient ABOBA and comparator baselines."""

from .baselines import ccadl_step, mala_step, msgld_step, sghmc_step, sgld_step, sgnht_step
from .estimators import (
    ABOBA,
    CCADL,
    MALA,
    MSGLD,
    NOGIN,
    SAMPLERS,
    SGHMC,
    SGLD,
    SGNHT,
    BaseSampler,
    make_sampler,
)
from .integrators import (
    DampingOperator,
    aboba_step,
    check_divergence,
    injected_noise_scale,
    nogin_step,
    phi_A,
    phi_B,
    phi_O,
)

__all__ = [
    "ABOBA", "CCADL", "MALA", "MSGLD", "NOGIN", "SAMPLERS", "SGHMC", "SGLD", "SGNHT",
    "BaseSampler", "DampingOperator", "aboba_step", "ccadl_step", "check_divergence",
    "injected_noise_scale", "make_sampler", "mala_step", "msgld_step", "nogin_step",
    "phi_A", "phi_B", "phi_O", "sghmc_step", "sgld_step", "sgnht_step",
]
