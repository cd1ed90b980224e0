"""Comparator samplers, written in their common fixed-stepsize forms.

Every step function has the signature ``(state, model, cfg, tracker, rng)``
and returns ``(state, cost)``. ``h`` plays the role of the time step; for the
first-order methods the classical stepsize is ``eps = 2 h``, so

* SGLD:   theta += (eps/2) F~ + N(0, eps / beta)            (Welling & Teh, 2011)
* mSGLD:  as SGLD with injected covariance eps (I - (eps beta / 4) S) / beta   (Vollmer et al., 2016)
* SGHMC:  theta += h p;  p += h F~ - h gamma p + N(0, 2h (gamma/beta I - (h/2) S))   (Chen et al., 2014)
* SGNHT:  p += h F~ - h xi p + N(0, 2 gamma h / beta);  theta += h p;
          xi += h (p.p / D - 1/beta)                         (Ding et al., 2014)
* CC-ADL: SGNHT plus the covariance-controlled friction -(h^2/2) beta S p   (Shang et al., 2015)
* MALA:   Langevin proposal theta + h F + sqrt(2h) z with a Metropolis-Hastings correction.

``S`` is the gradient-noise covariance estimate. Negative parts of injected
covariances are clipped to zero. These baselines use the identity mass.
"""

import math

import numpy as np

from ..core import State
from ..exceptions import ConfigError
from .integrators import check_divergence


def _require_identity_mass(cfg, name):
    if not cfg.mass.is_identity:
        raise ConfigError(f"{name} supports the identity mass only")


def _noisy(model, theta, cfg, rng, tracker, covariance):
    n = cfg.resolve_batch(model.n_data)
    return model.noisy_force(theta, n, rng, tracker, covariance=covariance)


def _compensated_noise(S, total_var, h, z):
    """Draw with covariance ``(total_var I - h^2 S)_+`` by spectral clipping."""
    if S is None or S.is_zero:
        return math.sqrt(total_var) * z
    return S.function_apply(lambda x: np.sqrt(np.clip(x, 0.0, None)), total_var, -h * h, z)


def sgld_step(state, model, cfg, tracker=None, rng=None, **_):
    _require_identity_mass(cfg, "SGLD")
    h = cfg.h
    nf = _noisy(model, state.theta, cfg, rng, None, False)
    z = rng.normal(state.theta.shape)
    theta = state.theta + h * nf.value + math.sqrt(2.0 * h / cfg.beta) * z
    check_divergence(theta, state.p)
    return State(theta, state.p, state.xi), nf.cost


def msgld_step(state, model, cfg, tracker=None, rng=None, **_):
    _require_identity_mass(cfg, "mSGLD")
    h = cfg.h
    nf = _noisy(model, state.theta, cfg, rng, tracker, True)
    z = rng.normal(state.theta.shape)
    noise = _compensated_noise(nf.covariance, 2.0 * h / cfg.beta, h, z)
    theta = state.theta + h * nf.value + noise
    check_divergence(theta, state.p)
    return State(theta, state.p, state.xi), nf.cost


def sghmc_step(state, model, cfg, tracker=None, rng=None, **_):
    _require_identity_mass(cfg, "SGHMC")
    h = cfg.h
    theta = state.theta + h * state.p
    nf = _noisy(model, theta, cfg, rng, tracker, True)
    z = rng.normal(theta.shape)
    noise = _compensated_noise(nf.covariance, 2.0 * h * cfg.gamma / cfg.beta, h, z)
    p = state.p + h * nf.value - (h * cfg.gamma) * state.p + noise
    check_divergence(theta, p)
    return State(theta, p, state.xi), nf.cost


def _thermostat(state, cfg):
    if state.xi is None:
        return np.full(state.theta.shape[:-1], cfg.gamma) if state.theta.ndim > 1 else cfg.gamma
    return state.xi


def _thermostat_update(xi, p, cfg):
    return xi + cfg.h * (np.mean(p * p, axis=-1) - 1.0 / cfg.beta)


def sgnht_step(state, model, cfg, tracker=None, rng=None, **_):
    _require_identity_mass(cfg, "SGNHT")
    h = cfg.h
    xi = _thermostat(state, cfg)
    nf = _noisy(model, state.theta, cfg, rng, None, False)
    z = rng.normal(state.theta.shape)
    friction = h * np.asarray(xi)[..., None] * state.p if np.ndim(xi) else h * xi * state.p
    p = state.p + h * nf.value - friction + math.sqrt(2.0 * cfg.gamma * h / cfg.beta) * z
    theta = state.theta + h * p
    check_divergence(theta, p)
    return State(theta, p, _thermostat_update(xi, p, cfg)), nf.cost


def ccadl_step(state, model, cfg, tracker=None, rng=None, **_):
    _require_identity_mass(cfg, "CC-ADL")
    h = cfg.h
    xi = _thermostat(state, cfg)
    nf = _noisy(model, state.theta, cfg, rng, tracker, True)
    z = rng.normal(state.theta.shape)
    friction = h * np.asarray(xi)[..., None] * state.p if np.ndim(xi) else h * xi * state.p
    p = state.p + h * nf.value - friction + math.sqrt(2.0 * cfg.gamma * h / cfg.beta) * z
    if nf.covariance is not None and not nf.covariance.is_zero:
        p = p - (0.5 * h * h * cfg.beta) * nf.covariance.apply(state.p)
    theta = state.theta + h * p
    check_divergence(theta, p)
    return State(theta, p, _thermostat_update(xi, p, cfg)), nf.cost


def mala_step(state, model, cfg, tracker=None, rng=None, **_):
    """Metropolis-adjusted Langevin step targeting ``pi**beta``.

    The returned state's ``cache`` holds ``logp``, ``force`` at the new position
    and the per-chain ``accepted`` flags; the cost counts one full-data
    evaluation at the proposal (the current point is reused from the cache).
    """
    h, beta = cfg.h, cfg.beta
    theta = state.theta
    cost = 0
    if state.cache is None:
        logp, force = beta * model.log_density(theta), beta * model.force(theta)
        cost += model.force_cost
    else:
        logp, force = state.cache["logp"], state.cache["force"]
    z = rng.normal(theta.shape)
    prop = theta + h * force + math.sqrt(2.0 * h) * z
    logp_prop = beta * model.log_density(prop)
    force_prop = beta * model.force(prop)
    cost += model.force_cost
    fwd = -np.sum((prop - theta - h * force) ** 2, axis=-1) / (4.0 * h)
    rev = -np.sum((theta - prop - h * force_prop) ** 2, axis=-1) / (4.0 * h)
    log_alpha = np.where(np.isfinite(logp_prop), logp_prop - logp + rev - fwd, -np.inf)
    u = rng.uniform(np.shape(log_alpha))
    accepted = np.log(u) < log_alpha
    acc = accepted[..., None] if theta.ndim > 1 else accepted
    new_theta = np.where(acc, prop, theta)
    cache = {
        "logp": np.where(accepted, logp_prop, logp),
        "force": np.where(acc, force_prop, force),
        "accepted": accepted,
    }
    check_divergence(new_theta, state.p)
    return State(new_theta, state.p, state.xi, cache), cost
