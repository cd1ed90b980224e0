"""Splitting maps for underdamped Langevin dynamics and the noisy-gradient integrator.

A step of the noisy-gradient integrator is the composition

    half drift -> noisy half kick -> damping -> noisy half kick -> half drift

where both kicks use the same force estimate and the same injected noise
``lam * R``, ``lam**2 = tanh(gamma * h / 2)``, and the damping matrix

    Gamma = ((1 - lam^2) I - k Sigma) ((1 + lam^2) I + k Sigma)^{-1},  k = h^2 / 4

absorbs the gradient noise so that fluctuation and dissipation balance. With
``Sigma = 0`` the scheme is exactly ABOBA with damping ``exp(-gamma h)``.

For a general mass ``M = L L^T`` and inverse temperature ``beta`` the balance
is struck in whitened momenta ``q = L^{-1} p``, whose target covariance is
``I / beta``: the gradient noise there has covariance ``L^{-1} Sigma L^{-T}``
and is measured against the ``1/beta`` scale, so the ``k Sigma`` term becomes
``(beta h^2 / 4) L^{-1} Sigma L^{-T}``. Both forms agree for ``M = I, beta = 1``.
"""

import math

import numpy as np

from ..core import State, as_mass, mass_sample
from ..exceptions import DivergenceError, StabilityError

DIVERGENCE_BOUND = 1e8


def phi_A(state, t, mass=None):
    """Drift: ``theta += t * M^{-1} p``."""
    mass = as_mass(mass)
    return State(state.theta + t * mass.inv_apply(state.p), state.p, state.xi)


def phi_B(state, t, force):
    """Kick: ``p += t * force``."""
    return State(state.theta, state.p + t * np.asarray(force, dtype=float), state.xi)


def phi_O(state, damping, noise):
    """Fluctuation with a scalar damping factor ``a``: ``p = a p + sqrt(1 - a^2) * noise``."""
    return State(state.theta, damping * state.p + math.sqrt(1.0 - damping**2) * noise, state.xi)


def injected_noise_scale(h, gamma):
    """``lam = sqrt(tanh(gamma h / 2))``, the standard deviation multiplier of the injected noise."""
    return math.sqrt(math.tanh(0.5 * gamma * h))


def check_divergence(theta, p, step=None):
    """Raise DivergenceError on non-finite entries or magnitudes above ``DIVERGENCE_BOUND``."""
    # NaN fails every comparison, so one bound check covers non-finite values
    if not (abs(theta).max() <= DIVERGENCE_BOUND and abs(p).max() <= DIVERGENCE_BOUND):
        if np.all(np.isfinite(theta)) and np.all(np.isfinite(p)):
            raise DivergenceError(f"chain exceeded magnitude {DIVERGENCE_BOUND:g}", step=step)
        raise DivergenceError("chain produced non-finite values", step=step)


class DampingOperator:
    """``Dplus^{-1} Dminus`` with ``Dminus = (1 - lam^2) I - k S`` and ``Dplus = (1 + lam^2) I + k S``.

    Here ``S = L^{-1} Sigma L^{-T}`` for the mass Cholesky factor ``M = L L^T``
    and ``k = beta h^2 / 4``; the operator acts on ``q = L^{-1} p`` and the
    result is mapped back with ``L``. Because the two factors commute,
    ``Dplus^{-1} Dminus q = 2 Dplus^{-1} q - q`` needs a single shifted solve.
    """

    def __init__(self, covariance, h, gamma, beta=1.0, mass=None):
        self.mass = as_mass(mass)
        self.covariance = covariance
        self.whitened = covariance.transformed(self.mass)
        self.lam2 = math.tanh(0.5 * gamma * h)
        self.k = beta * h * h / 4.0

    def eigenvalue_bounds(self):
        """Range of eigenvalues of ``Dplus^{-1} Dminus`` (a decreasing function of those of Sigma)."""
        lo, hi = self.whitened.eig_bounds()
        g = lambda s: (1.0 - self.lam2 - self.k * s) / (1.0 + self.lam2 + self.k * s)
        return g(hi), g(lo)

    def check(self):
        lo, hi = self.eigenvalue_bounds()
        if not (-1.0 < lo and hi < 1.0):
            bad = lo if lo <= -1.0 else hi
            raise StabilityError(f"damping eigenvalue {bad:.6g} outside (-1, 1)", bound=bad)
        return lo, hi

    def dminus(self, p):
        q = self.mass.whiten(p)
        return self.mass.unwhiten((1.0 - self.lam2) * q - self.k * self.whitened.apply(q))

    def dplus(self, p):
        q = self.mass.whiten(p)
        return self.mass.unwhiten((1.0 + self.lam2) * q + self.k * self.whitened.apply(q))

    def apply(self, p):
        q = self.mass.whiten(p)
        if self.whitened.is_zero:
            q = (2.0 / (1.0 + self.lam2)) * q - q
        else:
            q = 2.0 * self.whitened.solve_shifted(1.0 + self.lam2, self.k, q) - q
        return self.mass.unwhiten(q)


def _damping_for(covariance, cfg, workspace):
    if workspace is not None:
        cached = workspace.get("damping")
        if cached is not None and cached.covariance is covariance:
            return cached
    op = DampingOperator(covariance, cfg.h, cfg.gamma, cfg.beta, cfg.mass)
    op.check()
    if workspace is not None:
        workspace["damping"] = op
    return op


def nogin_step(state, model, cfg, tracker=None, rng=None, *, fresh_second_noise=False, workspace=None):
    """Advance ``state`` by one noisy-gradient integrator step; returns ``(state, cost)``.

    ``workspace`` is an optional per-chain dict used to reuse the damping
    operator while the covariance object is unchanged.
    """
    h = cfg.h
    mass = cfg.mass
    lam = injected_noise_scale(h, cfg.gamma)
    theta = state.theta + (0.5 * h) * mass.inv_apply(state.p)
    n = cfg.resolve_batch(model.n_data)
    nf = model.noisy_force(theta, n, rng, tracker)
    R = mass_sample(rng, mass, cfg.beta, theta.shape)
    kick = (0.5 * h) * nf.value
    p = state.p + kick + lam * R
    p = _damping_for(nf.covariance, cfg, workspace).apply(p)
    if fresh_second_noise:
        R = mass_sample(rng, mass, cfg.beta, theta.shape)
    p = p + kick + lam * R
    theta = theta + (0.5 * h) * mass.inv_apply(p)
    check_divergence(theta, p)
    return State(theta, p, state.xi), nf.cost


def aboba_step(state, model, cfg, tracker=None, rng=None, **_):
    """ABOBA with the exact force and OU damping ``exp(-gamma h)``; returns ``(state, cost)``."""
    h = cfg.h
    mass = cfg.mass
    theta = state.theta + (0.5 * h) * mass.inv_apply(state.p)
    force = model.force(theta)
    R = mass_sample(rng, mass, cfg.beta, theta.shape)
    a = math.exp(-cfg.gamma * h)
    p = state.p + (0.5 * h) * force
    p = a * p + math.sqrt(1.0 - a * a) * R
    p = p + (0.5 * h) * force
    theta = theta + (0.5 * h) * mass.inv_apply(p)
    check_divergence(theta, p)
    return State(theta, p, state.xi), model.force_cost
