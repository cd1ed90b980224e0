"""Estimator-style wrappers around the step functions.

Each sampler stores its hyperparameters verbatim in ``__init__`` (so
``get_params``/``set_params``/``clone`` work as in scikit-learn), validates
them when run, and exposes

* ``sample(model, n_steps, ...) -> Trajectory`` for explicit control, and
* ``fit(model)`` which runs ``n_steps`` and stores ``trajectory_`` and
  ``samples_``.

Passing ``theta0`` with shape ``(K, D)`` advances ``K`` chains in lockstep;
this is supported by models whose forces broadcast over leading axes (the
synthetic-noise models, and full-gradient methods on any model).
"""

import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ..core import RngStream, SamplerConfig, State, Trajectory, mass_sample
from ..exceptions import ConfigError, NumericalError
from ..gradients import CovarianceTracker
from .baselines import ccadl_step, mala_step, msgld_step, sghmc_step, sgld_step, sgnht_step
from .integrators import aboba_step, nogin_step


class BaseSampler(BaseEstimator):
    """Common driver. Subclasses set ``_step`` and declare their own ``__init__``."""

    uses_covariance = False
    full_gradient = False
    has_momentum = True

    def _config(self):
        return SamplerConfig(
            h=self.h,
            gamma=getattr(self, "gamma", 1.0),
            beta=self.beta,
            mass=getattr(self, "mass", None),
            batch_size=None if self.full_gradient else getattr(self, "batch_size", None),
            seed=self.seed,
            stride=self.stride,
        )

    def _step_kwargs(self):
        return {}

    def _make_tracker(self, model):
        if not self.uses_covariance:
            return None
        return CovarianceTracker(model.dim, decay=self.decay, rank_cap=self.rank_cap,
                                 include_current=self.include_current_batch)

    def cost_per_step(self, model):
        if self.full_gradient:
            return model.force_cost
        return self._config().resolve_batch(model.n_data)

    def init_state(self, model, theta0=None, p0=None, rng=None, cfg=None):
        cfg = cfg or self._config()
        cfg.mass.check_dim(model.dim)
        theta = np.zeros(model.dim) if theta0 is None else np.array(theta0, dtype=float)
        if theta.ndim == 0:
            theta = theta.reshape(1)
        if theta.shape[-1] != model.dim:
            raise ConfigError(f"theta0 has dimension {theta.shape[-1]}, model has {model.dim}")
        if p0 is not None:
            p = np.array(p0, dtype=float).reshape(theta.shape)
        elif self.has_momentum:
            rng = rng or RngStream(cfg.seed)
            p = mass_sample(rng, cfg.mass, cfg.beta, theta.shape)
        else:
            p = np.zeros_like(theta)
        return State(theta, p)

    def sample(self, model, n_steps=None, *, epochs=None, theta0=None, p0=None, chain=0,
               rng=None, state=None, callback=None):
        """Run one chain (or a lockstep ensemble) and return its :class:`Trajectory`.

        Exactly one of ``n_steps`` or ``epochs`` may be given; ``epochs``
        converts the budget to ``floor(epochs * N / cost_per_step)`` steps.
        A :class:`NumericalError` raised mid-run (divergence or a violated
        damping bound) carries the partial trajectory as ``exc.trajectory``
        and the failing step index as ``exc.step``.
        """
        cfg = self._config()
        if epochs is not None:
            if n_steps is not None:
                raise ConfigError("pass n_steps or epochs, not both")
            n_steps = int(math.floor(epochs * model.n_data / self.cost_per_step(model)))
        n_steps = getattr(self, "n_steps", 1000) if n_steps is None else n_steps
        if n_steps < 0:
            raise ConfigError("n_steps must be non-negative")
        rng = rng or RngStream(cfg.seed, chain)
        if state is None:
            state = self.init_state(model, theta0, p0, rng, cfg)
        tracker = self._make_tracker(model)
        workspace = {}
        kwargs = self._step_kwargs()
        traj = Trajectory(model.n_data, stride=cfg.stride, capacity=n_steps // cfg.stride)
        step = type(self)._step
        record_accept = isinstance(self, MALA)
        for i in range(n_steps):
            try:
                state, cost = step(state, model, cfg, tracker, rng, workspace=workspace, **kwargs)
            except NumericalError as exc:
                exc.step = i + 1
                exc.trajectory = traj
                raise
            if record_accept:
                traj.record_step(state.theta, cost, accepted=state.cache["accepted"])
            else:
                traj.record_step(state.theta, cost)
            if callback is not None:
                callback(i, state)
        self.state_ = state
        return traj

    def fit(self, model, theta0=None):
        """Run ``n_steps`` from ``theta0`` and store the resulting chain."""
        self.trajectory_ = self.sample(model, self.n_steps, theta0=theta0)
        self.samples_ = self.trajectory_.samples
        self.n_features_in_ = model.dim
        return self

    def posterior_mean(self, burn_in=0):
        check_is_fitted(self, "samples_")
        return self.samples_[burn_in:].mean(axis=0)

    def posterior_variance(self, burn_in=0):
        check_is_fitted(self, "samples_")
        return self.samples_[burn_in:].var(axis=0)


class NOGIN(BaseSampler):
    """Noisy-gradient integrator for underdamped Langevin dynamics.

    Parameters
    ----------
    h : float
        Stepsize.
    gamma : float
        Friction; sets the injected noise ``lam**2 = tanh(gamma h / 2)``.
    beta : float
        Inverse temperature.
    mass : None, vector or matrix
        Mass matrix (identity, diagonal or dense SPD).
    batch_size : int or None
        Minibatch size ``n``; None uses the full dataset.
    n_steps, stride, seed : int
        Chain length used by ``fit``, thinning stride, and RNG seed.
    decay, rank_cap : float, int
        Covariance-history settings for minibatch models.
    include_current_batch : bool
        Whether the covariance estimate used at a step includes the batch
        drawn at that step. False uses earlier batches only, which avoids a
        correlation between the force noise and its estimated covariance.
    fresh_second_noise : bool
        Draw an independent injected-noise vector for the second kick
        instead of reusing the first one.
    """

    uses_covariance = True
    _step = staticmethod(nogin_step)

    def __init__(self, h=0.1, gamma=1.0, beta=1.0, mass=None, batch_size=None, n_steps=1000,
                 stride=1, seed=0, decay=0.9, rank_cap=32, include_current_batch=True, fresh_second_noise=False):
        self.h = h
        self.gamma = gamma
        self.beta = beta
        self.mass = mass
        self.batch_size = batch_size
        self.n_steps = n_steps
        self.stride = stride
        self.seed = seed
        self.decay = decay
        self.rank_cap = rank_cap
        self.include_current_batch = include_current_batch
        self.fresh_second_noise = fresh_second_noise

    def _step_kwargs(self):
        return {"fresh_second_noise": self.fresh_second_noise}


class ABOBA(BaseSampler):
    """Exact-gradient ABOBA splitting with OU damping ``exp(-gamma h)``."""

    full_gradient = True
    _step = staticmethod(aboba_step)

    def __init__(self, h=0.1, gamma=1.0, beta=1.0, mass=None, n_steps=1000, stride=1, seed=0):
        self.h = h
        self.gamma = gamma
        self.beta = beta
        self.mass = mass
        self.n_steps = n_steps
        self.stride = stride
        self.seed = seed


class SGLD(BaseSampler):
    """Stochastic gradient Langevin dynamics with a fixed stepsize."""

    has_momentum = False
    _step = staticmethod(sgld_step)

    def __init__(self, h=0.01, beta=1.0, batch_size=None, n_steps=1000, stride=1, seed=0):
        self.h = h
        self.beta = beta
        self.batch_size = batch_size
        self.n_steps = n_steps
        self.stride = stride
        self.seed = seed


class MSGLD(BaseSampler):
    """SGLD with injected noise reduced by the estimated gradient-noise covariance."""

    has_momentum = False
    uses_covariance = True
    _step = staticmethod(msgld_step)

    def __init__(self, h=0.01, beta=1.0, batch_size=None, n_steps=1000, stride=1, seed=0,
                 decay=0.9, rank_cap=32, include_current_batch=True):
        self.h = h
        self.beta = beta
        self.batch_size = batch_size
        self.n_steps = n_steps
        self.stride = stride
        self.seed = seed
        self.decay = decay
        self.rank_cap = rank_cap
        self.include_current_batch = include_current_batch


class SGHMC(BaseSampler):
    """Stochastic gradient HMC with friction ``gamma`` and noise compensation."""

    uses_covariance = True
    _step = staticmethod(sghmc_step)

    def __init__(self, h=0.01, gamma=1.0, beta=1.0, batch_size=None, n_steps=1000, stride=1,
                 seed=0, decay=0.9, rank_cap=32, include_current_batch=True):
        self.h = h
        self.gamma = gamma
        self.beta = beta
        self.batch_size = batch_size
        self.n_steps = n_steps
        self.stride = stride
        self.seed = seed
        self.decay = decay
        self.rank_cap = rank_cap
        self.include_current_batch = include_current_batch


class SGNHT(BaseSampler):
    """Stochastic gradient Nose-Hoover thermostat; ``gamma`` is the noise amplitude and initial ``xi``."""

    _step = staticmethod(sgnht_step)

    def __init__(self, h=0.01, gamma=1.0, beta=1.0, batch_size=None, n_steps=1000, stride=1, seed=0):
        self.h = h
        self.gamma = gamma
        self.beta = beta
        self.batch_size = batch_size
        self.n_steps = n_steps
        self.stride = stride
        self.seed = seed


class CCADL(BaseSampler):
    """Covariance-controlled adaptive Langevin thermostat."""

    uses_covariance = True
    _step = staticmethod(ccadl_step)

    def __init__(self, h=0.01, gamma=1.0, beta=1.0, batch_size=None, n_steps=1000, stride=1,
                 seed=0, decay=0.9, rank_cap=32, include_current_batch=True):
        self.h = h
        self.gamma = gamma
        self.beta = beta
        self.batch_size = batch_size
        self.n_steps = n_steps
        self.stride = stride
        self.seed = seed
        self.decay = decay
        self.rank_cap = rank_cap
        self.include_current_batch = include_current_batch


class MALA(BaseSampler):
    """Metropolis-adjusted Langevin algorithm (unbiased full-gradient reference)."""

    full_gradient = True
    has_momentum = False
    _step = staticmethod(mala_step)

    def __init__(self, h=0.01, beta=1.0, n_steps=1000, stride=1, seed=0):
        self.h = h
        self.beta = beta
        self.n_steps = n_steps
        self.stride = stride
        self.seed = seed

    def fit(self, model, theta0=None):
        super().fit(model, theta0)
        self.acceptance_rate_ = float(np.mean(self.trajectory_.diagnostics.get("accepted", [np.nan])))
        return self


SAMPLERS = {
    "nogin": NOGIN,
    "aboba": ABOBA,
    "sgld": SGLD,
    "msgld": MSGLD,
    "sghmc": SGHMC,
    "sgnht": SGNHT,
    "ccadl": CCADL,
    "mala": MALA,
}


def make_sampler(name, **params):
    """Instantiate a sampler by its lowercase name, ignoring parameters it does not take."""
    try:
        cls = SAMPLERS[name.lower()]
    except KeyError:
        raise ConfigError(f"unknown method {name!r}; choose from {sorted(SAMPLERS)}") from None
    accepted = cls._get_param_names()
    return cls(**{k: v for k, v in params.items() if k in accepted})
