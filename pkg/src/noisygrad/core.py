"""Domain types shared by the samplers: states, configurations, RNG streams, trajectories."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from ._validation import check_int, check_positive
from .exceptions import ConfigError


@dataclass
class State:
    """Position/momentum pair advanced by every sampler.

    ``theta`` and ``p`` share their shape; the last axis is the parameter
    dimension and any leading axes index independent chains run in lockstep.
    ``xi`` holds a thermostat variable for the Nose-Hoover style baselines and
    ``cache`` lets full-gradient methods reuse the force/log-density at ``theta``.
    """

    theta: np.ndarray
    p: np.ndarray
    xi: object = None
    cache: object = None

    def __post_init__(self):
        if type(self.theta) is np.ndarray and type(self.p) is np.ndarray and self.theta.shape == self.p.shape:
            return
        self.theta = np.asarray(self.theta, dtype=float)
        self.p = np.asarray(self.p, dtype=float)
        if self.theta.ndim == 0:
            self.theta = self.theta.reshape(1)
        if self.p.ndim == 0:
            self.p = self.p.reshape(1)
        if self.theta.shape != self.p.shape:
            raise ValueError(
                f"theta and p must have the same shape, got {self.theta.shape} and {self.p.shape}"
            )
        if self.theta.shape[-1] < 1:
            raise ValueError("dimension must be at least 1")

    @property
    def dim(self):
        return self.theta.shape[-1]

    def is_finite(self):
        return bool(np.all(np.isfinite(self.theta)) and np.all(np.isfinite(self.p)))


class Mass:
    """Mass matrix: identity, diagonal (vector of positive entries) or dense SPD.

    A dense matrix is Cholesky-factored once at construction, ``M = L L^T``;
    sampling ``N(0, M/beta)`` and applying ``M^{-1}`` both go through ``L``.
    """

    def __init__(self, spec=None):
        self.spec = spec
        if spec is None or (isinstance(spec, str) and spec == "identity"):
            self.kind = "identity"
            self._chol = None
            return
        arr = np.asarray(spec, dtype=float)
        if arr.ndim == 0:
            arr = arr.reshape(1)
        if arr.ndim == 1:
            if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ConfigError("diagonal mass entries must be finite and strictly positive")
            self.kind = "diagonal"
            self._diag = arr
            self._sqrt = np.sqrt(arr)
        elif arr.ndim == 2:
            if arr.shape[0] != arr.shape[1] or not np.allclose(arr, arr.T, rtol=1e-12, atol=1e-14):
                raise ConfigError("dense mass matrix must be square and symmetric")
            try:
                self._chol = linalg.cholesky(arr, lower=True)
            except linalg.LinAlgError as exc:
                raise ConfigError("dense mass matrix is not positive definite") from exc
            self.kind = "dense"
            self._dense = arr
        else:
            raise ConfigError(f"mass must be None, a vector or a matrix, got ndim={arr.ndim}")

    @property
    def is_identity(self):
        return self.kind == "identity"

    def check_dim(self, dim):
        if self.kind == "diagonal" and self._diag.shape[0] != dim:
            raise ConfigError(f"mass has dimension {self._diag.shape[0]}, model has {dim}")
        if self.kind == "dense" and self._dense.shape[0] != dim:
            raise ConfigError(f"mass has dimension {self._dense.shape[0]}, model has {dim}")

    def matrix(self, dim):
        if self.kind == "identity":
            return np.eye(dim)
        if self.kind == "diagonal":
            return np.diag(self._diag)
        return self._dense.copy()

    def chol_apply(self, z):
        """Return ``L z`` along the last axis."""
        if self.kind == "identity":
            return z
        if self.kind == "diagonal":
            return self._sqrt * z
        return z @ self._chol.T

    def whiten(self, p):
        """Return ``L^{-1} p`` along the last axis."""
        if self.kind == "identity":
            return p
        if self.kind == "diagonal":
            return p / self._sqrt
        return linalg.solve_triangular(self._chol, np.asarray(p).T, lower=True).T

    def unwhiten(self, q):
        return self.chol_apply(q)

    def inv_apply(self, p):
        """Return ``M^{-1} p`` along the last axis."""
        if self.kind == "identity":
            return p
        if self.kind == "diagonal":
            return p / self._diag
        return linalg.cho_solve((self._chol, True), np.asarray(p).T).T

    def chol_transpose_apply(self, x):
        """Return ``L^T x`` along the last axis (used to whiten covariance columns)."""
        if self.kind == "identity":
            return x
        if self.kind == "diagonal":
            return self._sqrt * x
        return x @ self._chol

    def __repr__(self):
        return f"Mass({self.kind})"


def as_mass(mass):
    return mass if isinstance(mass, Mass) else Mass(mass)


@dataclass
class SamplerConfig:
    """Hyperparameters common to all samplers.

    ``batch_size=None`` means full batch. ``stride`` thins stored samples.
    """

    h: float
    gamma: float = 1.0
    beta: float = 1.0
    mass: object = None
    batch_size: object = None
    seed: int = 0
    stride: int = 1

    def __post_init__(self):
        self.h = check_positive(self.h, "h")
        self.gamma = check_positive(self.gamma, "gamma")
        self.beta = check_positive(self.beta, "beta")
        self.mass = as_mass(self.mass)
        self.seed = check_int(self.seed, "seed", low=0, high=2**64 - 1)
        self.stride = check_int(self.stride, "stride", low=1)
        if self.batch_size is not None:
            self.batch_size = check_int(self.batch_size, "batch_size", low=1)

    def resolve_batch(self, n_data):
        """Return the effective batch size for a dataset of ``n_data`` records."""
        if self.batch_size is None:
            return n_data
        if self.batch_size > n_data:
            raise ConfigError(f"batch_size={self.batch_size} exceeds dataset size N={n_data}")
        return self.batch_size


class RngStream:
    """Counter-based (Philox) random stream keyed by ``(seed, *key)``.

    Identical keys reproduce identical draws; distinct keys give independent
    streams via ``SeedSequence`` spawn keys. Normal draws are served from a
    pre-drawn block, which keeps per-step overhead low for small dimensions.
    """

    def __init__(self, seed=0, *key, block=8192):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self.key)
        self.generator = np.random.Generator(np.random.Philox(ss))
        self._block = block
        self._buf = np.empty(0)
        self._pos = 0

    def normal(self, shape):
        if isinstance(shape, (int, np.integer)):
            shape = (int(shape),)
        size = math.prod(shape)
        if size > self._buf.size - self._pos:
            if size > self._block:
                return self.generator.standard_normal(shape)
            self._buf = self.generator.standard_normal(self._block)
            self._pos = 0
        out = self._buf[self._pos:self._pos + size].reshape(shape)
        self._pos += size
        return out

    def uniform(self, shape):
        return self.generator.random(shape)

    def choice(self, n_total, n, replace=False):
        return self.generator.choice(n_total, size=n, replace=replace)

    def spawn(self, *subkey):
        return RngStream(self.seed, *(self.key + subkey), block=self._block)


def standard_normal_vector(rng, d):
    """Draw ``d`` independent standard normals from ``rng``."""
    d = check_int(d, "d", low=1)
    return rng.normal(d)


def mass_sample(rng, mass, beta=1.0, shape=None):
    """Draw from ``N(0, M / beta)``; ``shape`` defaults to ``(D,)`` for non-identity mass."""
    mass = as_mass(mass)
    if shape is None:
        if mass.kind == "identity":
            raise ValueError("shape is required for identity mass")
        shape = (mass._diag.shape[0],) if mass.kind == "diagonal" else (mass._dense.shape[0],)
    if not beta > 0:
        raise ConfigError(f"beta must be > 0, got {beta}")
    z = rng.normal(shape)
    if beta != 1.0:
        z = z / math.sqrt(beta)
    return mass.chol_apply(z)


class Trajectory:
    """Thinned chain of positions with cost bookkeeping.

    ``evaluations[k]`` is the cumulative number of per-datum gradient
    evaluations when ``samples[k]`` was recorded, so
    ``epochs = evaluations / n_data`` is exact. Storage grows geometrically;
    pass ``capacity`` when the number of samples is known in advance.
    """

    def __init__(self, n_data, stride=1, capacity=0):
        self.n_data = int(n_data)
        self.stride = int(stride)
        self.steps_taken = 0
        self.total_evaluations = 0
        self.diagnostics = {}
        self._capacity = int(capacity)
        self._samples = None
        self._evals = np.zeros(self._capacity, dtype=np.int64)
        self._count = 0

    def _grow(self, shape):
        new_cap = max(16, 2 * self._capacity)
        samples = np.empty((new_cap,) + shape)
        evals = np.zeros(new_cap, dtype=np.int64)
        if self._samples is not None:
            samples[:self._count] = self._samples[:self._count]
        evals[:self._count] = self._evals[:self._count]
        self._samples, self._evals, self._capacity = samples, evals, new_cap

    def record_step(self, theta, cost, **diag):
        self.steps_taken += 1
        self.total_evaluations += int(cost)
        if self.steps_taken % self.stride:
            return
        if self._samples is None and self._capacity:
            self._samples = np.empty((self._capacity,) + np.shape(theta))
        if self._count >= self._capacity:
            self._grow(np.shape(theta))
        self._samples[self._count] = theta
        self._evals[self._count] = self.total_evaluations
        self._count += 1
        for key, value in diag.items():
            self.diagnostics.setdefault(key, []).append(value)

    def add_cost(self, cost):
        """Count evaluations that are not tied to a step (e.g. initialization)."""
        self.total_evaluations += int(cost)

    @property
    def samples(self):
        if self._samples is None:
            return np.empty((0,))
        return self._samples[:self._count]

    @property
    def evaluations(self):
        return self._evals[:self._count]

    @property
    def epochs(self):
        return self.evaluations.astype(float) / self.n_data

    @property
    def total_epochs(self):
        return self.total_evaluations / self.n_data

    def __len__(self):
        return self._count
