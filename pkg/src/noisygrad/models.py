"""Target posteriors and data generators.

A model exposes the prior gradient, per-datum log-likelihood gradients and,
where cheap, the log-density. ``force`` and ``log_density`` broadcast over
leading axes of ``theta`` so many chains can be advanced at once.
"""

import csv
import hashlib
import json
import math

import numpy as np
from scipy.special import expit

from .core import RngStream
from .exceptions import ConfigError
from .gradients import NoisyForce, minibatch_force
from .lowrank import LowRankPSD


def _as_stream(rng):
    if isinstance(rng, RngStream):
        return rng
    if rng is None or isinstance(rng, (int, np.integer)):
        return RngStream(0 if rng is None else int(rng))
    raise TypeError(f"expected an RngStream or integer seed, got {type(rng).__name__}")


def _digest(*arrays):
    h = hashlib.sha256()
    for a in arrays:
        a = np.ascontiguousarray(a, dtype=float)
        h.update(str(a.shape).encode())
        h.update(a.tobytes())
    return h.hexdigest()


class TargetModel:
    """Base class for product posteriors ``pi0(theta) * prod_i pi(y_i | theta)``.

    Subclasses implement :meth:`prior_grad` and :meth:`datum_grads`; the base
    :meth:`force` sums them. ``n_data`` is the number of per-datum terms ``N``.
    """

    dim = None
    n_data = None

    def prior_grad(self, theta):
        raise NotImplementedError

    def datum_grads(self, theta, idx=None):
        """Per-datum gradients for records ``idx`` (all records if None), shape ``(m, D)``."""
        raise NotImplementedError

    def force(self, theta):
        return self.prior_grad(theta) + self.datum_grads(theta).sum(axis=0)

    def log_density(self, theta):
        raise NotImplementedError(f"{type(self).__name__} has no log-density")

    @property
    def force_cost(self):
        return self.n_data

    def noisy_force(self, theta, n, rng, tracker=None, covariance=True):
        return minibatch_force(self, theta, n, rng, tracker, covariance)

    def spec(self):
        """JSON-serializable description used to key reference caches."""
        raise NotImplementedError

    def model_hash(self):
        text = json.dumps(self.spec(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]


class SyntheticNoiseModel(TargetModel):
    """Model whose gradient noise is drawn exactly from ``N(0, noise_cov)``.

    The configured covariance is passed to samplers verbatim instead of being
    estimated. One noisy or exact evaluation counts as a single gradient
    evaluation (``n_data == 1``).
    """

    n_data = 1

    def __init__(self, dim, noise_cov=0.0):
        self.dim = int(dim)
        self.noise_cov = _as_covariance(noise_cov, self.dim)

    def prior_grad(self, theta):
        return self.force(theta)

    def datum_grads(self, theta, idx=None):
        return np.zeros((0, self.dim))

    def draw_noise(self, shape, rng):
        cov = self.noise_cov
        if cov.is_zero:
            return np.zeros(shape)
        if not (cov.rank and cov.c):
            return math.sqrt(cov.alpha) * rng.normal(shape)
        out = np.zeros(shape)
        if cov.alpha:
            out = out + np.sqrt(cov.alpha) * rng.normal(shape)
        if cov.rank and cov.c:
            z = rng.normal(shape[:-1] + (cov.rank,))
            out = out + np.sqrt(cov.c) * (z @ cov.columns.T)
        return out

    def noisy_force(self, theta, n, rng, tracker=None, covariance=True):
        theta = np.asarray(theta, dtype=float)
        value = self.force(theta) + self.draw_noise(theta.shape, rng)
        return NoisyForce(value=value, covariance=self.noise_cov, batch_indices=None, cost=1)


def _as_covariance(cov, dim):
    if isinstance(cov, LowRankPSD):
        if cov.dim != dim:
            raise ConfigError(f"noise covariance has dimension {cov.dim}, model has {dim}")
        return cov
    arr = np.asarray(cov, dtype=float)
    if arr.ndim == 0:
        if arr < 0:
            raise ConfigError("noise variance must be non-negative")
        return LowRankPSD.scaled_identity(dim, float(arr))
    if arr.shape != (dim, dim):
        raise ConfigError(f"noise covariance must be scalar or ({dim}, {dim})")
    w, V = np.linalg.eigh(arr)
    if w.min() < -1e-12 * max(1.0, w.max()):
        raise ConfigError("noise covariance must be positive semi-definite")
    keep = w > 0
    return LowRankPSD(V[:, keep] * np.sqrt(w[keep]), alpha=0.0, c=1.0, rank_cap=None)


class GaussianSyntheticModel(SyntheticNoiseModel):
    """Gaussian target ``N(eta, Omega)`` with exact Gaussian gradient noise."""

    def __init__(self, eta=0.0, omega=1.0, noise_cov=0.0):
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        omega = np.asarray(omega, dtype=float)
        if omega.ndim == 0:
            omega = omega * np.eye(eta.size)
        if omega.shape != (eta.size, eta.size):
            raise ConfigError("omega must be scalar or a (D, D) matrix matching eta")
        try:
            self._chol = np.linalg.cholesky(omega)
        except np.linalg.LinAlgError as exc:
            raise ConfigError("omega must be symmetric positive definite") from exc
        super().__init__(eta.size, noise_cov)
        self.eta = eta
        self.omega = omega
        self.precision = np.linalg.inv(omega)

    def force(self, theta):
        return -(np.asarray(theta) - self.eta) @ self.precision

    def log_density(self, theta):
        d = np.asarray(theta) - self.eta
        return -0.5 * np.einsum("...i,ij,...j->...", d, self.precision, d)

    def spec(self):
        return {
            "kind": "gaussian",
            "eta": self.eta.tolist(),
            "omega": self.omega.tolist(),
            "noise": _digest(self.noise_cov.to_dense()),
        }


class QuarticSyntheticModel(SyntheticNoiseModel):
    """Product target ``log pi = sum_j (-theta_j^2 / 2 - quartic * theta_j^4)`` with Gaussian gradient noise."""

    def __init__(self, dim=1, quartic=0.1, noise_cov=0.0):
        if quartic < 0:
            raise ConfigError("quartic coefficient must be non-negative")
        super().__init__(dim, noise_cov)
        self.quartic = float(quartic)

    def force(self, theta):
        theta = np.asarray(theta, dtype=float)
        return -theta - 4.0 * self.quartic * theta**3

    def log_density(self, theta):
        theta = np.asarray(theta, dtype=float)
        return np.sum(-0.5 * theta**2 - self.quartic * theta**4, axis=-1)

    def spec(self):
        return {
            "kind": "quartic",
            "dim": self.dim,
            "quartic": self.quartic,
            "noise": _digest(self.noise_cov.to_dense()),
        }


class GaussianDataModel(TargetModel):
    """Gaussian location model with a flat prior and per-datum variance ``N * omega``.

    Each record contributes ``-|y_i - theta|^2 / (2 N omega)``, so the posterior
    is exactly ``N(mean(y), omega * I)`` whatever ``N`` is, while minibatch
    forces carry genuine subsampling noise.
    """

    def __init__(self, data, omega=1.0):
        data = np.asarray(data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1:
            raise ConfigError("data must be an (N, D) array with N >= 1")
        if not omega > 0:
            raise ConfigError("omega must be positive")
        self.data = data
        self.n_data, self.dim = data.shape
        self.omega = float(omega)
        self._scale = 1.0 / (self.n_data * self.omega)
        self._total = data.sum(axis=0)

    @property
    def posterior_mean(self):
        return self._total / self.n_data

    def prior_grad(self, theta):
        return np.zeros_like(np.asarray(theta, dtype=float))

    def datum_grads(self, theta, idx=None):
        y = self.data if idx is None else self.data[idx]
        return (y - np.asarray(theta, dtype=float)) * self._scale

    def force(self, theta):
        return (self._total - self.n_data * np.asarray(theta, dtype=float)) * self._scale

    def log_density(self, theta):
        d = np.asarray(theta, dtype=float) - self.posterior_mean
        return -0.5 * np.sum(d * d, axis=-1) / self.omega

    def spec(self):
        return {"kind": "gaussian", "omega": self.omega, "n_data": self.n_data, "data": _digest(self.data)}


def generate_gaussian_data(rng, n_data, eta=0.0, omega=1.0, dim=None):
    """Records ``y_i ~ N(eta, N * omega * I)`` for :class:`GaussianDataModel`."""
    rng = _as_stream(rng)
    eta = np.atleast_1d(np.asarray(eta, dtype=float))
    if dim is not None and eta.size == 1:
        eta = np.full(dim, eta[0])
    if n_data < 1:
        raise ConfigError("n_data must be >= 1")
    return eta + math.sqrt(n_data * omega) * rng.normal((n_data, eta.size))


class MixtureModel(TargetModel):
    """Two-component location mixture, ``pi(y | mu) ~ exp(-(y-mu1)^2/2) + 2 exp(-(y-mu2)^2/2)``.

    The prior is flat, so the prior gradient is zero and the log-density is
    the log-likelihood up to a constant.
    """

    dim = 2
    LOG_WEIGHT = np.log(2.0)

    def __init__(self, data):
        data = np.asarray(data, dtype=float).ravel()
        if data.size < 1:
            raise ConfigError("mixture model needs at least one datum")
        self.data = data
        self.n_data = data.size

    def prior_grad(self, theta):
        return np.zeros_like(np.asarray(theta, dtype=float))

    def _parts(self, theta, y):
        theta = np.asarray(theta, dtype=float)
        d1 = y - theta[..., 0:1]
        d2 = y - theta[..., 1:2]
        a = -0.5 * d1**2
        b = self.LOG_WEIGHT - 0.5 * d2**2
        return d1, d2, a, b

    def datum_grads(self, theta, idx=None):
        y = self.data if idx is None else self.data[idx]
        d1, d2, a, b = self._parts(theta, y)
        w1 = expit(a - b)
        return np.stack([w1 * d1, (1.0 - w1) * d2], axis=-1)

    def force(self, theta):
        d1, d2, a, b = self._parts(theta, self.data)
        w1 = expit(a - b)
        return np.stack([(w1 * d1).sum(axis=-1), ((1.0 - w1) * d2).sum(axis=-1)], axis=-1)

    def log_density(self, theta):
        _, _, a, b = self._parts(theta, self.data)
        return np.logaddexp(a, b).sum(axis=-1)

    def spec(self):
        return {"kind": "mixture", "n_data": self.n_data, "data": _digest(self.data)}


class BlrModel(TargetModel):
    """Bayesian logistic regression with a ``N(0, prior_var * I)`` prior.

    ``features`` should already contain the constant column.
    """

    def __init__(self, features, labels, prior_var=100.0):
        X = np.asarray(features, dtype=float)
        c = np.asarray(labels, dtype=float).ravel()
        if X.ndim != 2 or X.shape[0] != c.size:
            raise ConfigError("features must be (N, D) with one label per row")
        if not np.all((c == 0) | (c == 1)):
            raise ConfigError("labels must be 0 or 1")
        if prior_var <= 0:
            raise ConfigError("prior_var must be positive")
        self.features = X
        self.labels = c
        self.prior_var = float(prior_var)
        self.n_data, self.dim = X.shape

    def prior_grad(self, theta):
        return -np.asarray(theta, dtype=float) / self.prior_var

    def datum_grads(self, theta, idx=None):
        X = self.features if idx is None else self.features[idx]
        c = self.labels if idx is None else self.labels[idx]
        resid = c - expit(X @ np.asarray(theta, dtype=float))
        return resid[:, None] * X

    def force(self, theta):
        theta = np.asarray(theta, dtype=float)
        resid = self.labels - expit(theta @ self.features.T)
        return resid @ self.features + self.prior_grad(theta)

    def log_density(self, theta):
        theta = np.asarray(theta, dtype=float)
        z = theta @ self.features.T
        loglik = (self.labels * z - np.logaddexp(0.0, z)).sum(axis=-1)
        return loglik - 0.5 * np.sum(theta**2, axis=-1) / self.prior_var

    def spec(self):
        return {
            "kind": "blr",
            "n_data": self.n_data,
            "dim": self.dim,
            "prior_var": self.prior_var,
            "data": _digest(self.features, self.labels),
        }


def generate_mixture_data(rng, n_data, theta_star=(0.5, 0.0)):
    """Draw ``n_data`` points from the 1:2 mixture centred at ``theta_star``."""
    rng = _as_stream(rng)
    if n_data < 1:
        raise ConfigError("n_data must be >= 1")
    mu1, mu2 = np.asarray(theta_star, dtype=float)
    first = rng.uniform(n_data) < 1.0 / 3.0
    return np.where(first, mu1, mu2) + rng.normal(n_data)


def generate_blr_data(rng, n_data=2000, dim=16, theta_star=None):
    """Synthetic logistic-regression data; returns ``(features, labels, theta_star)``.

    Features are standard normal with a trailing constant column. When
    ``theta_star`` is None it is drawn from ``N(0, I)``.
    """
    rng = _as_stream(rng)
    if dim < 2:
        raise ConfigError("dim must be >= 2 (the constant column counts)")
    if theta_star is None:
        theta_star = rng.normal(dim)
    theta_star = np.asarray(theta_star, dtype=float)
    if theta_star.shape != (dim,):
        raise ConfigError(f"theta_star must have length {dim}")
    X = np.hstack([rng.normal((n_data, dim - 1)), np.ones((n_data, 1))])
    labels = (rng.uniform(n_data) < expit(X @ theta_star)).astype(float)
    return X, labels, theta_star


class CsvFormatError(ConfigError):
    def __init__(self, message, line=None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


def csv_load_blr(path):
    """Load ``(features, labels)`` from a CSV whose last column is a 0/1 label.

    A constant column is appended to the features. A first row made only of
    non-numeric fields is treated as a header.
    """
    rows, labels = [], []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or all(not f.strip() for f in row):
                continue
            if lineno == 1 and not rows and all(not _is_number(f) for f in row):
                continue
            if len(row) < 2:
                raise CsvFormatError("expected at least one feature and a label", lineno)
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise CsvFormatError(f"expected {width} fields, found {len(row)}", lineno)
            try:
                values = [float(f) for f in row[:-1]]
                label = float(row[-1])
            except ValueError as exc:
                raise CsvFormatError(f"could not parse number ({exc})", lineno) from None
            if label not in (0.0, 1.0):
                raise CsvFormatError(f"label must be 0 or 1, got {row[-1].strip()!r}", lineno)
            rows.append(values)
            labels.append(label)
    if not rows:
        raise CsvFormatError(f"{path} contains no records")
    X = np.asarray(rows, dtype=float)
    return np.hstack([X, np.ones((X.shape[0], 1))]), np.asarray(labels)


def csv_write_blr(path, features, labels):
    """Write features (without the constant column) and labels in the loader's format."""
    features = np.asarray(features, dtype=float)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        for row, label in zip(features, labels):
            writer.writerow([repr(float(v)) for v in row] + [str(int(label))])


def _is_number(text):
    try:
        float(text)
    except ValueError:
        return False
    return True
