"""Autocorrelation analysis, linear-Gaussian oracles and MSE-vs-epoch curves."""

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .exceptions import ConfigError, NumericalError
from .samplers.integrators import injected_noise_scale

MIN_SERIES_LENGTH = 100


class ReferenceMissingError(ConfigError):
    """Raised when reference moments are needed but absent."""


# ---------------------------------------------------------------------------
# integrated autocorrelation time


@dataclass(frozen=True)
class IatResult:
    acf: np.ndarray
    tau: float
    window: int

    @property
    def ess_fraction(self):
        return 1.0 / self.tau if self.tau > 0 else math.inf


def autocovariance(series, max_lag=None):
    """FFT autocovariance of a 1-D series, or the average over rows of a 2-D ``(chains, T)`` array.

    Each row is centred on the pooled mean, which keeps the estimator
    consistent when chains are started from the stationary law.
    """
    x = np.asarray(series, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise ValueError(f"series must be 1-D or (chains, length), got shape {x.shape}")
    n = x.shape[1]
    max_lag = n - 1 if max_lag is None else min(int(max_lag), n - 1)
    x = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    f = np.fft.rfft(x, n=size, axis=1)
    acov = np.fft.irfft(f * np.conj(f), n=size, axis=1)[:, : max_lag + 1]
    return acov.mean(axis=0) / n


def estimate_iat(series, c=5.0, max_lag=None):
    """Integrated autocorrelation time with Sokal's self-consistent window.

    The window is the smallest lag ``M`` with ``M >= c * tau(M)`` where
    ``tau(M) = 1 + 2 * sum_{k=1..M} acf(k)``.
    """
    x = np.asarray(series, dtype=float)
    length = x.shape[-1]
    if length < MIN_SERIES_LENGTH:
        raise ValueError(f"series length {length} is below the minimum of {MIN_SERIES_LENGTH}")
    if not np.all(np.isfinite(x)):
        raise ValueError("series contains non-finite values")
    acov = autocovariance(x, max_lag)
    if not acov[0] > 1e-300 or np.ptp(x) == 0:
        raise ValueError("series has zero variance; autocorrelation is undefined")
    acf = acov / acov[0]
    taus = 1.0 + 2.0 * np.cumsum(acf[1:])
    lags = np.arange(1, acf.size)
    ok = lags >= c * taus
    window = int(lags[np.argmax(ok)]) if ok.any() else int(lags[-1])
    return IatResult(acf=acf, tau=float(taus[window - 1]), window=window)


# ---------------------------------------------------------------------------
# linear-Gaussian oracle


@dataclass(frozen=True)
class OscillatoryRegime:
    """Dominant eigenvalues of the propagation matrix form a complex pair; no real slow direction."""

    h: float
    gamma: float
    sigma2: float
    eigenvalues: np.ndarray
    spectral_radius: float

    tau = None


@dataclass(frozen=True)
class LinearGaussianOracle:
    """One noisy-gradient step on the 1-D standard normal with noise variance ``sigma2``.

    ``z_{k+1} = A z_k + noise`` for ``z = (theta, p)``. ``v`` is the
    eigenvector of ``A^T`` for ``lambda_max``, so ``z . v`` is an AR(1)
    process with coefficient ``lambda_max``. When the eigenvalues are a
    complex pair, ``oscillatory`` is set and ``lambda_max``/``v`` are undefined.
    """

    h: float
    gamma: float
    sigma2: float
    damping: float
    A: np.ndarray
    noise: np.ndarray
    eigenvalues: np.ndarray
    lambda_max: float
    v: np.ndarray
    oscillatory: bool = False

    @property
    def spectral_radius(self):
        return float(np.max(np.abs(self.eigenvalues)))

    @property
    def tau(self):
        if self.oscillatory:
            return None
        lam = self.lambda_max
        return (1.0 + lam) / (1.0 - lam)

    def project(self, theta, p):
        return self.v[0] * np.asarray(theta) + self.v[1] * np.asarray(p)

    def stationary_covariance(self):
        """Solves ``C = A C A^T + Q`` for the 2x2 stationary covariance of ``(theta, p)``."""
        return linalg.solve_discrete_lyapunov(self.A, self.noise)


def _propagation(h, gamma, sigma2):
    lam2 = injected_noise_scale(h, gamma) ** 2
    k = 0.25 * h * h * sigma2
    g = (1.0 - lam2 - k) / (1.0 + lam2 + k)
    drift = np.array([[1.0, 0.5 * h], [0.0, 1.0]])
    kick = np.array([[1.0, 0.0], [-0.5 * h, 1.0]])
    damp = np.diag([1.0, g])
    A = drift @ kick @ damp @ kick @ drift
    # both kicks carry (h/2) sigma xi + lam R; damping maps u -> g u, so p gains (1 + g) u
    u = drift @ np.array([0.0, 1.0])
    q = (1.0 + g) ** 2 * (0.25 * h * h * sigma2 + lam2)
    return g, A, q * np.outer(u, u)


def linear_gaussian_oracle(h, gamma, sigma2):
    """Build the propagation matrix by composing drift, kick, damping, kick and drift."""
    if not h > 0 or gamma < 0 or sigma2 < 0:
        raise ValueError(f"need h > 0, gamma >= 0, sigma2 >= 0; got {h}, {gamma}, {sigma2}")
    g, A, Q = _propagation(h, gamma, sigma2)
    tr, det = np.trace(A), np.linalg.det(A)
    disc = tr * tr - 4.0 * det
    eig = np.linalg.eigvals(A)
    if disc < 0:
        return LinearGaussianOracle(h, gamma, sigma2, g, A, Q, eig, math.nan, None, oscillatory=True)
    lam = 0.5 * (tr + math.sqrt(disc))
    # left eigenvector: (A^T - lam I) v = 0
    a, b = A[0]
    c, d = A[1]
    v = np.array([c, lam - a]) if abs(c) + abs(lam - a) > abs(d - lam) + abs(b) else np.array([lam - d, b])
    v = v / np.linalg.norm(v)
    if v[0] < 0 or (v[0] == 0 and v[1] < 0):
        v = -v
    return LinearGaussianOracle(h, gamma, sigma2, g, A, Q, np.sort(eig.real), float(lam), v)


def closed_form_tau(h, sigma2):
    """Closed-form IAT of the slow direction when no extra noise is injected (``gamma = 0``).

    With ``G = (1 - C^2 h^2/4) / (1 + C^2 h^2/4)`` the trace and determinant of
    ``A`` are ``(1 + G)(1 - h^2/2)`` and ``G``, which gives

        tau = (8 + (C^2 - 2) h^2 + h s) / ((C^2 + 2) h^2 - h s),   s = sqrt(h^2 (C^4 + 4) - 16).

    Returns None where ``s`` is imaginary (oscillatory regime).
    """
    rad = h * h * (sigma2 * sigma2 + 4.0) - 16.0
    if rad < 0:
        return None
    s = math.sqrt(rad)
    return (8.0 + (sigma2 - 2.0) * h * h + h * s) / ((sigma2 + 2.0) * h * h - h * s)


def asymptotic_tau(h, sigma2):
    """The large-noise approximation ``4/h^2 + C^2 - 1`` quoted alongside the closed form."""
    return 4.0 / (h * h) + sigma2 - 1.0


def oracle_tau(h, gamma, sigma2, rtol=1e-6):
    """IAT of the slowest linear observable, ``(1 + lam) / (1 - lam)``.

    Returns a float, or an :class:`OscillatoryRegime` when the dominant
    eigenvalues are complex; raises NumericalError when the recursion is unstable. For ``gamma = 0`` the numerical value is checked
    against :func:`closed_form_tau`; a mismatch raises NumericalError.
    """
    oracle = linear_gaussian_oracle(h, gamma, sigma2)
    if not oracle.spectral_radius < 1.0:
        raise NumericalError(
            f"propagation matrix is unstable at h={h} (spectral radius {oracle.spectral_radius:.6g})"
        )
    if oracle.oscillatory:
        return OscillatoryRegime(h, gamma, sigma2, oracle.eigenvalues, oracle.spectral_radius)
    if not oracle.lambda_max < 1.0:
        raise NumericalError(f"propagation matrix is not contracting (lambda_max={oracle.lambda_max:.6g})")
    tau = oracle.tau
    if gamma == 0:
        closed = closed_form_tau(h, sigma2)
        if closed is not None and abs(closed - tau) > rtol * abs(tau):
            raise NumericalError(f"closed-form tau {closed:.10g} disagrees with eigenvalue tau {tau:.10g}")
    return tau


# ---------------------------------------------------------------------------
# MSE curves


@dataclass(frozen=True)
class MseCurve:
    epochs: np.ndarray
    values: np.ndarray
    mse: np.ndarray
    observable: str

    def __len__(self):
        return self.epochs.size

    def __iter__(self):
        return iter(zip(self.epochs.tolist(), self.mse.tolist()))


def log_checkpoints(final_epoch, first=1.0, per_decade=32):
    """Epoch checkpoints ``first * 10**(k / per_decade)`` up to ``final_epoch``, plus ``final_epoch`` itself."""
    if final_epoch < first:
        return np.empty(0)
    n = int(math.floor(per_decade * math.log10(final_epoch / first) + 1e-9))
    grid = first * 10.0 ** (np.arange(n + 1) / per_decade)
    if grid[-1] < final_epoch * (1 - 1e-12):
        grid = np.append(grid, final_epoch)
    return grid


def _reference_value(reference, observable):
    if reference is None:
        raise ReferenceMissingError("no reference moments; run the `reference` command first")
    value = reference[observable] if isinstance(reference, dict) else getattr(reference, observable)
    return np.asarray(value, dtype=float)


def running_moments(samples, counts):
    """Running mean and variance of ``samples[:k]`` for each ``k`` in ``counts``."""
    x = np.asarray(samples, dtype=float)
    s1 = np.cumsum(x, axis=0)
    s2 = np.cumsum(x * x, axis=0)
    idx = np.asarray(counts, dtype=int) - 1
    k = np.asarray(counts, dtype=float).reshape((-1,) + (1,) * (x.ndim - 1))
    mean = s1[idx] / k
    var = np.maximum(s2[idx] / k - mean * mean, 0.0)
    return mean, var


def mse_curve(trajectory, reference, observable="variance", first=1.0, per_decade=32, burn_in=0):
    """Squared error of a running average against reference moments at log-spaced epochs.

    ``observable`` is ``"variance"`` or ``"mean"``. The error is averaged over
    components (and over chains for lockstep trajectories). ``burn_in``
    discards that many leading samples from the running averages.
    """
    if observable not in ("variance", "mean"):
        raise ConfigError(f"observable must be 'variance' or 'mean', got {observable!r}")
    ref = _reference_value(reference, observable)
    samples = trajectory.samples[burn_in:]
    epochs = trajectory.epochs[burn_in:]
    empty = MseCurve(np.empty(0), np.empty((0,) + samples.shape[1:]), np.empty(0), observable)
    if samples.shape[0] < 2:
        return empty
    checkpoints = log_checkpoints(trajectory.total_epochs if epochs.size == 0 else epochs[-1], first, per_decade)
    # number of samples recorded by each checkpoint
    counts = np.searchsorted(epochs, checkpoints * (1 + 1e-12), side="right")
    counts = np.unique(counts[counts >= 2])
    if counts.size == 0:
        return empty
    # report the cost actually spent by the last sample in each average
    checkpoints = epochs[counts - 1]
    mean, var = running_moments(samples, counts)
    values = var if observable == "variance" else mean
    err = (values - ref) ** 2
    mse = err.reshape(err.shape[0], -1).mean(axis=1)
    return MseCurve(checkpoints, values, mse, observable)


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    lx, ly = np.log(np.asarray(x, dtype=float)), np.log(np.asarray(y, dtype=float))
    return float(np.polyfit(lx, ly, 1)[0])
