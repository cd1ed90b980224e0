"""Minibatch force estimation and running covariance estimates of the gradient noise."""

from collections import deque
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, ModelEvaluationError
from .lowrank import DEFAULT_RANK_CAP, LowRankPSD


@dataclass(frozen=True)
class NoisyForce:
    """An unbiased force estimate together with an estimate of its covariance."""

    value: np.ndarray
    covariance: LowRankPSD
    batch_indices: object = None
    cost: int = 0


class CovarianceTracker:
    """Exponentially weighted history of centered per-datum force columns.

    Each update contributes a batch estimate ``S_b = scale * C_b C_b^T``; the
    emitted operator is the weighted average ``sum_b w_b S_b / sum_b w_b``
    where the newest batch has weight 1 and older weights are multiplied by
    ``decay`` at every update. Batches are stored compressed to at most
    ``min(D, rank_cap)`` columns (exact when the batch rank fits), and whole
    batches are evicted oldest first once the stored rank exceeds ``rank_cap``.
    The emitted factor is compressed the same way, so its rank never exceeds
    ``min(D, rank_cap)``.

    With ``include_current=False`` an update returns the estimate formed from
    earlier batches only (the newest batch still enters the history). The
    force noise and its covariance estimate are then independent given the
    past, which removes a bias that is strong for very small batches. The
    first update, with no history yet, falls back to the current batch.
    """

    def __init__(self, dim, decay=0.9, rank_cap=DEFAULT_RANK_CAP, include_current=True):
        if not 0.0 < decay <= 1.0:
            raise ConfigError(f"decay must lie in (0, 1], got {decay}")
        if rank_cap < 1:
            raise ConfigError(f"rank_cap must be >= 1, got {rank_cap}")
        self.dim = int(dim)
        self.decay = float(decay)
        self.rank_cap = int(rank_cap)
        self.include_current = bool(include_current)
        self._batches = deque()  # (weight, columns scaled by sqrt(scale))
        self._current = LowRankPSD.zeros(self.dim)

    def __len__(self):
        return len(self._batches)

    def current(self):
        return self._current

    def reset(self):
        self._batches.clear()
        self._current = LowRankPSD.zeros(self.dim)

    def _compress(self, cols):
        """Return a factor with at most ``min(D, rank_cap)`` columns and the same (or best truncated) outer product."""
        if cols.shape[1] <= min(self.dim, self.rank_cap):
            return cols
        if self.dim <= self.rank_cap:
            # exact: eigen-decompose the small D x D outer product
            w, V = np.linalg.eigh(cols @ cols.T)
            keep = w > max(w[-1], 0.0) * 1e-13
            return V[:, keep][:, ::-1] * np.sqrt(w[keep][::-1])
        # L L^T = U diag(s^2) U^T, so U diag(s) reproduces the outer product
        U, s, _ = np.linalg.svd(cols, full_matrices=False)
        k = min(self.rank_cap, int(np.sum(s > s[0] * 1e-13)) if s.size and s[0] > 0 else 0)
        return U[:, :k] * s[:k]

    def update(self, columns, scale):
        columns = np.asarray(columns, dtype=float)
        if columns.ndim != 2 or columns.shape[0] != self.dim:
            raise ValueError(f"columns must have shape ({self.dim}, m), got {columns.shape}")
        if scale < 0:
            raise ValueError(f"scale must be non-negative, got {scale}")
        previous = self._current
        had_history = any(c.shape[1] for _, c in self._batches)
        for i, (w, c) in enumerate(self._batches):
            self._batches[i] = (w * self.decay, c)
        cols = self._compress(np.sqrt(scale) * columns) if scale > 0 else np.zeros((self.dim, 0))
        self._batches.append((1.0, cols))
        while len(self._batches) > 1 and sum(c.shape[1] for _, c in self._batches) > self.rank_cap:
            self._batches.popleft()
        total = sum(w for w, _ in self._batches)
        stacked = [np.sqrt(w / total) * c for w, c in self._batches if c.shape[1]]
        if stacked:
            cols = self._compress(np.hstack(stacked)) if len(stacked) > 1 else stacked[0]
            self._current = LowRankPSD(cols, alpha=0.0, c=1.0, rank_cap=None)
        else:
            self._current = LowRankPSD.zeros(self.dim)
        if not self.include_current and had_history:
            return previous
        return self._current


def tracker_update(tracker, columns, scale):
    return tracker.update(columns, scale)


def true_force(model, theta):
    """Full-data force: prior gradient plus the sum of all per-datum gradients."""
    force = model.force(theta)
    if not np.all(np.isfinite(force)):
        raise ModelEvaluationError(f"non-finite force at theta={theta}")
    return force


def minibatch_force(model, theta, n, rng, tracker=None, covariance=True):
    """Scaled-sum minibatch estimator with a within-batch covariance estimate.

    The batch is drawn uniformly without replacement; with ``n == N`` the whole
    dataset is used without consuming randomness and the covariance is zero.
    With ``covariance=False`` no estimate is formed and ``covariance`` is None.
    """
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 1:
        raise ValueError("minibatch forces are evaluated for a single chain (1-D theta)")
    N = model.n_data
    if not 1 <= n <= N:
        raise ConfigError(f"batch size must satisfy 1 <= n <= N={N}, got {n}")
    if n == N:
        # the full batch is the exact force and carries no sampling noise
        value = true_force(model, theta)
        idx = np.arange(N)
    else:
        idx = np.sort(rng.choice(N, n))
        grads = model.datum_grads(theta, idx)
        value = model.prior_grad(theta) + (N / n) * grads.sum(axis=0)
        if not np.all(np.isfinite(value)):
            raise ModelEvaluationError(f"non-finite minibatch force at theta={theta}")
    if not covariance:
        return NoisyForce(value=value, covariance=None, batch_indices=idx, cost=n)
    if tracker is None:
        tracker = CovarianceTracker(model.dim, decay=1.0)
    if n == N:
        cov = tracker.update(np.zeros((model.dim, 0)), 0.0)
    elif n >= 2:
        cols = (grads - grads.mean(axis=0)).T
        scale = N * (N - n) / n / (n - 1)
        cov = tracker.update(cols, scale)
    else:
        cov = tracker.current()
    return NoisyForce(value=value, covariance=cov, batch_indices=idx, cost=n)
