"""Covariance operators of the form ``alpha * I + c * L L^T`` with a thin factor ``L``.

All operations work along the last axis of their vector argument, so a
``(K, D)`` array is treated as ``K`` independent vectors. Nothing here forms
the ``D x D`` matrix except :meth:`LowRankPSD.to_dense`.
"""

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, cg

from .exceptions import NumericalError

DEFAULT_RANK_CAP = 32
SMALL_DIM = 64


class LowRankPSD:
    """Symmetric PSD operator ``S = alpha * I + c * columns @ columns.T``.

    Parameters
    ----------
    columns : array of shape (D, r)
        Thin factor. Columns are ordered oldest first; when ``r`` exceeds
        ``rank_cap`` the oldest columns are dropped.
    alpha, c : float
        Non-negative scalar shift and outer-product scale.
    rank_cap : int or None
        Maximum number of retained columns; ``None`` disables the cap.
    cg_threshold : int or None
        Rank above which :meth:`solve_shifted` defaults to conjugate gradients.
        ``None`` means ``D / 2`` for ``D > SMALL_DIM`` and never otherwise,
        since for small ``D`` the Woodbury core is cheaper than iterating.
    """

    def __init__(self, columns, alpha=0.0, c=1.0, rank_cap=DEFAULT_RANK_CAP, cg_threshold=None):
        columns = np.asarray(columns, dtype=float)
        if columns.ndim == 1:
            columns = columns[:, None]
        if columns.ndim != 2:
            raise ValueError(f"columns must be a (D, r) matrix, got shape {columns.shape}")
        if alpha < 0 or c < 0:
            raise ValueError(f"alpha and c must be non-negative, got alpha={alpha}, c={c}")
        if rank_cap is not None and columns.shape[1] > rank_cap:
            columns = columns[:, -rank_cap:]
        self.columns = columns
        self.alpha = float(alpha)
        self.c = float(c)
        self.rank_cap = rank_cap
        self.cg_threshold = cg_threshold
        self._gram_eig = None
        self._core_cache = {}

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros((dim, 0)), alpha=0.0, c=0.0)

    @classmethod
    def scaled_identity(cls, dim, alpha):
        return cls(np.zeros((dim, 0)), alpha=alpha, c=0.0)

    @property
    def dim(self):
        return self.columns.shape[0]

    @property
    def rank(self):
        return self.columns.shape[1]

    @property
    def is_zero(self):
        return self.alpha == 0.0 and (self.c == 0.0 or self.rank == 0 or not self.columns.any())

    def _check(self, v):
        if type(v) is not np.ndarray:
            v = np.asarray(v, dtype=float)
        if v.shape[-1] != self.dim:
            raise ValueError(f"vector has length {v.shape[-1]}, operator has dimension {self.dim}")
        return v

    def apply(self, v):
        """Return ``alpha * v + c * L (L^T v)``."""
        v = self._check(v)
        out = self.alpha * v
        if self.rank and self.c:
            out = out + self.c * ((v @ self.columns) @ self.columns.T)
        return out

    def to_dense(self):
        return self.alpha * np.eye(self.dim) + self.c * self.columns @ self.columns.T

    def _gram_eigh(self):
        if self._gram_eig is None:
            if self.rank == 0:
                self._gram_eig = (np.zeros(0), np.zeros((0, 0)))
            else:
                w, V = np.linalg.eigh(self.columns.T @ self.columns)
                self._gram_eig = (np.clip(w, 0.0, None), V)
        return self._gram_eig

    def eig_bounds(self):
        """Return ``(lambda_min, lambda_max)`` of the operator.

        The nonzero spectrum of ``L L^T`` equals that of the ``r x r`` Gram
        matrix ``L^T L``, which is diagonalized directly.
        """
        w, _ = self._gram_eigh()
        if w.size == 0 or self.c == 0.0:
            return self.alpha, self.alpha
        lam_max = self.alpha + self.c * w[-1]
        lam_min = self.alpha if self.rank < self.dim else self.alpha + self.c * w[0]
        return lam_min, lam_max

    def shifted_bounds(self, a, b):
        """Spectral bounds of ``a * I + b * S``."""
        lo, hi = self.eig_bounds()
        ends = (a + b * lo, a + b * hi)
        return min(ends), max(ends)

    def solve_shifted(self, a, b, v, method="auto"):
        """Return ``x`` solving ``(a * I + b * S) x = v``.

        ``method`` is ``"woodbury"``, ``"cg"`` or ``"auto"`` (Woodbury unless
        the rank exceeds the CG threshold).
        """
        v = self._check(v)
        a0 = a + b * self.alpha
        if ("checked", a, b) not in self._core_cache:
            lo, _ = self.shifted_bounds(a, b)
            if not lo > 0:
                raise NumericalError(
                    f"shifted operator a*I + b*S is not positive definite (lambda_min bound {lo:.6g})"
                )
            self._core_cache[("checked", a, b)] = True
        bc = b * self.c
        if self.rank == 0 or bc == 0.0:
            return v / a0
        if method == "auto":
            method = "cg" if self.rank > self._cg_threshold() else "woodbury"
        if method == "woodbury":
            return self._solve_woodbury(a0, bc, v)
        if method == "cg":
            return self._solve_cg(a, b, v)
        raise ValueError(f"unknown solve method {method!r}")

    def _cg_threshold(self):
        if self.cg_threshold is not None:
            return self.cg_threshold
        return self.dim / 2 if self.dim > SMALL_DIM else np.inf

    def _solve_woodbury(self, a0, bc, v):
        # (a0 I + bc L L^T)^{-1} = (I - bc L (a0 I + bc L^T L)^{-1} L^T) / a0
        key = (a0, bc)
        factor = self._core_cache.get(key)
        if factor is None:
            core = bc * (self.columns.T @ self.columns) + a0 * np.eye(self.rank)
            try:
                factor = linalg.cho_factor(core, lower=True)
            except linalg.LinAlgError as exc:
                raise NumericalError("Woodbury core matrix is not positive definite") from exc
            if len(self._core_cache) > 8:
                self._core_cache.clear()
            self._core_cache[key] = factor
        y = linalg.cho_solve(factor, (v @ self.columns).T).T
        return (v - bc * (y @ self.columns.T)) / a0

    def _solve_cg(self, a, b, v, tol=1e-10, maxiter=None):
        n = self.dim
        maxiter = 5 * n if maxiter is None else maxiter
        op = LinearOperator((n, n), matvec=lambda x: a * x + b * self.apply(x), dtype=float)
        flat = v.reshape(-1, n)
        out = np.empty_like(flat)
        for i, rhs in enumerate(flat):
            x, info = cg(op, rhs, rtol=tol, atol=0.0, maxiter=maxiter)
            if info < 0:
                raise NumericalError(f"conjugate gradient breakdown (info={info})")
            out[i] = x
        return out.reshape(v.shape)

    def function_apply(self, func, a, b, v):
        """Return ``f(a * I + b * S) v`` for a scalar function ``f`` applied spectrally.

        ``f`` must accept and return float arrays. Uses a thin SVD of the
        factor, so the cost is O(D r^2).
        """
        v = self._check(v)
        base = a + b * self.alpha
        f_base = func(np.asarray([base]))[0]
        out = f_base * v
        if self.rank and self.c:
            w, V = self._gram_eigh()
            keep = w > w.max() * 1e-14 if w.size else w > 0
            if np.any(keep):
                # orthonormal basis of range(L): U = L V diag(w^{-1/2})
                U = self.columns @ (V[:, keep] / np.sqrt(w[keep]))
                gain = func(base + b * self.c * w[keep]) - f_base
                out = out + ((v @ U) * gain) @ U.T
        return out

    def transformed(self, mass):
        """Return ``L_M^{-1} S L_M^{-T}`` for mass ``M = L_M L_M^T``.

        Requires ``alpha == 0`` unless the mass is the identity, since
        otherwise the result is not of scalar-plus-low-rank form.
        """
        if mass.is_identity:
            return self
        if self.alpha != 0.0:
            raise ValueError("a non-zero diagonal shift cannot be combined with a non-identity mass")
        cols = mass.whiten(self.columns.T).T
        return LowRankPSD(cols, alpha=0.0, c=self.c, rank_cap=None, cg_threshold=self.cg_threshold)

    def __repr__(self):
        return f"LowRankPSD(dim={self.dim}, rank={self.rank}, alpha={self.alpha:g}, c={self.c:g})"


def apply(S, v):
    return S.apply(v)


def solve_shifted(S, a, b, v, method="auto"):
    return S.solve_shifted(a, b, v, method=method)


def eig_bounds(S):
    return S.eig_bounds()
