"""Posterior-averaged logistic regression classifier backed by the samplers."""

import numpy as np
from scipy.special import expit
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .exceptions import ConfigError
from .models import BlrModel
from .samplers import make_sampler


class BayesianLogisticRegression(ClassifierMixin, BaseEstimator):
    """Binary logistic regression with a ``N(0, prior_var * I)`` prior, fitted by sampling.

    Predictions average the logistic link over the retained posterior draws.

    Parameters
    ----------
    method : str
        Sampler name (see ``noisygrad.samplers.SAMPLERS``).
    h : float
        Sampler stepsize.
    batch_size : int or None
        Minibatch size for stochastic-gradient methods; None uses all rows.
    n_steps, burn_in : int
        Chain length and number of leading draws discarded.
    prior_var : float
        Prior variance of every coefficient, intercept included.
    seed : int
    sampler_params : dict or None
        Extra keyword arguments for the sampler (``gamma``, ``decay``, ...).
    """

    def __init__(self, method="nogin", h=0.05, batch_size=None, n_steps=2000, burn_in=500,
                 prior_var=100.0, seed=0, sampler_params=None):
        self.method = method
        self.h = h
        self.batch_size = batch_size
        self.n_steps = n_steps
        self.burn_in = burn_in
        self.prior_var = prior_var
        self.seed = seed
        self.sampler_params = sampler_params

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float)
        check_classification_targets(y)
        self.classes_, labels = np.unique(y, return_inverse=True)
        if self.classes_.size != 2:
            raise ValueError(f"expected two classes, got {self.classes_.size}")
        if not 0 <= self.burn_in < self.n_steps:
            raise ConfigError("burn_in must satisfy 0 <= burn_in < n_steps")
        self.n_features_in_ = X.shape[1]
        model = BlrModel(np.hstack([X, np.ones((X.shape[0], 1))]), labels, self.prior_var)
        params = dict(self.sampler_params or {})
        params.update(h=self.h, batch_size=self.batch_size, seed=self.seed)
        self.sampler_ = make_sampler(self.method, **params)
        self.trajectory_ = self.sampler_.sample(model, self.n_steps, theta0=np.zeros(model.dim))
        self.coef_samples_ = self.trajectory_.samples[self.burn_in:]
        mean = self.coef_samples_.mean(axis=0)
        self.coef_ = mean[None, :-1]
        self.intercept_ = mean[-1:]
        return self

    def decision_function(self, X):
        check_is_fitted(self, "coef_samples_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_[0] + self.intercept_[0]

    def predict_proba(self, X):
        check_is_fitted(self, "coef_samples_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        draws = self.coef_samples_
        p1 = expit(X @ draws[:, :-1].T + draws[:, -1]).mean(axis=1)
        return np.column_stack([1.0 - p1, p1])

    def predict(self, X):
        proba = self.predict_proba(X)
        return self.classes_[(proba[:, 1] >= 0.5).astype(int)]
