"""Empirical versus oracle autocorrelation times on the 1-D Gaussian with synthetic gradient noise."""

import csv
import io
from dataclasses import dataclass

import numpy as np

from ..core import RngStream
from ..diagnostics import asymptotic_tau, estimate_iat, linear_gaussian_oracle, oracle_tau
from ..models import GaussianSyntheticModel
from ..samplers import NOGIN

IAT_COLUMNS = ("h", "gamma", "sigma2", "oracle_tau", "asymptotic_tau", "empirical_tau", "steps", "chains")


@dataclass
class IatRow:
    h: float
    gamma: float
    sigma2: float
    oracle_tau: float
    asymptotic_tau: float
    empirical_tau: float = None
    steps: int = 0
    chains: int = 0

    def cells(self):
        def f(x):
            return "" if x is None else format(float(x), ".10g")

        return [f(self.h), f(self.gamma), f(self.sigma2), f(self.oracle_tau), f(self.asymptotic_tau),
                f(self.empirical_tau), str(self.steps), str(self.chains)]


def stationary_start(oracle, chains, rng):
    """Draw ``(theta, p)`` for ``chains`` chains from the exact stationary law of the linear recursion."""
    cov = oracle.stationary_covariance()
    L = np.linalg.cholesky(0.5 * (cov + cov.T))
    z = rng.normal((chains, 2)) @ L.T
    return z[:, :1].copy(), z[:, 1:].copy()


def empirical_tau(h, gamma, sigma2, n_steps, chains=64, seed=0):
    """IAT of ``z . v`` estimated from ``chains`` lockstep NOGIN chains of ``n_steps`` steps.

    Returns ``(IatResult, oracle)``. Chains start in stationarity, so no
    burn-in is needed.
    """
    oracle = linear_gaussian_oracle(h, gamma, sigma2)
    if oracle.oscillatory:
        raise ValueError(f"no real slow direction at h={h}, gamma={gamma}, sigma2={sigma2}")
    rng = RngStream(seed, 0)
    theta0, p0 = stationary_start(oracle, chains, rng)
    model = GaussianSyntheticModel(0.0, 1.0, sigma2)
    sampler = NOGIN(h=h, gamma=gamma, seed=seed)
    proj = np.empty((n_steps, chains))

    def record(i, state):
        proj[i] = oracle.project(state.theta[:, 0], state.p[:, 0])

    sampler.sample(model, n_steps, theta0=theta0, p0=p0, rng=rng, callback=record)
    return estimate_iat(proj.T), oracle


def iat_table(hs, gammas, sigma2s, n_steps=0, chains=64, seed=0):
    rows = []
    for h in hs:
        for gamma in gammas:
            for s2 in sigma2s:
                tau = oracle_tau(h, gamma, s2)
                row = IatRow(h, gamma, s2, getattr(tau, "tau", tau), asymptotic_tau(h, s2))
                if n_steps and row.oracle_tau is not None:
                    res, _ = empirical_tau(h, gamma, s2, n_steps, chains, seed)
                    row.empirical_tau, row.steps, row.chains = res.tau, n_steps, chains
                rows.append(row)
    return rows


def iat_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(IAT_COLUMNS)
    writer.writerows(r.cells() for r in rows)
    return buf.getvalue()


def format_table(rows):
    head = f"{'h':>8} {'gamma':>7} {'sigma2':>10} {'oracle_tau':>12} {'4/h^2+C^2-1':>12} {'empirical':>10}"
    lines = [head]
    for r in rows:
        orc = "oscill." if r.oracle_tau is None else f"{r.oracle_tau:12.4f}"
        emp = "" if r.empirical_tau is None else f"{r.empirical_tau:10.3f}"
        lines.append(f"{r.h:8.4g} {r.gamma:7.3g} {r.sigma2:10.4g} {orc:>12} {r.asymptotic_tau:12.4f} {emp:>10}")
    return "\n".join(lines)
