import math

import numpy as np
import pytest

from noisygrad.core import Trajectory
from noisygrad.diagnostics import (
    OscillatoryRegime,
    ReferenceMissingError,
    asymptotic_tau,
    autocovariance,
    closed_form_tau,
    estimate_iat,
    linear_gaussian_oracle,
    log_checkpoints,
    loglog_slope,
    mse_curve,
    oracle_tau,
    running_moments,
)
from noisygrad.exceptions import ConfigError


def ar1(rho, length, chains, seed):
    rng = np.random.default_rng(seed)
    x = np.empty((chains, length))
    x[:, 0] = rng.standard_normal(chains)
    eps = rng.standard_normal((chains, length)) * math.sqrt(1 - rho * rho)
    for t in range(1, length):
        x[:, t] = rho * x[:, t - 1] + eps[:, t]
    return x


def step_matrix(h, gamma, sigma2):
    """One noisy-gradient step on the standard normal, composed map by map."""
    lam2 = math.tanh(gamma * h / 2)
    k = h * h / 4
    G = (1 - lam2 - k * sigma2) / (1 + lam2 + k * sigma2)
    drift = np.array([[1, h / 2], [0, 1]])
    kick = np.array([[1, 0], [-h / 2, 1]])
    damp = np.diag([1.0, G])
    return drift @ kick @ damp @ kick @ drift


class TestIat:
    def test_ar1(self):
        rho = 0.8
        res = estimate_iat(ar1(rho, 20_000, 16, 0))
        assert res.tau == pytest.approx((1 + rho) / (1 - rho), rel=0.05)
        assert res.ess_fraction == pytest.approx(1 / res.tau)
        assert res.acf[0] == 1.0

    def test_white_noise(self):
        res = estimate_iat(np.random.default_rng(1).standard_normal(50_000))
        assert res.tau == pytest.approx(1.0, abs=0.05)

    def test_autocovariance_matches_direct_sum(self):
        x = np.random.default_rng(2).standard_normal((3, 200))
        acov = autocovariance(x, max_lag=5)
        xc = x - x.mean()
        direct = [np.mean([np.sum(r[: 200 - k] * r[k:]) / 200 for r in xc]) for k in range(6)]
        np.testing.assert_allclose(acov, direct, rtol=1e-10)

    @pytest.mark.parametrize("bad", [np.ones(50), np.ones(500), np.r_[np.zeros(200), np.nan]])
    def test_invalid_series(self, bad):
        with pytest.raises(ValueError):
            estimate_iat(bad)


class TestOracle:
    @pytest.mark.parametrize("h,gamma,s2", [(0.1, 1.0, 50.0), (0.2, 0.5, 4.0), (0.05, 0.0, 500.0)])
    def test_matrix_is_the_composed_step(self, h, gamma, s2):
        o = linear_gaussian_oracle(h, gamma, s2)
        np.testing.assert_allclose(o.A, step_matrix(h, gamma, s2), rtol=1e-13, atol=1e-15)

    @pytest.mark.parametrize("h", [0.2, 0.5, 1.0])
    def test_stationary_covariance_is_the_perturbed_law(self, h):
        c = linear_gaussian_oracle(h, 1.0, 4.0).stationary_covariance()
        np.testing.assert_allclose(c, np.diag([1.0, 1.0 / (1 - h * h / 4)]), rtol=1e-10, atol=1e-12)

    def test_tau_from_slowest_eigenvalue(self):
        o = linear_gaussian_oracle(0.1, 1.0, 100.0)
        lam = np.max(np.linalg.eigvals(step_matrix(0.1, 1.0, 100.0)).real)
        assert o.lambda_max == pytest.approx(lam, rel=1e-12)
        assert oracle_tau(0.1, 1.0, 100.0) == pytest.approx((1 + lam) / (1 - lam), rel=1e-10)
        # v is a left eigenvector, so z.v is AR(1) with coefficient lambda_max
        np.testing.assert_allclose(o.A.T @ o.v, o.lambda_max * o.v, rtol=1e-10, atol=1e-14)

    @pytest.mark.parametrize("h,s2", [(0.1, 50.0), (0.1, 100.0), (0.1, 500.0), (0.2, 100.0)])
    def test_closed_form_matches_eigenvalues(self, h, s2):
        lam = np.max(np.linalg.eigvals(step_matrix(h, 0.0, s2)).real)
        assert closed_form_tau(h, s2) == pytest.approx((1 + lam) / (1 - lam), rel=1e-10)

    def test_oscillatory_regime(self):
        res = oracle_tau(0.05, 0.0, 50.0)
        assert isinstance(res, OscillatoryRegime) and res.tau is None
        assert closed_form_tau(0.05, 50.0) is None
        assert res.spectral_radius < 1

    def test_asymptotic_value(self):
        assert asymptotic_tau(0.1, 100.0) == pytest.approx(499.0)

    def test_large_noise_growth_is_linear_in_sigma2(self):
        assert oracle_tau(0.1, 1.0, 1e6) / 1e6 == pytest.approx(1.0, abs=1e-3)


class TestMseCurves:
    def test_log_checkpoints(self):
        np.testing.assert_allclose(log_checkpoints(300, 1, 1), [1, 10, 100, 300])
        np.testing.assert_allclose(log_checkpoints(100, 1, 2), [1, 10**0.5, 10, 10**1.5, 100])
        assert log_checkpoints(0.5).size == 0

    def test_running_moments(self):
        x = np.random.default_rng(3).standard_normal((50, 2))
        mean, var = running_moments(x, [5, 50])
        np.testing.assert_allclose(mean[0], x[:5].mean(axis=0))
        np.testing.assert_allclose(var[1], x.var(axis=0))

    def test_curve_uses_epochs_actually_spent(self):
        traj = Trajectory(n_data=10)
        rng = np.random.default_rng(4)
        x = rng.standard_normal((200, 1))
        for row in x:
            traj.record_step(row, 5)  # half an epoch per step
        curve = mse_curve(traj, {"variance": [1.0]}, first=1.0, per_decade=4)
        assert curve.epochs[-1] == 100.0
        assert set(np.round(curve.epochs * 2).astype(int)) <= set(range(1, 201))
        k = int(curve.epochs[3] * 2)
        assert curve.mse[3] == pytest.approx((x[:k].var() - 1.0) ** 2)
        assert list(curve)[-1] == (100.0, curve.mse[-1])

    def test_mean_observable_and_errors(self):
        traj = Trajectory(n_data=1)
        for v in range(10):
            traj.record_step(np.array([float(v)]), 1)
        curve = mse_curve(traj, {"mean": [0.0]}, observable="mean")
        assert curve.values[-1][0] == 4.5
        with pytest.raises(ConfigError):
            mse_curve(traj, {"mean": [0.0]}, observable="median")
        with pytest.raises(ReferenceMissingError):
            mse_curve(traj, None)

    def test_short_trajectory_gives_empty_curve(self):
        traj = Trajectory(n_data=1)
        traj.record_step(np.zeros(1), 1)
        assert len(mse_curve(traj, {"variance": [1.0]})) == 0

    def test_loglog_slope(self):
        x = np.logspace(0, 3, 20)
        assert loglog_slope(x, 3 * x**-0.5) == pytest.approx(-0.5)
