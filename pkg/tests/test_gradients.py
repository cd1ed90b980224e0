import numpy as np
import pytest

from noisygrad.core import RngStream
from noisygrad.exceptions import ConfigError, ModelEvaluationError
from noisygrad.gradients import CovarianceTracker, minibatch_force, true_force
from noisygrad.lowrank import LowRankPSD
from noisygrad.models import BlrModel, generate_blr_data


@pytest.fixture(scope="module")
def blr():
    X, y, _ = generate_blr_data(RngStream(0), 30, 3)
    return BlrModel(X, y, prior_var=4.0)


def exact_minibatch_cov(model, theta, n):
    """Covariance of the scaled sum under sampling without replacement."""
    g = model.datum_grads(theta)
    N = model.n_data
    S2 = np.cov(g.T, ddof=1)
    return N * N * (1 - n / N) / n * S2


def test_minibatch_is_unbiased_with_the_exact_covariance(blr):
    theta = np.array([0.3, -0.2, 0.1])
    n, draws = 5, 40_000
    rng = RngStream(1)
    F = np.array([minibatch_force(blr, theta, n, rng, covariance=False).value for _ in range(draws)])
    exact = exact_minibatch_cov(blr, theta, n)
    stderr = np.sqrt(np.diag(exact) / draws)
    assert np.all(np.abs(F.mean(axis=0) - true_force(blr, theta)) < 4 * stderr)
    np.testing.assert_allclose(np.cov(F.T), exact, rtol=0.05, atol=0.05 * np.abs(exact).max())


def test_batch_covariance_estimate_is_unbiased(blr):
    theta = np.array([-0.5, 0.4, 0.0])
    n, draws = 6, 20_000
    rng = RngStream(2)
    acc = np.zeros((3, 3))
    for _ in range(draws):
        acc += minibatch_force(blr, theta, n, rng).covariance.to_dense()
    exact = exact_minibatch_cov(blr, theta, n)
    np.testing.assert_allclose(acc / draws, exact, rtol=0.04, atol=0.04 * np.abs(exact).max())


def test_full_batch_is_exact_and_draws_nothing(blr):
    theta = np.array([0.1, 0.2, 0.3])
    rng = RngStream(3)
    nf = minibatch_force(blr, theta, blr.n_data, rng)
    np.testing.assert_array_equal(nf.value, blr.force(theta))
    assert nf.covariance.is_zero and nf.cost == blr.n_data
    np.testing.assert_array_equal(rng.normal(4), RngStream(3).normal(4))


def test_single_datum_batch_has_no_within_batch_estimate(blr):
    nf = minibatch_force(blr, np.zeros(3), 1, RngStream(0))
    assert nf.covariance.is_zero and nf.cost == 1


def test_batch_indices_are_distinct(blr):
    nf = minibatch_force(blr, np.zeros(3), 12, RngStream(4))
    assert len(set(nf.batch_indices.tolist())) == 12


@pytest.mark.parametrize("n", [0, 31])
def test_bad_batch_size(blr, n):
    with pytest.raises(ConfigError):
        minibatch_force(blr, np.zeros(3), n, RngStream(0))


def test_lockstep_theta_rejected(blr):
    with pytest.raises(ValueError):
        minibatch_force(blr, np.zeros((2, 3)), 5, RngStream(0))


def test_non_finite_force_raises(blr):
    with pytest.raises(ModelEvaluationError):
        minibatch_force(blr, np.array([np.nan, 0.0, 0.0]), 5, RngStream(0))


class TestTracker:
    def test_weighted_average_matches_dense(self):
        rng = np.random.default_rng(0)
        tr = CovarianceTracker(4, decay=0.5, rank_cap=32)
        batches = [(rng.standard_normal((4, 3)), rng.uniform(0.5, 2.0)) for _ in range(4)]
        for cols, scale in batches:
            out = tr.update(cols, scale)
        weights = 0.5 ** np.arange(len(batches))[::-1]
        dense = sum(w * s * c @ c.T for w, (c, s) in zip(weights, batches)) / weights.sum()
        np.testing.assert_allclose(out.to_dense(), dense, rtol=1e-12)
        assert out.rank <= 4

    def test_eviction_drops_oldest_batches(self):
        rng = np.random.default_rng(1)
        tr = CovarianceTracker(10, decay=1.0, rank_cap=6)
        batches = [rng.standard_normal((10, 3)) for _ in range(3)]
        for c in batches:
            out = tr.update(c, 1.0)
        assert len(tr) == 2
        dense = (batches[1] @ batches[1].T + batches[2] @ batches[2].T) / 2
        np.testing.assert_allclose(out.to_dense(), dense, rtol=1e-12)

    def test_compression_is_exact_when_rank_fits(self):
        rng = np.random.default_rng(2)
        tr = CovarianceTracker(3, decay=1.0, rank_cap=32)
        cols = rng.standard_normal((3, 20))
        out = tr.update(cols, 0.7)
        assert out.rank == 3
        np.testing.assert_allclose(out.to_dense(), 0.7 * cols @ cols.T, rtol=1e-12)

    def test_svd_truncation_when_dimension_exceeds_cap(self):
        rng = np.random.default_rng(3)
        tr = CovarianceTracker(12, decay=1.0, rank_cap=4)
        cols = rng.standard_normal((12, 9))
        out = tr.update(cols, 1.0)
        assert out.rank == 4
        w = np.linalg.eigvalsh(cols @ cols.T)[::-1]
        np.testing.assert_allclose(np.linalg.eigvalsh(out.to_dense())[::-1][:4], w[:4], rtol=1e-10)

    def test_history_only_mode(self):
        rng = np.random.default_rng(4)
        tr = CovarianceTracker(2, decay=1.0, include_current=False)
        a, b = rng.standard_normal((2, 3)), rng.standard_normal((2, 3))
        first = tr.update(a, 1.0)
        # no history yet: the current batch is used
        np.testing.assert_allclose(first.to_dense(), a @ a.T, rtol=1e-12)
        second = tr.update(b, 1.0)
        np.testing.assert_allclose(second.to_dense(), a @ a.T, rtol=1e-12)
        np.testing.assert_allclose(tr.current().to_dense(), (a @ a.T + b @ b.T) / 2, rtol=1e-12)

    def test_zero_scale_batch_dilutes(self):
        tr = CovarianceTracker(2, decay=1.0)
        tr.update(np.eye(2), 1.0)
        out = tr.update(np.zeros((2, 0)), 0.0)
        np.testing.assert_allclose(out.to_dense(), 0.5 * np.eye(2))

    def test_reset(self):
        tr = CovarianceTracker(2)
        tr.update(np.eye(2), 1.0)
        tr.reset()
        assert len(tr) == 0 and tr.current().is_zero

    @pytest.mark.parametrize("kw", [{"decay": 0.0}, {"decay": 1.5}, {"rank_cap": 0}])
    def test_invalid_settings(self, kw):
        with pytest.raises(ConfigError):
            CovarianceTracker(2, **kw)

    def test_invalid_updates(self):
        tr = CovarianceTracker(2)
        with pytest.raises(ValueError):
            tr.update(np.zeros((3, 1)), 1.0)
        with pytest.raises(ValueError):
            tr.update(np.zeros((2, 1)), -1.0)

    def test_output_type(self):
        assert isinstance(CovarianceTracker(2).update(np.eye(2), 1.0), LowRankPSD)
