import numpy as np
import pytest

from noisygrad.core import RngStream
from noisygrad.exceptions import ConfigError
from noisygrad.models import (
    BlrModel,
    CsvFormatError,
    GaussianDataModel,
    GaussianSyntheticModel,
    MixtureModel,
    QuarticSyntheticModel,
    csv_load_blr,
    csv_write_blr,
    generate_blr_data,
    generate_gaussian_data,
    generate_mixture_data,
)


def fd_grad(f, x, eps=1e-6):
    return np.array([(f(x + eps * e) - f(x - eps * e)) / (2 * eps) for e in np.eye(x.size)])


def models():
    X, y, _ = generate_blr_data(RngStream(0), 200, 4)
    return [
        GaussianSyntheticModel([0.5, -1.0], [[2.0, 0.3], [0.3, 1.0]]),
        QuarticSyntheticModel(dim=3, quartic=0.1),
        GaussianDataModel(generate_gaussian_data(RngStream(1), 50, 0.2, 0.5, dim=2), omega=0.5),
        MixtureModel(generate_mixture_data(RngStream(2), 300)),
        BlrModel(X, y, prior_var=10.0),
    ]


@pytest.mark.parametrize("model", models(), ids=lambda m: type(m).__name__)
def test_force_is_gradient_of_log_density(model):
    rng = np.random.default_rng(5)
    for _ in range(5):
        theta = 0.5 * rng.standard_normal(model.dim)
        fd = fd_grad(model.log_density, theta)
        f = model.force(theta)
        assert np.max(np.abs(fd - f)) <= 1e-5 * max(1.0, np.max(np.abs(f)))


@pytest.mark.parametrize("model", models()[2:], ids=lambda m: type(m).__name__)
def test_datum_grads_sum_to_force(model):
    theta = np.linspace(-0.3, 0.4, model.dim)
    total = model.prior_grad(theta) + model.datum_grads(theta).sum(axis=0)
    np.testing.assert_allclose(total, model.force(theta), rtol=1e-10, atol=1e-10)
    idx = np.array([0, 3, 7])
    np.testing.assert_allclose(model.datum_grads(theta, idx), model.datum_grads(theta)[idx])


@pytest.mark.parametrize("model", models(), ids=lambda m: type(m).__name__)
def test_forces_broadcast_over_chains(model):
    thetas = np.random.default_rng(1).standard_normal((4, model.dim)) * 0.3
    np.testing.assert_allclose(model.force(thetas), np.stack([model.force(t) for t in thetas]), rtol=1e-12)
    np.testing.assert_allclose(model.log_density(thetas), [model.log_density(t) for t in thetas], rtol=1e-12)


def test_gaussian_data_posterior_is_exact():
    data = generate_gaussian_data(RngStream(3), 80, 1.0, 0.25)
    m = GaussianDataModel(data, omega=0.25)
    np.testing.assert_allclose(m.posterior_mean, data.mean(axis=0))
    # quadratic log density with curvature 1/omega
    np.testing.assert_allclose(m.force(m.posterior_mean + 0.1), [-0.1 / 0.25], rtol=1e-12)


def test_synthetic_noise_covariance():
    cov = np.array([[2.0, 0.5], [0.5, 1.0]])
    m = GaussianSyntheticModel(np.zeros(2), 1.0, noise_cov=cov)
    z = m.draw_noise((200_000, 2), RngStream(4))
    np.testing.assert_allclose(np.cov(z.T), cov, rtol=0.03, atol=0.02)
    nf = m.noisy_force(np.zeros(2), 1, RngStream(5))
    np.testing.assert_allclose(nf.covariance.to_dense(), cov, rtol=1e-12)
    assert nf.cost == 1


def test_scalar_noise_and_zero_noise():
    m = QuarticSyntheticModel(noise_cov=4.0)
    z = m.draw_noise((100_000, 1), RngStream(6))
    assert abs(z.var() - 4.0) < 0.1
    assert np.all(QuarticSyntheticModel().draw_noise((3, 1), RngStream(0)) == 0)


def test_mixture_data_proportions():
    y = generate_mixture_data(RngStream(7), 30_000, (3.0, -3.0))
    assert abs(np.mean(y > 0) - 1 / 3) < 0.01


def test_blr_generator_shapes_and_labels():
    X, y, star = generate_blr_data(RngStream(8), 100, 5)
    assert X.shape == (100, 5) and np.all(X[:, -1] == 1) and set(np.unique(y)) <= {0.0, 1.0}
    assert star.shape == (5,)


def test_model_hash_tracks_data():
    a = MixtureModel(generate_mixture_data(RngStream(1), 50))
    b = MixtureModel(generate_mixture_data(RngStream(1), 50))
    c = MixtureModel(generate_mixture_data(RngStream(2), 50))
    assert a.model_hash() == b.model_hash() != c.model_hash()


@pytest.mark.parametrize("factory", [
    lambda: GaussianSyntheticModel(0.0, -1.0),
    lambda: GaussianSyntheticModel(0.0, 1.0, noise_cov=-1.0),
    lambda: QuarticSyntheticModel(quartic=-0.1),
    lambda: GaussianDataModel(np.zeros((3, 1)), omega=0.0),
    lambda: MixtureModel([]),
    lambda: BlrModel(np.ones((3, 2)), [0, 1, 2]),
    lambda: BlrModel(np.ones((3, 2)), [0, 1]),
    lambda: BlrModel(np.ones((2, 2)), [0, 1], prior_var=0.0),
])
def test_invalid_models(factory):
    with pytest.raises(ConfigError):
        factory()


class TestCsv:
    def test_roundtrip(self, tmp_path):
        X, y, _ = generate_blr_data(RngStream(9), 20, 4)
        path = tmp_path / "d.csv"
        csv_write_blr(path, X[:, :-1], y)
        X2, y2 = csv_load_blr(path)
        np.testing.assert_array_equal(X2, X)
        np.testing.assert_array_equal(y2, y)

    def test_header_is_skipped(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("a,b,label\n1,2,0\n3,4,1\n")
        X, y = csv_load_blr(path)
        assert X.shape == (2, 3) and y.tolist() == [0.0, 1.0]

    @pytest.mark.parametrize("text,line", [
        ("1,2,0\n3,4\n", 2),
        ("1,x,0\n", 1),
        ("1,2,3\n", 1),
        ("5\n", 1),
    ])
    def test_errors_carry_line_numbers(self, tmp_path, text, line):
        path = tmp_path / "d.csv"
        path.write_text(text)
        with pytest.raises(CsvFormatError) as info:
            csv_load_blr(path)
        assert info.value.line == line

    def test_empty_file(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("\n")
        with pytest.raises(CsvFormatError):
            csv_load_blr(path)
