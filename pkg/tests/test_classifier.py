import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError
from sklearn.linear_model import LogisticRegression

from noisygrad import BayesianLogisticRegression
from noisygrad.core import RngStream
from noisygrad.exceptions import ConfigError
from noisygrad.models import generate_blr_data


@pytest.fixture(scope="module")
def data():
    X, y, _ = generate_blr_data(RngStream(0), 400, 4)
    return X[:, :-1], np.where(y > 0, "yes", "no")


@pytest.fixture(scope="module")
def fitted(data):
    X, y = data
    return BayesianLogisticRegression(h=0.05, n_steps=3000, burn_in=500, prior_var=100.0, seed=1).fit(X, y)


def test_posterior_mean_near_map(data, fitted):
    X, y = data
    # with 400 rows and a weak prior the posterior mean sits close to the MAP
    lr = LogisticRegression(C=100.0, tol=1e-10, max_iter=1000).fit(X, y)
    np.testing.assert_allclose(fitted.coef_, lr.coef_, atol=0.15)
    np.testing.assert_allclose(fitted.intercept_, lr.intercept_, atol=0.15)
    assert np.corrcoef(fitted.coef_[0], lr.coef_[0])[0, 1] > 0.99


def test_predictions(data, fitted):
    X, y = data
    proba = fitted.predict_proba(X)
    np.testing.assert_allclose(proba.sum(axis=1), 1.0)
    assert set(fitted.predict(X)) <= {"no", "yes"}
    assert fitted.score(X, y) > 0.75
    assert fitted.decision_function(X).shape == (X.shape[0],)


def test_sklearn_contract(fitted):
    c = clone(fitted)
    assert c.get_params() == fitted.get_params()
    assert not hasattr(c, "coef_")
    with pytest.raises(NotFittedError):
        c.predict(np.zeros((1, 3)))


def test_minibatch_sampler(data):
    X, y = data
    clf = BayesianLogisticRegression(h=0.02, batch_size=40, n_steps=2000, burn_in=500,
                                     sampler_params={"gamma": 2.0, "include_current_batch": False})
    assert clf.fit(X, y).score(X, y) > 0.7


def test_input_validation(data, fitted):
    X, y = data
    with pytest.raises(ValueError):
        BayesianLogisticRegression().fit(X, np.arange(X.shape[0]) % 3)
    with pytest.raises(ConfigError):
        BayesianLogisticRegression(n_steps=10, burn_in=10).fit(X, y)
    with pytest.raises(ValueError):
        fitted.predict(np.zeros((2, 5)))
