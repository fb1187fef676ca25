import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from deepnarrow.estimators import RegisterRegressor, SquareModelRegressor


@pytest.fixture
def data():
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (300, 2))
    return X, np.sin(X[:, 0]) + X[:, 1] ** 2


def test_register_regressor(data):
    X, y = data
    est = RegisterRegressor(width=30).fit(X, y)
    assert est.predict(X).shape == (300,)
    assert est.score(X, y) > 0.99
    assert est.audit()["width"] == 2 + 1 + 1
    net_pred = est.shallow_[0](X)
    assert np.allclose(est.predict(X), net_pred, atol=1e-10)


def test_register_multi_output_and_lowering(data):
    X, y = data
    Y = np.column_stack([y, -y])
    est = RegisterRegressor(width=20, h=1e-4).fit(X, Y)
    assert est.predict(X).shape == (300, 2)
    assert est.audit()["width"] == 5
    assert est.score(X, Y) > 0.99


def test_params_and_clone():
    est = RegisterRegressor(width=7, activation="sigmoid")
    assert est.get_params()["width"] == 7
    twin = clone(est)
    assert twin.get_params() == est.get_params()
    est.set_params(width=9)
    assert est.width == 9


def test_not_fitted_and_bad_input(data):
    X, y = data
    with pytest.raises(NotFittedError):
        RegisterRegressor().predict(X)
    est = RegisterRegressor(width=5).fit(X, y)
    with pytest.raises(ValueError):
        est.predict(X[:, :1])
    with pytest.raises(ValueError):
        RegisterRegressor().fit(X, y[:10])


def test_square_model_regressor():
    rng = np.random.default_rng(1)
    X = rng.uniform(1.2, 1.8, (200, 1))
    y = 2 * X[:, 0] ** 3 - X[:, 0]
    est = SquareModelRegressor(degree=3, s=1e-8).fit(X, y)
    assert est.audit()["width"] == 3
    assert np.max(np.abs(est.predict(X) - y)) <= 1e-5
    with pytest.raises(ValueError):
        SquareModelRegressor().fit(X, np.zeros(200))
