"""scikit-learn style wrappers: fit a target, compile it into a narrow network, predict with it."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.preprocessing import PolynomialFeatures
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .compilers.register import compile_register
from .compilers.square import DEFAULT_MARGIN, DEFAULT_STAGES, compile_square
from .gadgets import DEFAULT_S
from .net_ir import Box, audit, evaluate
from .polynomial import Polynomial
from .shallow import fit_shallow_data


def _as_2d_targets(y):
    y = np.asarray(y, dtype=np.float64)
    return (y[:, None], True) if y.ndim == 1 else (y, False)


class _NarrowMixin:
    def predict(self, X):
        check_is_fitted(self, "network_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        out = evaluate(self.network_, X)
        return out[:, 0] if self._single_output else out

    def audit(self):
        check_is_fitted(self, "network_")
        return audit(self.network_)


class RegisterRegressor(_NarrowMixin, RegressorMixin, BaseEstimator):
    """One random-feature shallow net per output, stacked at width ``n + m + 1``.

    ``h=None`` keeps ideal identity registers; a float lowers them to
    identity gadgets of ``activation``.  ``N`` selects the exact shifted
    ReLU identity instead.
    """

    def __init__(self, width=20, activation="tanh", h=None, A=None, N=None, feature_scale=2.0, seed=0):
        self.width = width
        self.activation = activation
        self.h = h
        self.A = A
        self.N = N
        self.feature_scale = feature_scale
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, multi_output=True, y_numeric=True)
        Y, self._single_output = _as_2d_targets(y)
        self.n_features_in_ = X.shape[1]
        domain = Box(X.min(axis=0), X.max(axis=0))
        self.shallow_ = [
            fit_shallow_data(X, Y[:, i], self.width, self.activation, domain, self.seed + i, self.feature_scale)
            for i in range(Y.shape[1])
        ]
        self.network_ = compile_register(self.shallow_, h=self.h, A=self.A, N=self.N)
        return self


class SquareModelRegressor(_NarrowMixin, RegressorMixin, BaseEstimator):
    """Least-squares polynomial fit compiled into a square-activation network.

    The network is built for the bounding box of the training inputs; far
    outside it the reciprocal gadgets stop converging.
    """

    def __init__(self, degree=2, recip_stages=DEFAULT_STAGES, s=DEFAULT_S, h=None, margin=DEFAULT_MARGIN,
                 tol=1e-12):
        self.degree = degree
        self.recip_stages = recip_stages
        self.s = s
        self.h = h
        self.margin = margin
        self.tol = tol

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64, multi_output=True, y_numeric=True)
        Y, self._single_output = _as_2d_targets(y)
        self.n_features_in_ = X.shape[1]
        feats = PolynomialFeatures(self.degree)
        Phi = feats.fit_transform(X)
        coef, *_ = np.linalg.lstsq(Phi, Y, rcond=None)
        scale = np.abs(coef).max(axis=0)
        self.polynomials_ = []
        for i in range(Y.shape[1]):
            keep = np.abs(coef[:, i]) > self.tol * max(scale[i], 1.0)
            terms = [(float(c), tuple(int(e) for e in p)) for c, p, k in zip(coef[:, i], feats.powers_, keep) if k]
            if not terms:
                raise ValueError(f"output {i} fits to the zero polynomial, which has no square-model network")
            self.polynomials_.append(Polynomial(X.shape[1], terms))
        self.domain_ = Box(X.min(axis=0), X.max(axis=0))
        self.network_ = compile_square(
            self.polynomials_, self.domain_, self.recip_stages, h=self.h, s=self.s, margin=self.margin
        )
        return self
