"""One-hidden-layer networks, the inputs of the register construction.

:func:`fit_shallow` is a random-feature least-squares fit.  It stands in
for the classical density theorem: any reasonable dense family will do,
the compilers only need *some* shallow network per output.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from . import activations
from .net_ir import Box


@dataclass(frozen=True, eq=False)
class ShallowNet:
    """``x -> sum_j out_weights[j] * rho(weights[j] @ x + biases[j]) + out_bias``."""

    weights: np.ndarray
    biases: np.ndarray
    out_weights: np.ndarray
    out_bias: float
    activation: str
    residual: float = float("nan")

    def __post_init__(self):
        w = np.atleast_2d(np.asarray(self.weights, dtype=np.float64))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "biases", np.asarray(self.biases, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "out_weights", np.asarray(self.out_weights, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "out_bias", float(self.out_bias))
        if not (len(self.biases) == len(self.out_weights) == w.shape[0]):
            raise ValueError("hidden rows, biases and output weights must have equal length")

    @property
    def n_inputs(self) -> int:
        return self.weights.shape[1]

    @property
    def n_hidden(self) -> int:
        return self.weights.shape[0]

    def features(self, X, registry: Mapping | None = None) -> np.ndarray:
        spec = activations.get(self.activation, registry)
        return spec(np.atleast_2d(X) @ self.weights.T + self.biases)

    def terms(self, X, registry: Mapping | None = None) -> np.ndarray:
        """Per-neuron contributions ``sigma_j(x)`` including output weights."""
        return self.features(X, registry) * self.out_weights

    def __call__(self, X, registry: Mapping | None = None) -> np.ndarray:
        return self.terms(X, registry).sum(axis=1) + self.out_bias


def random_shallow(n: int, width: int, activation: str, rng: np.random.Generator, scale: float = 1.0) -> ShallowNet:
    return ShallowNet(
        rng.normal(0, scale, (width, n)),
        rng.normal(0, scale, width),
        rng.normal(0, scale, width),
        float(rng.normal(0, scale)),
        activation,
    )


def fit_shallow_data(
    X: np.ndarray,
    y: np.ndarray,
    width: int,
    activation: str = "tanh",
    domain: Box | None = None,
    seed: int = 0,
    feature_scale: float = 2.0,
    bias_shift: float = 0.0,
    ridge: float = 0.0,
    registry: Mapping | None = None,
) -> ShallowNet:
    """Fit output weights by least squares on random hidden features.

    Hidden rows have random directions scaled by ``feature_scale`` over the
    box half-widths and are centred at random points of the box enlarged by
    half its size on each side.  ``bias_shift`` is added to every hidden
    bias, e.g. to move pre-activations into a region where the activation
    behaves well.  ``ridge > 0`` adds a Tikhonov penalty on the hidden
    output weights, keeping them (and hence register magnitudes) small.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if width < 1:
        raise ValueError("width must be at least 1")
    if domain is None:
        domain = Box(X.min(axis=0), X.max(axis=0))
    rng = np.random.default_rng(seed)
    lo, hi = np.array(domain.lower), np.array(domain.upper)
    half = (hi - lo) / 2
    W = rng.normal(0, 1, (width, X.shape[1])) * feature_scale / half
    centres = rng.uniform(lo - half, hi + half, (width, X.shape[1]))
    b = -np.sum(W * centres, axis=1) + bias_shift
    spec = activations.get(activation, registry)
    Phi = np.column_stack([spec(X @ W.T + b), np.ones(len(X))])
    if ridge > 0:
        penalty = np.sqrt(ridge) * np.eye(width, Phi.shape[1])
        coef, *_ = np.linalg.lstsq(np.vstack([Phi, penalty]), np.concatenate([y, np.zeros(width)]), rcond=None)
        rank = Phi.shape[1]
    else:
        coef, _, rank, _ = np.linalg.lstsq(Phi, y, rcond=None)
    if rank < Phi.shape[1]:
        warnings.warn(
            f"least squares design has rank {rank} < {Phi.shape[1]}; fit may be ill-conditioned",
            RuntimeWarning,
            stacklevel=2,
        )
    net = ShallowNet(W, b, coef[:-1], coef[-1], activation)
    residual = float(np.max(np.abs(net(X, registry) - y)))
    object.__setattr__(net, "residual", residual)
    return net


def fit_shallow(
    f: Callable[[np.ndarray], np.ndarray],
    domain: Box,
    width: int,
    activation: str = "tanh",
    seed: int = 0,
    samples: int | None = None,
    **kwargs,
) -> ShallowNet:
    """Fit a shallow network to ``f`` sampled on ``domain``.

    ``samples`` defaults to ``max(20 * width, 200)``; fewer than
    ``10 * width`` points is rejected.  The returned net's ``residual`` is
    the max absolute error on the sample points.
    """
    samples = max(20 * width, 200) if samples is None else samples
    if samples < 10 * width:
        raise ValueError(f"need at least {10 * width} samples for width {width}")
    if domain.dim == 1:
        X = np.linspace(domain.lower[0], domain.upper[0], samples)[:, None]
    else:
        X = domain.sample(samples, np.random.default_rng(seed + 1))
        X = np.vstack([X, domain.grid(2)])
    y = np.asarray(f(X), dtype=np.float64).reshape(-1)
    return fit_shallow_data(X, y, width, activation, domain, seed, **kwargs)
