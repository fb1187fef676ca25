"""Activation functions and the derivative metadata gadget builders rely on."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from types import MappingProxyType
from typing import Callable, Mapping, Optional

import numpy as np


class RegistryError(KeyError):
    """Unknown activation key."""


class UnsupportedActivationError(ValueError):
    """The activation lacks the derivative point a construction needs."""


class DerivativeValidationError(ValueError):
    """Declared derivative values disagree with finite differences."""


@dataclass(frozen=True)
class DerivativePoint:
    """A point ``alpha`` together with declared values of rho and its derivatives."""

    alpha: float
    value: float
    d1: float
    d2: Optional[float] = None


@dataclass(frozen=True)
class ActivationSpec:
    key: str
    fn: Callable[[np.ndarray], np.ndarray]
    alpha_d1: Optional[DerivativePoint] = None
    alpha_d2: Optional[DerivativePoint] = None
    is_polynomial: bool = False
    degree: Optional[int] = None
    differentiable: bool = True

    def __call__(self, x):
        return self.fn(np.asarray(x, dtype=np.float64))

    def require_d1(self) -> DerivativePoint:
        if self.alpha_d1 is None or self.alpha_d1.d1 == 0:
            raise UnsupportedActivationError(
                f"activation {self.key!r} has no declared point with nonzero first derivative"
            )
        return self.alpha_d1

    def require_d2(self) -> DerivativePoint:
        if self.alpha_d2 is None or not self.alpha_d2.d2:
            raise UnsupportedActivationError(
                f"activation {self.key!r} has no declared point with nonzero second derivative"
            )
        return self.alpha_d2


WEIERSTRASS_TERMS = 20


def weierstrass(x, terms: int = WEIERSTRASS_TERMS):
    """Truncated Weierstrass sum ``sum_{k=0}^{terms} 2^-k cos(3^k x)``; bounded by 2."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    for k in range(terms + 1):
        out += 0.5**k * np.cos(3.0**k * x)
    return out


def _pathological(x):
    with np.errstate(over="ignore", invalid="ignore"):
        return np.sin(x) + weierstrass(x) * np.exp(-x)


def _sigmoid(x):
    # split to avoid overflow in exp for large |x|
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _sigmoid_point(a: float) -> DerivativePoint:
    s = 1.0 / (1.0 + math.exp(-a))
    return DerivativePoint(a, s, s * (1 - s), s * (1 - s) * (1 - 2 * s))


def _tanh_point(a: float) -> DerivativePoint:
    t = math.tanh(a)
    return DerivativePoint(a, t, 1 - t * t, -2 * t * (1 - t * t))


LEAKY_SLOPE = 0.01


@lru_cache(maxsize=None)
def _builtins() -> Mapping[str, ActivationSpec]:
    specs = [
        ActivationSpec("relu", lambda x: np.maximum(x, 0.0), DerivativePoint(1.0, 1.0, 1.0)),
        ActivationSpec(
            "leaky_relu",
            lambda x: np.where(x >= 0, x, LEAKY_SLOPE * x),
            DerivativePoint(1.0, 1.0, 1.0),
        ),
        ActivationSpec("sigmoid", _sigmoid, _sigmoid_point(0.0), _sigmoid_point(1.0)),
        ActivationSpec("tanh", np.tanh, _tanh_point(0.0), _tanh_point(1.0)),
        ActivationSpec(
            "square",
            np.square,
            DerivativePoint(1.0, 1.0, 2.0),
            DerivativePoint(0.0, 0.0, 0.0, 2.0),
            is_polynomial=True,
            degree=2,
        ),
        # alpha_d1 sits on the inflection point so identity gadgets are second order
        ActivationSpec(
            "cubic_square",
            lambda x: x**3 + x**2,
            DerivativePoint(-1.0 / 3.0, 2.0 / 27.0, -1.0 / 3.0, 0.0),
            DerivativePoint(0.0, 0.0, 0.0, 2.0),
            is_polynomial=True,
            degree=3,
        ),
        ActivationSpec(
            "quartic",
            lambda x: x**4 + x**2,
            DerivativePoint(1.0, 2.0, 6.0),
            DerivativePoint(0.0, 0.0, 0.0, 2.0),
            is_polynomial=True,
            degree=4,
        ),
        ActivationSpec(
            "sine",
            np.sin,
            DerivativePoint(0.0, 0.0, 1.0, 0.0),
            DerivativePoint(math.pi / 2, 1.0, 0.0, -1.0),
        ),
        ActivationSpec("pathological", _pathological, differentiable=False),
    ]
    return MappingProxyType({s.key: s for s in specs})


def builtin_registry() -> Mapping[str, ActivationSpec]:
    """Immutable mapping of the shipped activation specs."""
    return _builtins()


def get(key: str, registry: Mapping[str, ActivationSpec] | None = None) -> ActivationSpec:
    registry = builtin_registry() if registry is None else registry
    try:
        return registry[key]
    except KeyError:
        raise RegistryError(
            f"unknown activation {key!r}; known: {', '.join(sorted(registry))}"
        ) from None


def with_spec(spec: ActivationSpec, registry: Mapping | None = None) -> Mapping[str, ActivationSpec]:
    """Registry extended by a user-supplied spec."""
    base = dict(builtin_registry() if registry is None else registry)
    base[spec.key] = spec
    return MappingProxyType(base)


PROBE_STEPS = (1e-3, 1e-4, 1e-5)


@dataclass
class ProbeReport:
    key: str
    skipped: bool = False
    d1_estimates: dict = field(default_factory=dict)
    d2_estimates: dict = field(default_factory=dict)


def _d1(fn, a, h):
    return float((fn(np.array([a + h])) - fn(np.array([a - h])))[0] / (2 * h))


def _d2(fn, a, h):
    v = fn(np.array([a + h, a, a - h]))
    return float((v[0] - 2 * v[1] + v[2]) / (h * h))


def probe_derivatives(spec: ActivationSpec, tol: float = 1e-5) -> ProbeReport:
    """Check declared derivatives against central differences.

    First derivatives must agree at every step in ``PROBE_STEPS``; second
    derivatives at the two larger steps, since the ``1/h^2`` rounding floor
    at the smallest step is comparable to ``tol``.
    """
    report = ProbeReport(spec.key)
    if not spec.differentiable:
        report.skipped = True
        return report
    if spec.alpha_d1 is None and spec.alpha_d2 is None:
        raise DerivativeValidationError(f"{spec.key}: no derivative point declared")

    def check(kind, point, declared, estimate):
        if abs(estimate - declared) > tol * max(1.0, abs(declared)):
            raise DerivativeValidationError(
                f"{spec.key}: {kind} at alpha={point.alpha} declared {declared}, "
                f"finite difference gives {estimate}"
            )

    for point in (spec.alpha_d1, spec.alpha_d2):
        if point is None:
            continue
        value = float(spec(np.array([point.alpha]))[0])
        check("value", point, point.value, value)
        for h in PROBE_STEPS:
            est = _d1(spec, point.alpha, h)
            report.d1_estimates[(point.alpha, h)] = est
            check("first derivative", point, point.d1, est)
        if point.d2 is not None:
            for h in PROBE_STEPS:
                est = _d2(spec, point.alpha, h)
                report.d2_estimates[(point.alpha, h)] = est
                if h >= 1e-4:
                    check("second derivative", point, point.d2, est)
    return report


def find_alpha(fn: Callable, grid=None, threshold: float = 1e-3, h: float = 1e-5) -> DerivativePoint:
    """Scan ``grid`` for a point whose first derivative exceeds ``threshold``.

    Meant for user-supplied activations; raises if none is found rather
    than guessing.
    """
    grid = np.linspace(-3, 3, 61) if grid is None else np.asarray(grid, dtype=np.float64)
    for a in grid:
        d = _d1(fn, float(a), h)
        if abs(d) > threshold:
            return DerivativePoint(float(a), float(fn(np.array([a]))[0]), d)
    raise UnsupportedActivationError("no point with nonzero derivative found on the probe grid")
