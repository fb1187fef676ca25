"""End-to-end scenarios with fixed parameters and pass/fail thresholds.

Shared by ``deepnarrow demo`` and the acceptance tests.  Every scenario is
deterministic for a given seed.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .compilers.lowering import layer_expand, lower_square_rho, lower_square_sigma
from .compilers.register import compile_register
from .compilers.relu_lp import CutoffSpec, compile_relu_lp, shift_bound
from .compilers.square import compile_square
from .gadgets import DEFAULT_A
from .net_ir import Box, Network, evaluate
from .polynomial import parse
from .shallow import ShallowNet, fit_shallow, random_shallow
from .verify import is_non_increasing, lp_error, polynomial_oracle, sup_error

# polynomial targets of the square-activation scenarios
SQUARE_TARGETS = ("x1^2 + x1", "2*x1^3 - x1")
SQUARE_BOX = Box((1.2,), (1.8,))
SQUARE_STAGES = 6
# exact identities: the fused step that minimises the float64 floor
SQUARE_S_IDEAL = 1e-8
# square identities at h = 1e-4 drift by about h/s per fused block
SQUARE_S_LOWERED = 1e-3
SQUARE_H_LOWERED = 1e-4

SIGMA_S = 3e-3
SIGMA_H = (1e-3, 1e-4, 1e-5)
RHO_S = 1e-4
RHO_H_IDENTITY = 1e-7
RHO_H = (1e-13, 3e-14, 1e-14)

REGISTER_H = (1e-2, 1e-3, 1e-4)
PATHOLOGICAL_H = 1e-3
PATHOLOGICAL_FIT = dict(width=80, feature_scale=3.0, ridge=1e-5, samples=2000)

LP_EPS = 0.1


@dataclass
class Check:
    label: str
    value: float
    threshold: float | None
    passed: bool
    info: bool = False

    def line(self) -> str:
        mark = "INFO" if self.info else "PASS" if self.passed else "FAIL"
        bound = "" if self.threshold is None else f" (threshold {self.threshold:g})"
        return f"[{mark}] {self.label}: {self.value:.6g}{bound}"


@dataclass
class DemoResult:
    name: str
    checks: list[Check] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, label: str, value: float, threshold: float | None = None, passed: bool | None = None) -> Check:
        """Record a measurement; with neither ``threshold`` nor ``passed`` it is informational."""
        info = threshold is None and passed is None
        if passed is None:
            passed = info or value <= threshold
        c = Check(label, float(value), threshold, bool(passed), info)
        self.checks.append(c)
        return c

    def summary(self) -> str:
        lines = [f"{self.name}: {'PASS' if self.passed else 'FAIL'} ({self.seconds:.2f} s)"]
        return "\n".join(lines + ["  " + c.line() for c in self.checks])


def _timed(fn: Callable[..., DemoResult]) -> Callable[..., DemoResult]:
    def wrapper(*args, **kwargs):
        t = time.perf_counter()
        res = fn(*args, **kwargs)
        res.seconds = time.perf_counter() - t
        return res

    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# -- shared scenario data ----------------------------------------------------


def register_nets(seed: int = 0) -> list[ShallowNet]:
    """Two random tanh shallow nets on ``R^2`` with 4 and 3 hidden neurons."""
    rng = np.random.default_rng(seed)
    return [random_shallow(2, 4, "tanh", rng), random_shallow(2, 3, "tanh", rng)]


def shallow_oracle(nets):
    return lambda X: np.column_stack([net(X) for net in nets])


def square_targets():
    return [parse(t) for t in SQUARE_TARGETS]


def triangle_bump(X) -> np.ndarray:
    X = np.atleast_2d(X)
    return np.maximum(0.0, 1.0 - np.abs(X[:, 0]))


# -- scenarios -----------------------------------------------------------------


@_timed
def demo_register(seed: int = 0) -> DemoResult:
    nets = register_nets(seed)
    oracle = shallow_oracle(nets)
    K = Box.cube(-1.0, 1.0, 2)
    res = DemoResult("register")
    ideal = compile_register(nets)
    X = np.random.default_rng(seed).uniform(-1, 1, (1000, 2))
    res.add("ideal max error on 1000 points", np.abs(evaluate(ideal, X) - oracle(X)).max(), 1e-10)
    res.add("width", ideal.width, 5, passed=ideal.width == 5)
    errors = [sup_error(compile_register(nets, h=h), oracle, K) for h in REGISTER_H]
    for h, e in zip(REGISTER_H, errors):
        res.add(f"lowered sup error at h={h:g}", e)
    res.add("h-sweep non-increasing", float(is_non_increasing(errors)), None, passed=is_non_increasing(errors))
    res.add("lowered sup error at h=1e-4", errors[-1], 1e-3)
    return res


def square_network(h: float | None = None, s: float | None = None) -> Network:
    if s is None:
        s = SQUARE_S_IDEAL if h is None else SQUARE_S_LOWERED
    return compile_square(square_targets(), SQUARE_BOX, SQUARE_STAGES, h=h, s=s)


@_timed
def demo_square(seed: int = 0) -> DemoResult:
    oracle = polynomial_oracle(square_targets())
    res = DemoResult("square")
    ideal = square_network()
    res.add("width", ideal.width, 4, passed=ideal.width == 4)
    res.add("ideal sup error", sup_error(ideal, oracle, SQUARE_BOX), 1e-6)
    lowered = square_network(SQUARE_H_LOWERED)
    res.add(f"lowered sup error at h={SQUARE_H_LOWERED:g}, s={SQUARE_S_LOWERED:g}",
            sup_error(lowered, oracle, SQUARE_BOX), 1e-3)
    return res


@_timed
def demo_poly_sigma(seed: int = 0) -> DemoResult:
    """Square model at fused step ``SIGMA_S``, squares and identities lowered to ``x^3 + x^2``."""
    oracle = polynomial_oracle(square_targets())
    base = square_network(s=SIGMA_S)
    base_error = sup_error(base, oracle, SQUARE_BOX)
    expanded = layer_expand(base)
    res = DemoResult("poly-sigma")
    res.add(f"ideal sup error at s={SIGMA_S:g}", base_error)
    excess, total = [], []
    for h in SIGMA_H:
        net = lower_square_sigma(expanded, "cubic_square", h)
        if h == SIGMA_H[0]:
            res.add("width", net.width, 5, passed=net.width == 5)
        total.append(sup_error(net, oracle, SQUARE_BOX))
        excess.append(sup_error(net, base, SQUARE_BOX))
        res.add(f"sup error at h={h:g}", total[-1])
    res.add("distance to unlowered network non-increasing in h", float(is_non_increasing(excess)), None,
            passed=is_non_increasing(excess))
    res.add(f"sup error at h={SIGMA_H[0]:g} minus ideal level", total[0] - base_error, 1e-2)
    return res


@_timed
def demo_poly_rho(seed: int = 0) -> DemoResult:
    """All-square lowered square model, then every neuron replaced by ``rho_h`` of ``x^3 + x^2``."""
    oracle = polynomial_oracle(square_targets())
    base = square_network(h=RHO_H_IDENTITY, s=RHO_S)
    res = DemoResult("poly-rho")
    res.add("all-square base sup error", sup_error(base, oracle, SQUARE_BOX))
    errors = []
    for h in RHO_H:
        net = lower_square_rho(base, "cubic_square", h)
        if h == RHO_H[0]:
            res.add("width", net.width, 4, passed=net.width == 4)
        errors.append(sup_error(net, oracle, SQUARE_BOX))
        res.add(f"sup error at h={h:g}", errors[-1])
    res.add("h-sweep non-increasing", float(is_non_increasing(errors)), None, passed=is_non_increasing(errors))
    res.add("final sup error", errors[-1], 1e-2)
    return res


def pathological_shallow(seed: int = 0) -> list[ShallowNet]:
    """Shallow nets of the non-differentiable activation fitted to :func:`register_nets`."""
    K = Box.cube(-1.0, 1.0, 2)
    cfg = dict(PATHOLOGICAL_FIT)
    width = cfg.pop("width")
    return [
        fit_shallow(net, K, width, "pathological", seed=seed + i, bias_shift=DEFAULT_A, **cfg)
        for i, net in enumerate(register_nets(seed))
    ]


@_timed
def demo_pathological(seed: int = 0) -> DemoResult:
    K = Box.cube(-1.0, 1.0, 2)
    oracle = shallow_oracle(register_nets(seed))
    shallow = pathological_shallow(seed)
    net = compile_register(shallow, h=PATHOLOGICAL_H, A=DEFAULT_A)
    res = DemoResult("pathological")
    res.add("shallow fit residual", max(s.residual for s in shallow))
    res.add("width", net.width, 5, passed=net.width == 5)
    res.add(f"lowered sup error at h={PATHOLOGICAL_H:g}, A=2pi*25", sup_error(net, oracle, K), 1e-2)
    return res


def relu_lp_network(seed: int = 0, eps: float = LP_EPS):
    """Triangle bump on ``J = [-1, 1]``, cut off outside ``K = [-1.1, 1.1]``."""
    J = Box((-1.0,), (1.0,))
    delta = eps
    K = Box((-1.0 - delta,), (1.0 + delta,))
    shallow = fit_shallow(triangle_bump, K, 40, "relu", seed=seed, samples=2000, ridge=1e-10)
    N = shift_bound(shallow, K)
    g_net = compile_register([shallow], N=N)
    g_vals = evaluate(g_net, K.grid(2001))
    cutoff = CutoffSpec.around(J, delta, (float(g_vals.min()), float(g_vals.max())), N)
    return compile_relu_lp(g_net, cutoff), cutoff


@_timed
def demo_relu_lp(seed: int = 0, eps: float = LP_EPS) -> DemoResult:
    net, cutoff = relu_lp_network(seed, eps)
    rng = np.random.default_rng(seed)
    K = cutoff.K
    # 10^4 points outside K: half left of it, half right, over a wide range
    far = 1e3
    left = rng.uniform(-far, K.lower[0], 5000)
    right = rng.uniform(K.upper[0], far, 5000)
    outside = np.concatenate([left, right])
    outside = outside[~Box(K.lower, K.upper).contains(outside[:, None])][:, None]
    res = DemoResult("relu-lp")
    res.add("width", net.width, 3, passed=net.width == 3)
    res.add("max |G| outside K", np.abs(evaluate(net, outside)).max(), 0.0, passed=bool(np.all(evaluate(net, outside) == 0)))
    enclosing = Box((K.lower[0] - 1.0,), (K.upper[0] + 1.0,))
    l1 = lp_error(net, lambda X: triangle_bump(X)[:, None], enclosing, p=1.0, samples=100_000, seed=seed)
    res.add("L1 error", l1, 3 * (eps / 3))
    return res


DEMOS: dict[str, Callable[..., DemoResult]] = {
    "register": demo_register,
    "square": demo_square,
    "poly-sigma": demo_poly_sigma,
    "poly-rho": demo_poly_rho,
    "pathological": demo_pathological,
    "relu-lp": demo_relu_lp,
}


def run(name: str, seed: int = 0) -> DemoResult:
    if name not in DEMOS:
        raise KeyError(f"unknown demo {name!r}; choose from {', '.join(DEMOS)}")
    return DEMOS[name](seed=seed)


__all__ = ["DEMOS", "DemoResult", "Check", "run", "register_nets", "square_targets", "triangle_bump"]
