"""ReLU cut-off: turn a uniform approximation on ``K`` into one with compact support.

Starting from a ReLU register network ``g`` whose in-registers are carried
by ``max(0, x + N) - N``, the compiler appends layers that build the bump

    U(x) = min_k U_k(x_k),   U_k = trapezoid(A_k, a_k, b_k, B_k)

in the in-register slots, then clips each output,

    theta = max(0, g - cU),  lam = max(0, -theta + (C - c)U),  G = -lam + CU,

which equals ``min(max(g, cU), CU)`` and vanishes wherever ``U = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gadgets import PreconditionError, min_gadget, relu_identity_terms, urysohn_gadget
from ..net_ir import Box, Network
from ..shallow import ShallowNet
from .machine import Expr, Machine


@dataclass(frozen=True)
class CutoffSpec:
    """Support box ``J``, enlarged box ``K``, clip bounds ``c < 0 < C`` and carry shift ``N``."""

    J: Box
    K: Box
    C: float
    c: float
    N: float

    def __post_init__(self):
        if self.J.dim != self.K.dim:
            raise PreconditionError("J and K must have the same dimension")
        a, b = np.array(self.J.lower), np.array(self.J.upper)
        A, B = np.array(self.K.lower), np.array(self.K.upper)
        if not (np.all(A < a) and np.all(b < B)):
            raise PreconditionError("J must lie strictly inside K")
        if not self.c < 0 < self.C:
            raise PreconditionError(f"need c < 0 < C, got c={self.c}, C={self.C}")
        if not self.N > -A.min():
            raise PreconditionError(f"N must exceed -min(K.lower) = {-A.min()}, got {self.N}")

    @classmethod
    def around(cls, J: Box, delta: float, g_range: tuple[float, float], N: float) -> "CutoffSpec":
        """``K = J`` grown by ``delta``; ``C = sup g + 1``, ``c = inf g - 1``."""
        lo, hi = g_range
        K = Box(np.array(J.lower) - delta, np.array(J.upper) + delta)
        return cls(J, K, max(hi, 0.0) + 1.0, min(lo, 0.0) - 1.0, N)


def shift_bound(shallow: ShallowNet, K: Box, grid_per_dim: int = 101) -> float:
    """A carry shift ``N`` large enough for ``shallow`` compiled over ``K``.

    Bounds every partial out-register sum by ``sum_j |c_j| sup_K |relu(...)|``
    (the sup taken over the corners, where the affine pre-activations peak),
    and keeps ``-N`` below ``K``.
    """
    corners = Box(K.lower, K.upper).grid(2)
    pre = corners @ shallow.weights.T + shallow.biases
    peak = np.maximum(pre, 0.0).max(axis=0)
    partial = float(np.sum(np.abs(shallow.out_weights) * peak))
    return 1.0 + max(partial, float(np.max(np.abs(K.lower))), float(np.max(np.abs(K.upper))))


def _check_register(g_net: Network, n: int, N: float) -> None:
    for li, layer in enumerate(g_net.layers):
        W, b = layer.affine.weights, layer.affine.bias
        for k in range(n):
            row = np.zeros(W.shape[1])
            row[k] = 1.0
            want = N if li == 0 else 0.0
            if layer.activations[k] != "relu" or not np.array_equal(W[k], row) or b[k] != want:
                raise PreconditionError(
                    f"layer {li} neuron {k} is not an in-register carried with N={N}"
                )


def compile_relu_lp(g_net: Network, cutoff: CutoffSpec) -> Network:
    """Clip the outputs of ``g_net`` against the bump of ``cutoff``; width unchanged."""
    n, m = g_net.input_dim, g_net.output_dim
    if n != cutoff.K.dim:
        raise PreconditionError("cutoff dimension does not match the network input")
    if g_net.width != n + m + 1 or any(layer.width != n + m + 1 for layer in g_net.layers):
        raise PreconditionError(f"g_net must have register width n + m + 1 = {n + m + 1}")
    N = cutoff.N
    _check_register(g_net, n, N)
    comp, out = n, [n + 1 + i for i in range(m)]
    width = n + m + 1
    machine = Machine(n, width, carry=relu_identity_terms(N))
    machine.layers = list(g_net.layers)
    W, b = g_net.output.weights, g_net.output.bias
    state = [Expr.unit(width, k, 1.0, -N) for k in range(n)] + [Expr.zero(width)]
    state += [Expr(W[i], b[i]) for i in range(m)]
    machine.state = state

    (a, A), (bb, B) = (cutoff.J.lower, cutoff.K.lower), (cutoff.J.upper, cutoff.K.upper)
    for k in range(n):
        frag = urysohn_gadget(A[k], a[k], bb[k], B[k])
        (machine.state[k],) = machine.splice(frag, [machine.state[k]], (comp, k))
    for k in range(1, n):
        (machine.state[0],) = machine.splice(min_gadget(), [machine.state[0], machine.state[k]], (comp, k))
    U = machine.state[0]
    C, c = cutoff.C, cutoff.c
    machine.step({o: ("relu", machine.state[o] - c * U) for o in out})
    U = machine.state[0]
    machine.step({o: ("relu", -1.0 * machine.state[o] + (C - c) * U) for o in out})
    U = machine.state[0]
    return machine.network([-1.0 * machine.state[o] + C * U for o in out])


def clip_reference(g_values, U_values, C: float, c: float) -> np.ndarray:
    """``min(max(g, cU), CU)`` evaluated directly."""
    g, U = np.asarray(g_values, dtype=np.float64), np.asarray(U_values, dtype=np.float64)
    return np.minimum(np.maximum(g, c * U), C * U)


def bump_reference(X, cutoff: CutoffSpec) -> np.ndarray:
    """``U(x)`` evaluated directly from the trapezoids."""
    from ..gadgets import urysohn

    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    parts = [
        urysohn(X[:, k], cutoff.K.lower[k], cutoff.J.lower[k], cutoff.J.upper[k], cutoff.K.upper[k])
        for k in range(X.shape[1])
    ]
    return np.min(parts, axis=0)
