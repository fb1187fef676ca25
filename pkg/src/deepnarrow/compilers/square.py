"""Square-activation construction of polynomial targets at width ``n + m + 1``.

Inputs are first mapped affinely into ``[1 + margin, 2 - margin]^n`` so
every monomial is positive.  Targets ``g_2 .. g_m`` are accumulated in their
out-registers term by term using the computation neuron and the ``g_1``
out-register as scratch.  ``g_1`` has no spare neuron left, so it is
evaluated in the nested form

    g_1 = c_1 γ_1 (1 + (c_2 γ_2)/(c_1 γ_1) (1 + ... (1 + (c_M γ_M)/(c_{M-1} γ_{M-1}))))

from the innermost bracket outwards, replacing all in-registers by their
(approximate) reciprocals before every division and again before every
multiplication by a numerator, ``2M - 2`` times in total.
"""
from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .. import activations
from ..gadgets import DEFAULT_S, PreconditionError, mult_gadget, reciprocal_gadget
from ..net_ir import Box, Network
from ..polynomial import Polynomial
from .lowering import lower_identities
from .machine import Expr, Machine

# 1 - z must stay well inside (-1, 1) for 6 reciprocal stages to converge
DEFAULT_MARGIN = 0.25
DEFAULT_STAGES = 6


def plan_monomial_chain(exponents: Sequence[int]) -> list[int]:
    """Variable indices in the order a left-nested multiplication chain uses them.

    The first entry is loaded directly; each further entry costs one
    multiplication.  ``x1^2 x2 x3`` gives ``[2, 1, 0, 0]``, i.e.
    ``x1 (x1 (x2 x3))``.  A constant monomial gives ``[]``.
    """
    factors = [k for k, e in enumerate(exponents) for _ in range(int(e))]
    return factors[::-1]


def input_remap(box: Box, margin: float = DEFAULT_MARGIN) -> tuple[np.ndarray, np.ndarray]:
    """Per-coordinate ``(scale, shift)`` sending ``box`` onto ``[1 + margin, 2 - margin]``."""
    if not 0 < margin < 0.5:
        raise PreconditionError("margin must lie in (0, 0.5)")
    lo, hi = np.array(box.lower), np.array(box.upper)
    scale = (1 - 2 * margin) / (hi - lo)
    shift = 1 + margin - lo * scale
    return scale, shift


def remap_polynomial(p: Polynomial, box: Box, margin: float = DEFAULT_MARGIN) -> Polynomial:
    """``p`` rewritten in the remapped variables."""
    scale, shift = input_remap(box, margin)
    return p.compose_affine(1 / scale, -shift / scale)


def _mult(machine: Machine, a: Expr, b: Expr, neurons) -> Expr:
    (out,) = machine.splice(mult_gadget(), [a, b], neurons)
    return out


def _monomial(machine: Machine, exponents, neurons) -> Expr:
    factors = plan_monomial_chain(exponents)
    if not factors:
        return machine.zero() + 1.0
    p = machine.state[factors[0]]
    for k in factors[1:]:
        p = _mult(machine, p, machine.state[k], neurons)
    return p


def compile_square(
    targets: Sequence[Polynomial],
    box: Box,
    recip_stages: int = DEFAULT_STAGES,
    h: float | None = None,
    s: float = DEFAULT_S,
    margin: float = DEFAULT_MARGIN,
) -> Network:
    """Square-activation network of width ``n + m + 1`` computing ``targets`` on ``box``.

    With ``h=None`` register neurons keep ideal ``id`` tags; otherwise they
    are lowered to square-activation identity gadgets with step ``h``, and
    the result uses the square activation only.  ``s`` is the step of the
    fused gadgets inside each reciprocal.
    """
    if not targets:
        raise PreconditionError("need at least one target polynomial")
    n = box.dim
    for i, p in enumerate(targets):
        if p.n_vars != n:
            raise PreconditionError(f"target {i + 1} has {p.n_vars} variables, box has {n}")
        if not p.terms:
            raise PreconditionError(f"target {i + 1} is the zero polynomial")
    m = len(targets)
    comp, out = n, [n + 1 + i for i in range(m)]
    scratch = (comp, out[0])
    scale, shift = input_remap(box, margin)
    init = [Expr.unit(n, k, scale[k], shift[k]) for k in range(n)] + [Expr.zero(n)] * (m + 1)
    machine = Machine(n, n + m + 1, init)
    remapped = [remap_polynomial(p, box, margin) for p in targets]

    for i in range(1, m):
        for c, e in remapped[i].terms:
            value = _monomial(machine, e, scratch)
            machine.state[out[i]] = machine.state[out[i]] + c * value

    terms = remapped[0].terms
    recip = reciprocal_gadget(recip_stages, s=s)

    def reciprocate_inputs():
        for k in range(n):
            (machine.state[k],) = machine.splice(recip, [machine.state[k]], (comp, k))

    def multiply_by(exponents):
        for k in plan_monomial_chain(exponents):
            machine.state[out[0]] = _mult(machine, machine.state[out[0]], machine.state[k], scratch)

    c_last, e_last = terms[-1]
    machine.state[out[0]] = _monomial(machine, e_last, scratch)
    if len(terms) == 1:
        machine.state[out[0]] = c_last * machine.state[out[0]]
    for j in range(len(terms) - 2, -1, -1):
        c_j, e_j = terms[j]
        c_next = terms[j + 1][0]
        reciprocate_inputs()
        multiply_by(e_j)
        machine.state[out[0]] = (c_next / c_j) * machine.state[out[0]] + 1.0
        reciprocate_inputs()
        multiply_by(e_j)
    if len(terms) > 1:
        machine.state[out[0]] = terms[0][0] * machine.state[out[0]]

    net = machine.network([machine.state[o] for o in out])
    if h is None:
        return net
    return lower_identities(net, activations.get("square"), h)


def nested_reference(p: Polynomial, Z, reciprocal: Callable[[np.ndarray], np.ndarray] = lambda z: 1.0 / z) -> np.ndarray:
    """Evaluate the nested form of ``p`` at remapped points ``Z`` with a given reciprocal.

    Mirrors the network's order of operations on exact arithmetic, so with
    the true reciprocal it must reproduce ``p(Z)``.
    """
    Z = np.atleast_2d(np.asarray(Z, dtype=np.float64))
    terms = p.terms
    regs = Z.copy()

    def mono(e):
        return np.prod(regs ** np.array(e), axis=1)

    v = mono(terms[-1][1])
    if len(terms) == 1:
        return terms[-1][0] * v
    for j in range(len(terms) - 2, -1, -1):
        c_j, e_j = terms[j]
        regs = reciprocal(regs)
        v = v * mono(e_j)
        v = (terms[j + 1][0] / c_j) * v + 1.0
        regs = reciprocal(regs)
        v = v * mono(e_j)
    return terms[0][0] * v
