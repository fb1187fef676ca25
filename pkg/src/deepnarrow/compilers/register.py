"""Register construction: stack shallow networks into one narrow deep network.

Layout of every hidden layer (width ``n + m + 1``)::

    [ in-register x_1 .. x_n | computation | out-register g_1 .. g_m ]

The computation neuron evaluates one hidden neuron of one shallow network
per layer; the out-registers accumulate the weighted results.
"""
from __future__ import annotations

from typing import Sequence

from ..gadgets import PreconditionError
from ..net_ir import Network
from ..shallow import ShallowNet
from .lowering import lower_identities
from .machine import Expr, Machine


def compile_register(
    shallow: Sequence[ShallowNet],
    h: float | None = None,
    A: float | None = None,
    N: float | None = None,
) -> Network:
    """Compile ``m`` shallow networks into a width ``n + m + 1`` network.

    ``h=None`` keeps ideal ``id`` registers and reproduces the shallow
    networks exactly.  Otherwise the registers are lowered to identity
    gadgets of the shared activation with step ``h`` (shift ``A`` for the
    non-differentiable activation, exact shift ``N`` for ReLU).
    """
    if not shallow:
        raise PreconditionError("need at least one shallow network")
    n = shallow[0].n_inputs
    act = shallow[0].activation
    for net in shallow:
        if net.n_inputs != n or net.activation != act:
            raise PreconditionError("shallow networks must share input dimension and activation")
    m = len(shallow)
    comp = n
    out = [n + 1 + i for i in range(m)]
    init = [Expr.unit(n, k) for k in range(n)] + [Expr.zero(n)] * (m + 1)
    machine = Machine(n, n + m + 1, init)
    pending = None  # (out slot, weight) of the previous computation neuron
    for i, net in enumerate(shallow):
        for j in range(net.n_hidden):
            if pending is not None:
                slot, c = pending
                machine.state[slot] = machine.state[slot] + c * machine.state[comp]
            pre = Expr.zero(machine.dim) + net.biases[j]
            for k in range(n):
                pre = pre + net.weights[j, k] * machine.state[k]
            machine.step({comp: (act, pre)})
            pending = (out[i], net.out_weights[j])
    if pending is not None:
        slot, c = pending
        machine.state[slot] = machine.state[slot] + c * machine.state[comp]
    outputs = [machine.state[out[i]] + net.out_bias for i, net in enumerate(shallow)]
    ideal = machine.network(outputs)
    if h is None and N is None:
        return ideal
    return lower_identities(ideal, act, h, A=A, N=N)
