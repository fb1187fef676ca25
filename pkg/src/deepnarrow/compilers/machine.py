"""Layer-by-layer builder for fixed-width networks.

The builder keeps one *slot* per neuron position.  A slot holds an affine
expression of the previous layer's outputs (an :class:`Expr`), which lets
post-affines such as the ``/4`` of the multiplication gadget stay symbolic
until the next layer consumes them.  Neurons not claimed by a step carry
their slot forward through the configured carry neuron (the ideal identity,
or an exact/approximate identity gadget).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..enhanced import Replacement, Term
from ..gadgets import GadgetFragment
from ..net_ir import IDENTITY, AffineMap, Layer, Network

IDEAL_CARRY = Replacement((Term(IDENTITY, 1.0, 0.0, 1.0),))


@dataclass(frozen=True, eq=False)
class Expr:
    """``w @ prev + b`` over the previous layer's outputs."""

    w: np.ndarray
    b: float = 0.0

    @classmethod
    def zero(cls, dim: int) -> "Expr":
        return cls(np.zeros(dim), 0.0)

    @classmethod
    def unit(cls, dim: int, i: int, scale: float = 1.0, shift: float = 0.0) -> "Expr":
        w = np.zeros(dim)
        w[i] = scale
        return cls(w, shift)

    def __add__(self, other):
        if isinstance(other, Expr):
            return Expr(self.w + other.w, self.b + other.b)
        return Expr(self.w, self.b + float(other))

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-1.0) * other

    def __rsub__(self, other):
        return (-1.0) * self + other

    def __mul__(self, k: float):
        return Expr(self.w * float(k), self.b * float(k))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


class Machine:
    def __init__(self, input_dim: int, width: int, init: Sequence[Expr] | None = None,
                 carry: Replacement = IDEAL_CARRY):
        self.input_dim = input_dim
        self.width = width
        self.carry = carry
        self.layers: list[Layer] = []
        self.state: list[Expr] = list(init) if init is not None else [Expr.zero(input_dim)] * width
        if len(self.state) != width:
            raise ValueError("init must provide one expression per slot")

    @property
    def dim(self) -> int:
        """Dimension of the expressions currently held in slots."""
        return self.layers[-1].width if self.layers else self.input_dim

    def zero(self) -> Expr:
        return Expr.zero(self.dim)

    def step(self, neurons: dict[int, tuple[str, Expr]]) -> None:
        """Emit one layer; claimed neurons get ``(tag, input)``, the rest carry.

        Claimed slots afterwards hold their raw neuron output; carried slots
        hold the carried value.
        """
        rows, bias, tags, new_state = [], [], [], []
        (term,) = self.carry.terms
        for i in range(self.width):
            if i in neurons:
                tag, e = neurons[i]
                rows.append(e.w)
                bias.append(e.b)
                tags.append(tag)
                new_state.append(("raw", i))
            else:
                e = self.state[i]
                rows.append(term.pre_scale * e.w)
                bias.append(term.pre_scale * e.b + term.pre_shift)
                tags.append(term.tag)
                new_state.append(("carry", i))
        self.layers.append(Layer(AffineMap(np.array(rows), bias), tags))
        self.state = [
            Expr.unit(self.width, i)
            if kind == "raw"
            else Expr.unit(self.width, i, term.post_scale, self.carry.offset)
            for kind, i in new_state
        ]

    def splice(self, frag: GadgetFragment, inputs: Sequence[Expr], neurons: Sequence[int]) -> list[Expr]:
        """Run ``frag`` on ``neurons``; return its outputs as expressions.

        The slots of ``neurons`` are clobbered; the caller reassigns them.
        """
        if len(inputs) != frag.in_dim:
            raise ValueError("input count does not match fragment")
        if len(neurons) < frag.width:
            raise ValueError("fragment is wider than the neurons provided")
        current = list(inputs)
        for layer in frag.layers:
            W, b = layer.affine.weights, layer.affine.bias
            claim = {}
            for r in range(layer.width):
                e = Expr.zero(self.dim) + float(b[r])
                for c, x in enumerate(current):
                    if W[r, c]:
                        e = e + W[r, c] * x
                claim[neurons[r]] = (layer.activations[r], e)
            self.step(claim)
            current = [self.state[neurons[r]] for r in range(layer.width)]
        W, b = frag.readout.weights, frag.readout.bias
        outputs = []
        for r in range(frag.out_dim):
            e = Expr.zero(self.dim) + float(b[r])
            for c, x in enumerate(current):
                if W[r, c]:
                    e = e + W[r, c] * x
            outputs.append(e)
        return outputs

    def network(self, outputs: Sequence[Expr]) -> Network:
        W = np.array([e.w for e in outputs]).reshape(len(outputs), self.dim)
        return Network(self.input_dim, self.layers, AffineMap(W, [e.b for e in outputs]))
