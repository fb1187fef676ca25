"""Enhanced neurons: ``post ∘ rho ∘ pre`` with affine ``pre``/``post``.

A neuron of an existing network can be replaced by an affine combination of
enhanced neurons acting on the same pre-activation.  The pre-affines fold
into the neuron's own row; the post-affines fold into the columns of the
following layer (or the readout).  Every lowering pass is an instance of
:func:`substitute`.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .net_ir import AffineMap, Layer, Network


@dataclass(frozen=True)
class Term:
    """``post_scale * rho(pre_scale * u + pre_shift)`` for pre-activation ``u``."""

    tag: str
    pre_scale: float
    pre_shift: float
    post_scale: float


@dataclass(frozen=True)
class Replacement:
    """Neuron output ``sum(term) + offset``."""

    terms: tuple[Term, ...]
    offset: float = 0.0

    def __call__(self, u, registry) -> np.ndarray:
        from .net_ir import IDENTITY

        u = np.asarray(u, dtype=np.float64)
        out = np.full_like(u, self.offset)
        for t in self.terms:
            z = t.pre_scale * u + t.pre_shift
            out = out + t.post_scale * (z if t.tag == IDENTITY else registry[t.tag].fn(z))
        return out


Chooser = Callable[[int, int, str], Optional[Replacement]]


def _expand_columns(affine: AffineMap, colmap, offsets, width: int) -> tuple[np.ndarray, np.ndarray]:
    W, b = affine.weights, affine.bias.copy()
    W_new = np.zeros((W.shape[0], width))
    for j, cols in enumerate(colmap):
        for t, post in cols:
            W_new[:, t] += post * W[:, j]
        if offsets[j]:
            b += offsets[j] * W[:, j]
    return W_new, b


def substitute(net: Network, choose: Chooser, pad_to: int | None = None, pad_tag: str | None = None) -> Network:
    """Replace neurons of ``net`` according to ``choose(layer, neuron, tag)``.

    ``choose`` returns ``None`` to keep a neuron as is.  When ``pad_to`` is
    set, every hidden layer narrower than ``pad_to`` gets inert ``pad_tag``
    neurons (zero weights, ignored downstream) so all layers share a width.
    """
    colmap = [[(j, 1.0)] for j in range(net.input_dim)]
    offsets = [0.0] * net.input_dim
    width = net.input_dim
    layers = []
    for li, layer in enumerate(net.layers):
        W_in, b_in = _expand_columns(layer.affine, colmap, offsets, width)
        rows, biases, tags = [], [], []
        new_colmap, new_offsets = [], []
        for i, tag in enumerate(layer.activations):
            rep = choose(li, i, tag)
            if rep is None:
                rep = Replacement((Term(tag, 1.0, 0.0, 1.0),))
            cols = []
            for term in rep.terms:
                cols.append((len(rows), term.post_scale))
                rows.append(term.pre_scale * W_in[i])
                biases.append(term.pre_scale * b_in[i] + term.pre_shift)
                tags.append(term.tag)
            new_colmap.append(cols)
            new_offsets.append(rep.offset)
        if pad_to is not None:
            while len(rows) < pad_to:
                rows.append(np.zeros(W_in.shape[1]))
                biases.append(0.0)
                tags.append(pad_tag)
        layers.append(Layer(AffineMap(np.array(rows).reshape(len(rows), W_in.shape[1]), biases), tags))
        colmap, offsets, width = new_colmap, new_offsets, len(rows)
    W_out, b_out = _expand_columns(net.output, colmap, offsets, width)
    return Network(net.input_dim, layers, AffineMap(W_out, b_out))
