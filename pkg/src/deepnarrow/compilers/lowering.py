"""Passes that rewrite activation tags into enhanced neurons of a target activation."""
from __future__ import annotations


from .. import activations
from ..activations import ActivationSpec
from ..enhanced import Replacement, substitute
from ..gadgets import (
    DEFAULT_A,
    PreconditionError,
    identity_terms,
    pathological_identity_terms,
    relu_identity_terms,
    rho_terms,
    sigma_terms,
)
from ..net_ir import IDENTITY, AffineMap, Layer, Network

SQUARE = "square"


def _spec(spec) -> ActivationSpec:
    return activations.get(spec) if isinstance(spec, str) else spec


def identity_replacement(spec, h: float, A: float | None = None, N: float | None = None) -> Replacement:
    """The identity gadget appropriate for ``spec``.

    ReLU with ``N`` uses the exact shifted identity; the non-differentiable
    activation uses the ``rho(hx + A) / h`` form; everything else the
    difference quotient at ``alpha_d1``.
    """
    spec = _spec(spec)
    if N is not None:
        if spec.key != "relu":
            raise PreconditionError("the exact shifted identity needs the relu activation")
        return relu_identity_terms(N)
    if not spec.differentiable:
        return pathological_identity_terms(h, DEFAULT_A if A is None else A, spec.key)
    return identity_terms(spec, h)


def lower_identities(net: Network, spec, h: float, A: float | None = None, N: float | None = None) -> Network:
    """Replace every ``id`` neuron by a single enhanced neuron of ``spec``; width is unchanged."""
    rep = identity_replacement(spec, h, A, N)
    return substitute(net, lambda _l, _i, tag: rep if tag == IDENTITY else None)


def layer_expand(net: Network) -> Network:
    """Serialize each layer so that at most one neuron squares per layer.

    A ``k``-wide layer becomes ``k`` layers: the first applies the original
    affine map, layer ``i`` applies neuron ``i``'s activation and carries
    the others with ``id``.  The function computed is unchanged.
    """
    layers = []
    for li, layer in enumerate(net.layers):
        bad = set(layer.activations) - {SQUARE, IDENTITY}
        if bad:
            raise PreconditionError(f"layer {li} has tags {sorted(bad)}; only square/id can be expanded")
        k = layer.width
        for i in range(k):
            affine = layer.affine if i == 0 else AffineMap.identity(k)
            tags = [IDENTITY] * k
            tags[i] = layer.activations[i]
            layers.append(Layer(affine, tags))
    return Network(net.input_dim, layers, net.output)


def lower_square_sigma(net: Network, spec, h: float, h_identity: float | None = None) -> Network:
    """Replace each square by two ``spec`` neurons and each ``id`` by an identity gadget.

    Needs at most one square per layer (run :func:`layer_expand` first);
    every layer of the result has the input width plus one.
    """
    spec = _spec(spec)
    for li, layer in enumerate(net.layers):
        if layer.activations.count(SQUARE) > 1:
            raise PreconditionError(f"layer {li} has more than one square neuron; expand it first")
        other = set(layer.activations) - {SQUARE, IDENTITY}
        if other:
            raise PreconditionError(f"layer {li} has unexpected tags {sorted(other)}")
    sq = sigma_terms(spec, h)
    ident = identity_terms(spec, h if h_identity is None else h_identity)
    reps = {SQUARE: sq, IDENTITY: ident}
    return substitute(net, lambda _l, _i, tag: reps[tag], pad_to=net.width + 1, pad_tag=spec.key)


def lower_square_rho(net: Network, spec, h: float) -> Network:
    """Give every neuron the activation ``rho_h``, realised with ``spec`` directly.

    All hidden neurons must be square; ``spec`` must declare a critical
    point with nonzero second derivative.
    """
    spec = _spec(spec)
    rep = rho_terms(spec, h)
    for li, layer in enumerate(net.layers):
        if any(tag != SQUARE for tag in layer.activations):
            raise PreconditionError(
                f"layer {li} has non-square tags; lower identities with the square activation first"
            )
    return substitute(net, lambda _l, _i, _tag: rep)


