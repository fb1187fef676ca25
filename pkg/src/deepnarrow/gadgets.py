"""Small network fragments, one per building block of the constructions.

Each constructor returns a :class:`GadgetFragment`: a few hidden layers plus
a readout affine.  The readout is not a layer of its own; whoever splices the
fragment folds it into the next layer, the same way an enhanced neuron's
post-affine is absorbed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import activations
from .activations import ActivationSpec
from .enhanced import Replacement, Term, substitute
from .net_ir import IDENTITY, AffineMap, Layer, Network

EXACT = "exact"
APPROX = "approx"

DEFAULT_H = 1e-3
# best exact-identity accuracy in float64: the s y^2 / 2 bias against eps / s cancellation
DEFAULT_S = 1e-8
DEFAULT_A = 2 * math.pi * 25


class PreconditionError(ValueError):
    """Gadget parameters violate the construction's hypotheses."""


@dataclass(frozen=True, eq=False)
class GadgetFragment:
    layers: tuple[Layer, ...]
    readout: AffineMap
    exactness: str = EXACT
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        # validates dimension chaining
        self.to_network()

    @property
    def in_dim(self) -> int:
        return self.layers[0].affine.in_dim if self.layers else self.readout.in_dim

    @property
    def out_dim(self) -> int:
        return self.readout.out_dim

    @property
    def width(self) -> int:
        return max(layer.width for layer in self.layers)

    def to_network(self) -> Network:
        return Network(self.in_dim, self.layers, self.readout)

    def __call__(self, x, registry=None):
        return self.to_network()(x, registry)


# -- identity approximations -------------------------------------------------


def identity_terms(spec: ActivationSpec, h: float) -> Replacement:
    """``x -> (rho(h x + alpha) - rho(alpha)) / (h rho'(alpha))``."""
    if h == 0:
        raise PreconditionError("h must be nonzero")
    p = spec.require_d1()
    scale = 1.0 / (h * p.d1)
    return Replacement((Term(spec.key, h, p.alpha, scale),), -p.value * scale)


def check_shift(A: float) -> None:
    k = A / (2 * math.pi)
    if A <= 0 or abs(k - round(k)) > 1e-9 * max(1.0, k):
        raise PreconditionError(f"A must be a positive multiple of 2*pi, got {A}")


def pathological_identity_terms(h: float, A: float = DEFAULT_A, key: str = "pathological") -> Replacement:
    """``x -> rho(h x + A) / h`` for ``rho = sin + w exp(-x)``."""
    if h == 0:
        raise PreconditionError("h must be nonzero")
    check_shift(A)
    return Replacement((Term(key, h, A, 1.0 / h),))


def relu_identity_terms(N: float) -> Replacement:
    """``x -> max(0, x + N) - N``; exact for ``x >= -N``."""
    if not math.isfinite(N):
        raise PreconditionError("N must be finite")
    return Replacement((Term("relu", 1.0, N, 1.0),), -N)


def _from_terms(rep: Replacement, exactness: str, **params) -> GadgetFragment:
    layer = Layer(
        AffineMap([[t.pre_scale] for t in rep.terms], [t.pre_shift for t in rep.terms]),
        tuple(t.tag for t in rep.terms),
    )
    readout = AffineMap([[t.post_scale for t in rep.terms]], [rep.offset])
    return GadgetFragment((layer,), readout, exactness, params)


def identity_gadget(spec: ActivationSpec, h: float = DEFAULT_H, domain=None) -> GadgetFragment:
    """One enhanced neuron approximating the identity near ``spec.alpha_d1``.

    The error on a compact interval is first order in ``h`` in general and
    second order when ``alpha_d1`` is an inflection point.
    """
    return _from_terms(identity_terms(spec, h), APPROX, h=h, domain=domain)


def identity_gadget_pathological(h: float = DEFAULT_H, A: float = DEFAULT_A) -> GadgetFragment:
    return _from_terms(pathological_identity_terms(h, A), APPROX, h=h, A=A)


def relu_exact_identity(N: float) -> GadgetFragment:
    return _from_terms(relu_identity_terms(N), EXACT, N=N)


# -- square-activation arithmetic --------------------------------------------


def mult_gadget() -> GadgetFragment:
    """``(x, y) -> xy`` as ``((x + y)^2 - (x - y)^2) / 4``."""
    layer = Layer(AffineMap([[1.0, 1.0], [1.0, -1.0]], [0.0, 0.0]), ("square", "square"))
    return GadgetFragment((layer,), AffineMap([[0.25, -0.25]], [0.0]), EXACT)


def fused_gadget(s: float = DEFAULT_S, h: float | None = None, spec: ActivationSpec | None = None) -> GadgetFragment:
    """Three width-2 layers mapping ``(x, y)`` to ``(x^2, y(x + 1) + s y^2 / 2)``.

    With ``h=None`` the register neurons keep the ``id`` tag; otherwise they
    are lowered to identity gadgets of ``spec`` (square by default).
    """
    if s == 0:
        raise PreconditionError("s must be nonzero")
    sq, I = "square", IDENTITY
    layers = (
        # eta1 = x, zeta1 = (x + s y + 1)^2
        Layer(AffineMap([[1.0, 0.0], [1.0, s]], [0.0, 1.0]), (I, sq)),
        # eta2 = eta1^2, zeta2 = zeta1 - 2 eta1 - 1
        Layer(AffineMap([[1.0, 0.0], [-2.0, 1.0]], [0.0, -1.0]), (sq, I)),
        # eta3 = eta2, zeta3 = (zeta2 - eta2) / 2s
        Layer(AffineMap([[1.0, 0.0], [-0.5 / s, 0.5 / s]], [0.0, 0.0]), (I, I)),
    )
    frag = GadgetFragment(layers, AffineMap.identity(2), APPROX, {"s": s, "h": h})
    return _lower_fragment(frag, h, spec)


def reciprocal_gadget(
    stages: int,
    h: float | None = None,
    s: float = DEFAULT_S,
    spec: ActivationSpec | None = None,
) -> GadgetFragment:
    """Approximate ``x -> 1/x`` on compact subsets of ``(0, 2)``.

    Computes ``(2 - x) prod_{i=1..stages} (1 + (1 - x)^(2^i))`` with one
    leading layer and ``stages`` fused blocks; width 2, ``3 stages + 1``
    layers, single output.
    """
    if stages < 0:
        raise PreconditionError("stages must be non-negative")
    first = Layer(AffineMap([[-1.0], [-1.0]], [1.0, 2.0]), ("square", IDENTITY))
    layers = [first]
    for _ in range(stages):
        layers.extend(fused_gadget(s).layers)
    frag = GadgetFragment(layers, AffineMap([[0.0, 1.0]], [0.0]), APPROX, {"stages": stages, "s": s, "h": h})
    return _lower_fragment(frag, h, spec)


def reciprocal_closed_form(x, stages: int):
    """Value of the reciprocal construction with exact arithmetic."""
    x = np.asarray(x, dtype=np.float64)
    return (1.0 - (1.0 - x) ** (2 ** (stages + 1))) / x


def _lower_fragment(frag: GadgetFragment, h, spec) -> GadgetFragment:
    if h is None:
        return frag
    spec = activations.get("square") if spec is None else spec
    rep = identity_terms(spec, h)
    net = substitute(frag.to_network(), lambda _l, _i, tag: rep if tag == IDENTITY else None)
    return GadgetFragment(net.layers, net.output, frag.exactness, frag.params)


# -- square approximations by a general activation ----------------------------


def sigma_terms(spec: ActivationSpec, h: float) -> Replacement:
    """Second central difference ``(rho(a + hx) - 2 rho(a) + rho(a - hx)) / (h^2 rho''(a))``."""
    if h == 0:
        raise PreconditionError("h must be nonzero")
    p = spec.require_d2()
    scale = 1.0 / (h * h * p.d2)
    return Replacement(
        (Term(spec.key, h, p.alpha, scale), Term(spec.key, -h, p.alpha, scale)),
        -2.0 * p.value * scale,
    )


def rho_terms(spec: ActivationSpec, h: float) -> Replacement:
    """``(rho(a + hx) - rho(a)) / (h^2 rho''(a) / 2)`` at a critical point ``a``."""
    if h == 0:
        raise PreconditionError("h must be nonzero")
    p = spec.require_d2()
    if p.d1 != 0:
        raise PreconditionError(
            f"{spec.key}: declared rho'({p.alpha}) = {p.d1} is nonzero; "
            "the single-neuron square needs a critical point (use the sigma lowering)"
        )
    scale = 2.0 / (h * h * p.d2)
    return Replacement((Term(spec.key, h, p.alpha, scale),), -p.value * scale)


def sigma_h_gadget(spec: ActivationSpec, h: float = DEFAULT_H) -> GadgetFragment:
    return _from_terms(sigma_terms(spec, h), APPROX, h=h)


def rho_h_gadget(spec: ActivationSpec, h: float = DEFAULT_H) -> GadgetFragment:
    return _from_terms(rho_terms(spec, h), APPROX, h=h)


# -- ReLU cut-off pieces --------------------------------------------------------


def urysohn_gadget(a: float, b: float, c: float, d: float) -> GadgetFragment:
    """Trapezoid: 0 outside ``(a, d)``, 1 on ``[b, c]``, affine in between."""
    if not a < b < c < d:
        raise PreconditionError(f"need a < b < c < d, got {(a, b, c, d)}")
    m1, m2 = 1.0 / (b - a), 1.0 / (d - c)
    layers = (
        Layer(AffineMap([[m1], [m2]], [-m1 * a, -m2 * c]), ("relu", "relu")),
        Layer(AffineMap([[-1.0, 0.0], [0.0, -1.0]], [1.0, 1.0]), ("relu", "relu")),
    )
    return GadgetFragment(layers, AffineMap([[-1.0, 1.0]], [0.0]), EXACT, {"abcd": (a, b, c, d)})


def urysohn(x, a, b, c, d):
    """Closed form of the trapezoid, for checking."""
    x = np.asarray(x, dtype=np.float64)
    up = np.clip((x - a) / (b - a), 0.0, 1.0)
    down = np.clip((d - x) / (d - c), 0.0, 1.0)
    return np.minimum(up, down)


def min_gadget() -> GadgetFragment:
    """``min(x, y) = max(0, x) - max(0, x - y)`` on the non-negative quadrant."""
    layer = Layer(AffineMap([[1.0, -1.0], [1.0, 0.0]], [0.0, 0.0]), ("relu", "relu"))
    return GadgetFragment((layer,), AffineMap([[-1.0, 1.0]], [0.0]), EXACT)
