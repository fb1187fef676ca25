"""Network intermediate representation.

A :class:`Network` is a stack of affine layers, each neuron carrying an
activation tag, followed by an affine readout with identity activation.
Every compiler pass in this package consumes and produces networks of
this form.
"""
from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Mapping, Sequence

import numpy as np

IDENTITY = "id"


class StructuralError(ValueError):
    """Raised when dimensions of a network or its inputs do not chain."""


class NetworkFormatError(ValueError):
    """Raised when a serialized network document is malformed."""

    def __init__(self, message: str, location: str = "$"):
        super().__init__(f"{location}: {message}")
        self.location = location


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != ndim:
        raise StructuralError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise StructuralError(f"{name} has non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``x -> weights @ x + bias``."""

    weights: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights, 2, "weights")
        b = _frozen(self.bias, 1, "bias")
        if w.shape[0] != b.shape[0]:
            raise StructuralError(
                f"weights have {w.shape[0]} rows but bias has length {b.shape[0]}"
            )
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "bias", b)

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]

    def __call__(self, x: np.ndarray) -> np.ndarray:
        # x is (batch, in_dim)
        return x @ self.weights.T + self.bias

    @classmethod
    def identity(cls, dim: int) -> "AffineMap":
        return cls(np.eye(dim), np.zeros(dim))

    def compose(self, inner: "AffineMap") -> "AffineMap":
        """Return ``self ∘ inner``."""
        return AffineMap(self.weights @ inner.weights, self.weights @ inner.bias + self.bias)


@dataclass(frozen=True, eq=False)
class Layer:
    affine: AffineMap
    activations: tuple[str, ...]

    def __post_init__(self):
        acts = tuple(self.activations)
        if len(acts) != self.affine.out_dim:
            raise StructuralError(
                f"layer has {self.affine.out_dim} neurons but {len(acts)} activation tags"
            )
        object.__setattr__(self, "activations", acts)

    @property
    def width(self) -> int:
        return self.affine.out_dim


@dataclass(frozen=True, eq=False)
class Network:
    input_dim: int
    layers: tuple[Layer, ...]
    output: AffineMap

    def __post_init__(self):
        layers = tuple(self.layers)
        object.__setattr__(self, "layers", layers)
        dim = self.input_dim
        for i, layer in enumerate(layers):
            if layer.affine.in_dim != dim:
                raise StructuralError(
                    f"layer {i} expects input dim {layer.affine.in_dim}, previous dim is {dim}"
                )
            dim = layer.width
        if self.output.in_dim != dim:
            raise StructuralError(
                f"readout expects input dim {self.output.in_dim}, last hidden dim is {dim}"
            )

    @property
    def output_dim(self) -> int:
        return self.output.out_dim

    @property
    def width(self) -> int:
        return max((layer.width for layer in self.layers), default=0)

    @property
    def depth(self) -> int:
        return len(self.layers)

    def __call__(self, x, registry: Mapping | None = None) -> np.ndarray:
        return evaluate(self, x, registry)


@dataclass(frozen=True)
class Box:
    """Axis-aligned compact domain ``prod [lower_i, upper_i]``."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.lower))
        hi = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lo) != len(hi):
            raise StructuralError("box bounds have different lengths")
        if not all(np.isfinite(lo + hi)):
            raise StructuralError("box bounds must be finite")
        if any(l >= u for l, u in zip(lo, hi)):
            raise StructuralError(f"box requires lower < upper, got {lo} and {hi}")
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", hi)

    @classmethod
    def cube(cls, low: float, high: float, dim: int) -> "Box":
        return cls((low,) * dim, (high,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    @property
    def volume(self) -> float:
        return float(np.prod(np.subtract(self.upper, self.lower)))

    def contains(self, X) -> np.ndarray:
        X = np.atleast_2d(X)
        return np.all((X >= self.lower) & (X <= self.upper), axis=1)

    def grid(self, per_dim: int) -> np.ndarray:
        axes = [np.linspace(l, u, per_dim) for l, u in zip(self.lower, self.upper)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(count, self.dim))


def _registry(registry):
    if registry is None:
        from .activations import builtin_registry

        return builtin_registry()
    return registry


def _apply_activations(z: np.ndarray, tags: Sequence[str], registry) -> np.ndarray:
    out = np.empty_like(z)
    for tag, cols in _group_tags(tags).items():
        if tag == IDENTITY:
            out[:, cols] = z[:, cols]
            continue
        try:
            spec = registry[tag]
        except KeyError:
            from .activations import RegistryError

            raise RegistryError(f"unknown activation {tag!r}") from None
        out[:, cols] = spec.fn(z[:, cols])
    return out


def _group_tags(tags: Sequence[str]) -> dict[str, list[int]]:
    groups: dict[str, list[int]] = {}
    for i, tag in enumerate(tags):
        groups.setdefault(tag, []).append(i)
    return groups


def evaluate(net: Network, x, registry: Mapping | None = None) -> np.ndarray:
    """Evaluate ``net`` on one input vector or on a batch of row vectors.

    The result has the same leading shape as ``x``: a 1-D input gives a
    1-D output, a ``(batch, n)`` input gives ``(batch, m)``.
    """
    registry = _registry(registry)
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    X = np.atleast_2d(arr)
    if X.ndim != 2 or X.shape[1] != net.input_dim:
        raise StructuralError(
            f"network expects inputs of dimension {net.input_dim}, got shape {arr.shape}"
        )
    for layer in net.layers:
        X = _apply_activations(layer.affine(X), layer.activations, registry)
    Y = net.output(X)
    return Y[0] if single else Y


def audit(net: Network) -> dict[str, Any]:
    """Width, depth and per-layer activation census of ``net``."""
    census = [dict(Counter(layer.activations)) for layer in net.layers]
    totals: Counter = Counter()
    for c in census:
        totals.update(c)
    return {
        "input_dim": net.input_dim,
        "output_dim": net.output_dim,
        "width": net.width,
        "depth": net.depth,
        "census": census,
        "totals": dict(totals),
    }


def to_dict(net: Network) -> dict:
    return {
        "input_dim": net.input_dim,
        "layers": [
            {
                "weights": layer.affine.weights.tolist(),
                "bias": layer.affine.bias.tolist(),
                "activations": list(layer.activations),
            }
            for layer in net.layers
        ],
        "readout": {"weights": net.output.weights.tolist(), "bias": net.output.bias.tolist()},
    }


def serialize(net: Network) -> bytes:
    # json emits floats via repr, which round-trips float64 exactly
    return json.dumps(to_dict(net), indent=1).encode("utf-8")


def _field(doc: Mapping, key: str, loc: str):
    if not isinstance(doc, Mapping):
        raise NetworkFormatError("expected an object", loc)
    if key not in doc:
        raise NetworkFormatError(f"missing field {key!r}", loc)
    return doc[key]


def _affine(doc, loc: str) -> AffineMap:
    w = _field(doc, "weights", loc)
    b = _field(doc, "bias", loc)
    try:
        w = np.array(w, dtype=np.float64)
        b = np.array(b, dtype=np.float64)
        if w.ndim == 1 and w.size == 0:
            w = w.reshape(len(b), 0)
        return AffineMap(w, b)
    except (ValueError, TypeError) as exc:
        raise NetworkFormatError(str(exc), loc) from None


def from_dict(doc: Mapping) -> Network:
    input_dim = _field(doc, "input_dim", "$")
    if not isinstance(input_dim, int) or isinstance(input_dim, bool) or input_dim < 0:
        raise NetworkFormatError("input_dim must be a non-negative integer", "$.input_dim")
    raw_layers = _field(doc, "layers", "$")
    if not isinstance(raw_layers, list):
        raise NetworkFormatError("layers must be an array", "$.layers")
    layers = []
    for i, raw in enumerate(raw_layers):
        loc = f"$.layers[{i}]"
        affine = _affine(raw, loc)
        acts = _field(raw, "activations", loc)
        if not isinstance(acts, list) or not all(isinstance(a, str) for a in acts):
            raise NetworkFormatError("activations must be an array of strings", loc + ".activations")
        try:
            layers.append(Layer(affine, tuple(acts)))
        except StructuralError as exc:
            raise NetworkFormatError(str(exc), loc) from None
    readout = _affine(_field(doc, "readout", "$"), "$.readout")
    try:
        return Network(input_dim, tuple(layers), readout)
    except StructuralError as exc:
        raise NetworkFormatError(str(exc), "$") from None


def deserialize(data: bytes | str) -> Network:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise NetworkFormatError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return from_dict(doc)


def save(net: Network, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(net))


def load(path) -> Network:
    with open(path, "rb") as fh:
        return deserialize(fh.read())


__all__ = [
    "IDENTITY",
    "AffineMap",
    "Layer",
    "Network",
    "Box",
    "StructuralError",
    "NetworkFormatError",
    "evaluate",
    "audit",
    "serialize",
    "deserialize",
    "to_dict",
    "from_dict",
    "save",
    "load",
]
