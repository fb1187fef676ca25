import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepnarrow.activations import ActivationSpec, DerivativePoint, UnsupportedActivationError
from deepnarrow.compilers.lowering import layer_expand, lower_identities, lower_square_rho, lower_square_sigma
from deepnarrow.compilers.register import compile_register
from deepnarrow.compilers.relu_lp import (
    CutoffSpec,
    bump_reference,
    clip_reference,
    compile_relu_lp,
    shift_bound,
)
from deepnarrow.compilers.square import compile_square, input_remap, nested_reference, remap_polynomial
from deepnarrow.gadgets import PreconditionError
from deepnarrow.net_ir import IDENTITY, AffineMap, Box, Layer, Network, evaluate
from deepnarrow.polynomial import Polynomial, parse
from deepnarrow.shallow import ShallowNet, fit_shallow, random_shallow
from deepnarrow.verify import polynomial_oracle, sup_error

# -- register construction


def test_single_relu_neuron():
    relu = ShallowNet([[1.0]], [0.0], [1.0], 0.0, "relu")
    net = compile_register([relu])
    x = np.random.default_rng(0).normal(0, 3, (1000, 1))
    assert np.array_equal(evaluate(net, x)[:, 0], np.maximum(x[:, 0], 0))
    assert net.depth == 1 and net.width == 3


def _two_tanh_nets(seed=0):
    rng = np.random.default_rng(seed)
    return [random_shallow(2, 4, "tanh", rng), random_shallow(2, 3, "tanh", rng)]


def test_register_ideal_and_lowered():
    nets = _two_tanh_nets()
    oracle = lambda X: np.column_stack([n(X) for n in nets])  # noqa: E731
    ideal = compile_register(nets)
    X = np.random.default_rng(1).uniform(-1, 1, (1000, 2))
    assert np.max(np.abs(evaluate(ideal, X) - oracle(X))) <= 1e-12
    assert ideal.depth == 7 and ideal.width == 5
    K = Box.cube(-1, 1, 2)
    coarse = sup_error(compile_register(nets, h=1e-2), oracle, K)
    fine = sup_error(compile_register(nets, h=1e-4), oracle, K)
    assert fine < coarse
    assert all(IDENTITY not in layer.activations for layer in compile_register(nets, h=1e-3).layers)


@settings(max_examples=25, deadline=None)
@given(
    st.integers(1, 3),
    st.lists(st.integers(1, 4), min_size=1, max_size=3),
    st.sampled_from(["tanh", "sigmoid", "relu", "sine"]),
    st.integers(0, 2**16),
)
def test_register_ideal_is_exact(n, widths, act, seed):
    rng = np.random.default_rng(seed)
    nets = [random_shallow(n, w, act, rng) for w in widths]
    net = compile_register(nets)
    assert net.width == n + len(widths) + 1 and net.depth == sum(widths)
    X = rng.uniform(-2, 2, (50, n))
    ref = np.column_stack([s(X) for s in nets])
    assert np.max(np.abs(evaluate(net, X) - ref)) <= 1e-10 * (1 + np.abs(ref).max())


def test_register_preconditions():
    a = random_shallow(2, 2, "tanh", np.random.default_rng(0))
    b = random_shallow(2, 2, "sigmoid", np.random.default_rng(0))
    with pytest.raises(PreconditionError):
        compile_register([a, b])
    with pytest.raises(PreconditionError):
        compile_register([])


def test_lowering_needs_a_slope():
    flat = ActivationSpec("flat", np.tanh)
    net = compile_register(_two_tanh_nets())
    with pytest.raises(UnsupportedActivationError):
        lower_identities(net, flat, 1e-3)


# -- square construction


def test_square_single_target():
    p = parse("x1^2 + x1")
    K = Box((1.2,), (1.8,))
    net = compile_square([p], K, 6, s=1e-8)
    assert net.width == 3
    assert sup_error(net, polynomial_oracle([p]), K) <= 1e-6


def test_square_out_registers_exact():
    targets = [parse("x1 + x2^2"), parse("3*x1^2*x2 - x2 + 0.5")]
    K = Box((-1.0, 0.0), (2.0, 1.0))
    for stages in (0, 2):
        net = compile_square(targets, K, stages)
        assert net.width == 5
        X = K.grid(21)
        ref = targets[1](X)
        assert np.max(np.abs(evaluate(net, X)[:, 1] - ref) / (1 + np.abs(ref))) <= 1e-12


def test_square_remap_box():
    K = Box.cube(-5, 5, 2)
    scale, shift = input_remap(K, 0.25)
    corners = K.grid(2) * scale + shift
    assert np.all(corners >= 1.25 - 1e-15) and np.all(corners <= 1.75 + 1e-15)
    p = parse("x1*x2 + x1")
    q = remap_polynomial(p, K, 0.25)
    X = K.grid(5)
    assert np.allclose(q(X * scale + shift), p(X), atol=1e-12)


def test_square_single_term_has_no_reciprocals():
    # this box is already [1 + margin, 2 - margin], so the remap keeps one term
    K = Box((1.25,), (1.75,))
    p = parse("3*x1^3")
    net = compile_square([p], K, 6)
    assert net.depth == 2
    assert sup_error(net, polynomial_oracle([p]), K) <= 1e-12


def test_square_errors():
    K = Box((1.2,), (1.8,))
    with pytest.raises(PreconditionError):
        compile_square([Polynomial(1, ())], K)
    with pytest.raises(PreconditionError):
        compile_square([], K)
    with pytest.raises(PreconditionError):
        compile_square([parse("x2")], K)


def test_nested_form_algebra():
    K = Box((-1.0, 0.5), (1.0, 2.0))
    p = parse("x1^2*x2 - 2*x1 + 0.5*x2^3 + 4")
    q = remap_polynomial(p, K)
    scale, shift = input_remap(K)
    X = K.grid(11)
    Z = X * scale + shift
    assert np.allclose(nested_reference(q, Z), p(X), rtol=1e-12, atol=1e-12)


def test_square_matches_nested_reference_with_gadget_reciprocal():
    K = Box((1.2,), (1.8,))
    p = parse("x1^2 + x1 + 2")
    q = remap_polynomial(p, K)
    scale, shift = input_remap(K)
    X = K.grid(31)
    from deepnarrow.gadgets import reciprocal_gadget

    # s large enough that eps / s rounding stays far below the tolerance
    r = reciprocal_gadget(4, s=1e-3)
    ref = nested_reference(q, X * scale + shift, lambda z: r(z.reshape(-1, 1)).reshape(z.shape))
    assert np.max(np.abs(evaluate(compile_square([p], K, 4, s=1e-3), X)[:, 0] - ref)) <= 1e-9


def test_square_stage_ordering():
    K = Box((1.2,), (1.8,))
    targets = [parse("x1^2 + x1")]
    errs = [sup_error(compile_square(targets, K, k, s=1e-8), polynomial_oracle(targets), K) for k in (2, 4, 6)]
    assert errs[1] <= errs[0] * 1.1 and errs[2] <= errs[1] * 1.1


# -- layer expansion and square lowerings


def _square_layer_net(k=4, seed=0):
    rng = np.random.default_rng(seed)
    layer = Layer(AffineMap(rng.normal(size=(k, 2)), rng.normal(size=k)), ["square"] * k)
    return Network(2, [layer], AffineMap(rng.normal(size=(1, k)), [0.0]))


def test_layer_expand_square_layer():
    net = _square_layer_net()
    ex = layer_expand(net)
    assert ex.depth == 4 and ex.width == 4
    assert all(layer.activations.count("square") == 1 for layer in ex.layers)
    X = np.random.default_rng(3).uniform(-2, 2, (1000, 2))
    assert np.max(np.abs(evaluate(ex, X) - evaluate(net, X))) <= 1e-12


def test_layer_expand_identity_layer():
    layer = Layer(AffineMap(np.eye(3)[:, :2], np.zeros(3)), [IDENTITY] * 3)
    net = Network(2, [layer], AffineMap(np.ones((1, 3)), [0.0]))
    ex = layer_expand(net)
    assert all(set(layer.activations) == {IDENTITY} for layer in ex.layers)
    X = np.random.default_rng(0).normal(size=(10, 2))
    assert np.array_equal(evaluate(ex, X), evaluate(net, X))


def test_layer_expand_square_model():
    K = Box.cube(1.0, 2.0, 2)
    net = compile_square([parse("x1*x2 + x1")], K, 2)
    ex = layer_expand(net)
    assert ex.width == net.width == 4 and ex.depth == 4 * net.depth
    with pytest.raises(PreconditionError):
        layer_expand(compile_register(_two_tanh_nets()))


def test_sigma_lowering():
    X = np.random.default_rng(4).uniform(-1, 1, (500, 2))
    # a lone square neuron: no identities to lower, sigma_h is exact on quadratics
    lone = _square_layer_net(k=1)
    low = lower_square_sigma(lone, "square", 0.1)
    assert low.width == 2
    ref = evaluate(lone, X)
    assert np.max(np.abs(evaluate(low, X) - ref)) <= 1e-12 * (1 + np.abs(ref).max())
    net = layer_expand(_square_layer_net())
    ref = evaluate(net, X)
    assert lower_square_sigma(net, "square", 0.1).width == net.width + 1
    cubic = [np.max(np.abs(evaluate(lower_square_sigma(net, "cubic_square", h), X) - ref)) for h in (1e-2, 1e-3)]
    # sigma_h is exact on cubics; what remains is the cubic identity error, second order in h
    assert cubic[1] <= cubic[0] / 50
    quartic = [np.max(np.abs(evaluate(lower_square_sigma(net, "quartic", h), X) - ref)) for h in (1e-2, 1e-3, 1e-4)]
    assert quartic[0] > quartic[1] > quartic[2]
    with pytest.raises(PreconditionError):
        lower_square_sigma(_square_layer_net(), "cubic_square", 0.1)


def test_rho_lowering():
    K = Box((1.2,), (1.8,))
    targets = [parse("x1^2 + x1")]
    base = compile_square(targets, K, 4, h=1e-6, s=1e-3)
    assert all(set(layer.activations) == {"square"} for layer in base.layers)
    same = lower_square_rho(base, "square", 0.5)
    assert same.width == base.width
    X = K.grid(51)
    ref = evaluate(base, X)
    assert np.max(np.abs(evaluate(same, X) - ref)) <= 1e-12 * np.abs(ref).max()
    errs = [np.max(np.abs(evaluate(lower_square_rho(base, "cubic_square", h), X) - ref)) for h in (1e-11, 1e-12, 1e-13)]
    assert errs[0] > errs[1] > errs[2]
    with pytest.raises(PreconditionError, match="sigma"):
        lower_square_rho(base, "sigmoid", 1e-3)
    with pytest.raises(PreconditionError):
        lower_square_rho(compile_square(targets, K, 2), "cubic_square", 1e-3)


# -- ReLU cut-off


@pytest.fixture(scope="module")
def relu_lp():
    J = Box((-1.0,), (1.0,))
    K = Box((-1.1,), (1.1,))
    f = lambda X: np.maximum(0.0, 1.0 - np.abs(X[:, 0]))  # noqa: E731
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sh = fit_shallow(f, K, 30, "relu", samples=1000)
    N = shift_bound(sh, K)
    g = compile_register([sh], N=N)
    cut = CutoffSpec(J, K, 2.0, -1.5, N)
    return g, cut, compile_relu_lp(g, cut)


def test_relu_lp_structure(relu_lp):
    g, cut, G = relu_lp
    assert G.width == g.width == 3
    assert all(set(layer.activations) == {"relu"} for layer in G.layers)


def test_relu_lp_support_and_plateau(relu_lp):
    g, cut, G = relu_lp
    rng = np.random.default_rng(0)
    out = np.concatenate([rng.uniform(-1e4, -1.1, 500), rng.uniform(1.1, 1e4, 500), [-1e9, 1e9]])[:, None]
    assert np.all(evaluate(G, out) == 0.0)
    X = np.linspace(-1, 1, 201)[:, None]
    gv = evaluate(g, X)
    assert np.allclose(evaluate(G, X), np.clip(gv, cut.c, cut.C), atol=1e-12)


@given(st.floats(-5, 5))
@settings(max_examples=60, deadline=None)
def test_relu_lp_is_clip(relu_lp, x):
    g, cut, G = relu_lp
    X = np.array([[x]])
    ref = clip_reference(evaluate(g, X)[:, 0], bump_reference(X, cut), cut.C, cut.c)
    assert evaluate(G, X)[0, 0] == pytest.approx(ref[0], abs=1e-11)


def test_cutoff_validation():
    J, K = Box((-1.0,), (1.0,)), Box((-1.1,), (1.1,))
    with pytest.raises(PreconditionError):
        CutoffSpec(J, K, 1.0, 0.0, 5.0)
    with pytest.raises(PreconditionError):
        CutoffSpec(J, K, 0.0, -1.0, 5.0)
    with pytest.raises(PreconditionError):
        CutoffSpec(J, J, 1.0, -1.0, 5.0)
    with pytest.raises(PreconditionError):
        CutoffSpec(J, K, 1.0, -1.0, 1.0)
    spec = CutoffSpec.around(J, 0.1, (-0.2, 1.3), 5.0)
    assert spec.K.lower == (-1.1,) and spec.C == 2.3 and spec.c == -1.2


def test_relu_lp_two_inputs():
    J, K = Box.cube(-1, 1, 2), Box.cube(-1.5, 1.5, 2)
    sh = ShallowNet([[1.0, 0.5], [-1.0, 1.0]], [0.2, 0.0], [1.0, -2.0], 0.3, "relu")
    N = shift_bound(sh, K)
    g = compile_register([sh], N=N)
    cut = CutoffSpec(J, K, 5.0, -5.0, N)
    G = compile_relu_lp(g, cut)
    assert G.width == 4
    X = np.random.default_rng(1).uniform(-3, 3, (2000, 2))
    ref = clip_reference(evaluate(g, X)[:, 0], bump_reference(X, cut), cut.C, cut.c)
    assert np.max(np.abs(evaluate(G, X)[:, 0] - ref)) <= 1e-11
    outside = ~K.contains(X)
    assert np.all(evaluate(G, X[outside]) == 0.0)
    with pytest.raises(PreconditionError):
        compile_relu_lp(compile_register([sh], N=N + 1), cut)
