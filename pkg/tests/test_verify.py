import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from deepnarrow.activations import builtin_registry
from deepnarrow.compilers.register import compile_register
from deepnarrow.gadgets import identity_gadget, reciprocal_gadget
from deepnarrow.net_ir import AffineMap, Box, Network
from deepnarrow.polynomial import parse
from deepnarrow.shallow import random_shallow
from deepnarrow.verify import (
    VerificationReport,
    is_non_increasing,
    lp_error,
    poly_oracle,
    quasi_random,
    report,
    sup_error,
    sweep,
)


def zero_net(n=1, m=1):
    return Network(n, [], AffineMap(np.zeros((m, n)), np.zeros(m)))


def test_sup_error_basics():
    K = Box((0.0,), (1.0,))
    assert sup_error(zero_net(), lambda X: np.ones(len(X)), K) == 1.0
    nets = [random_shallow(2, 3, "tanh", np.random.default_rng(0))]
    net = compile_register(nets)
    assert sup_error(net, nets[0], Box.cube(-1, 1, 2)) <= 1e-10
    with pytest.raises(ValueError):
        sup_error(net, nets[0], Box.cube(-1, 1, 2), 1)


def test_sup_error_nan_is_inf():
    net = Network(1, [], AffineMap([[1.0]], [0.0]))
    assert sup_error(net, lambda X: np.where(X[:, 0] > 0.5, np.nan, 0.0), Box((0.0,), (1.0,))) == math.inf


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 12), st.floats(-3, 3))
def test_nested_grids_are_monotone(k, c):
    K = Box((0.0,), (2.0,))
    f = lambda X: np.sin(7 * X[:, 0] + c)  # noqa: E731
    coarse = sup_error(zero_net(), f, K, k)
    fine = sup_error(zero_net(), f, K, 2 * k - 1)  # contains every coarse point
    assert fine >= coarse


def test_lp_error():
    K = Box.cube(-1, 1, 2)
    f = lambda X: X[:, 0] ** 2  # noqa: E731
    net = zero_net(2)
    assert lp_error(net, lambda X: np.zeros(len(X)), K, 1, 2000) == 0.0
    # integral of x^2 over [-1,1]^2 is 4/3
    assert lp_error(net, f, K, 1, 100_000) == pytest.approx(4 / 3, rel=1e-3)
    l2 = lp_error(net, f, K, 2, 100_000)
    assert l2 == pytest.approx(math.sqrt(4 / 5), rel=1e-3) and math.isfinite(l2)
    assert lp_error(net, f, K, 1, 4096, seed=3) == lp_error(net, f, K, 1, 4096, seed=3)
    with pytest.raises(ValueError):
        lp_error(net, f, K, 0.5, 2000)
    with pytest.raises(ValueError):
        lp_error(net, f, K, 1, 10)


def test_quasi_random_in_box():
    K = Box((1.0, -2.0), (3.0, 0.0))
    X = quasi_random(K, 1000, seed=1)
    assert np.all(K.contains(X))


def test_sweeps():
    tanh = builtin_registry()["tanh"]
    L = Box((-1.0,), (1.0,))
    ident = lambda X: X[:, 0]  # noqa: E731
    table = sweep(lambda h: identity_gadget(tanh, h).to_network(), ident, L, [1e-2, 1e-3, 1e-4])
    assert [p for p, _ in table] == [1e-4, 1e-3, 1e-2]
    assert is_non_increasing([e for _, e in reversed(table)], slack=0.1)
    recip = sweep(lambda n: reciprocal_gadget(int(n), s=1e-8).to_network(), lambda X: 1 / X[:, 0],
                  Box((0.5,), (1.5,)), [1, 2, 3])
    assert is_non_increasing([e for _, e in recip], slack=0.1)
    const = sweep(lambda v: zero_net(), ident, L, [1, 2, 3])
    assert len({e for _, e in const}) == 1
    with pytest.raises(ValueError):
        sweep(lambda v: zero_net(), ident, L, [1, 2])


def test_non_increasing():
    assert is_non_increasing([3, 2, 2, 1])
    assert not is_non_increasing([1, 2])
    assert is_non_increasing([1.0, 1.05], slack=0.1)
    assert not is_non_increasing([math.inf, 1.0])


def test_report_serialisation():
    p = parse("x1^2 + x1")
    net = zero_net()
    rep = report(net, poly_oracle(p), Box((0.0,), (1.0,)), p=1.0, samples=2000)
    rep.sweep_table = [(3.0, 0.1), (1.0, 0.3)]
    rep.__post_init__()
    doc = json.loads(rep.to_json())
    assert doc["sup_error"] == 2.0 and doc["width"] == 0 and doc["lp_error"][0] == 1.0
    assert rep.to_csv().splitlines() == ["param,error", "1.0,0.3", "3.0,0.1"]
    with pytest.raises(ValueError):
        VerificationReport(-1.0, 1, 0, 0)


def test_poly_oracle():
    assert poly_oracle(parse("x1^2 + x1"))(np.array([1.5])) == 3.75
