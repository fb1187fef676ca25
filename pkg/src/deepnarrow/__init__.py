"""Compile continuous targets into deep, narrow feed-forward networks."""
from .activations import ActivationSpec, builtin_registry, probe_derivatives
from .compilers.lowering import layer_expand, lower_identities, lower_square_rho, lower_square_sigma
from .compilers.register import compile_register
from .compilers.relu_lp import CutoffSpec, compile_relu_lp
from .compilers.square import compile_square, plan_monomial_chain
from .estimators import RegisterRegressor, SquareModelRegressor
from .net_ir import IDENTITY, AffineMap, Box, Layer, Network, audit, evaluate, load, save
from .polynomial import Polynomial, parse
from .shallow import ShallowNet, fit_shallow
from .verify import VerificationReport, lp_error, sup_error, sweep

__version__ = "0.1.0"

__all__ = [
    "ActivationSpec", "builtin_registry", "probe_derivatives",
    "layer_expand", "lower_identities", "lower_square_rho", "lower_square_sigma",
    "compile_register", "CutoffSpec", "compile_relu_lp", "compile_square", "plan_monomial_chain",
    "RegisterRegressor", "SquareModelRegressor",
    "IDENTITY", "AffineMap", "Box", "Layer", "Network", "audit", "evaluate", "load", "save",
    "Polynomial", "parse", "ShallowNet", "fit_shallow",
    "VerificationReport", "lp_error", "sup_error", "sweep",
]
