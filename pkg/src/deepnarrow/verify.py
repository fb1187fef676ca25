"""Error measurement: grid sup norms, quasi-Monte Carlo L^p norms, parameter sweeps."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.stats import qmc

from .net_ir import Box, Network, audit, evaluate
from .polynomial import Polynomial, poly_oracle

Oracle = Callable[[np.ndarray], np.ndarray]


def default_grid(dim: int) -> int:
    return 101 if dim <= 2 else 21


def _outputs(f, X) -> np.ndarray:
    if isinstance(f, Network):
        return evaluate(f, X)
    y = np.asarray(f(X), dtype=np.float64)
    return y.reshape(len(X), -1)


def sup_error(net, oracle: Oracle, K: Box, grid_per_dim: int | None = None) -> float:
    """Max over a tensor grid on ``K`` of the max-coordinate ``|net - oracle|``.

    NaN anywhere on the grid makes the result ``inf``.
    """
    grid_per_dim = default_grid(K.dim) if grid_per_dim is None else grid_per_dim
    if grid_per_dim < 2:
        raise ValueError("grid_per_dim must be at least 2")
    X = K.grid(grid_per_dim)
    diff = np.abs(_outputs(net, X) - _outputs(oracle, X))
    if not np.all(np.isfinite(diff)):
        return math.inf
    return float(diff.max())


def quasi_random(domain: Box, samples: int, seed: int = 0) -> np.ndarray:
    """Scrambled Halton points in ``domain``."""
    sampler = qmc.Halton(d=domain.dim, scramble=True, seed=seed)
    return qmc.scale(sampler.random(samples), domain.lower, domain.upper)


def lp_error(net, oracle: Oracle, domain: Box, p: float = 1.0, samples: int = 100_000, seed: int = 0) -> float:
    """``(vol(domain) * mean |net - oracle|^p)^(1/p)`` on Halton points; max over outputs."""
    if not 1 <= p < math.inf:
        raise ValueError("p must lie in [1, inf)")
    if samples < 1000:
        raise ValueError("need at least 1000 samples")
    X = quasi_random(domain, samples, seed)
    diff = np.abs(_outputs(net, X) - _outputs(oracle, X)) ** p
    # fixed-order pairwise summation (numpy's default for contiguous float arrays)
    mean = np.sum(diff, axis=0) / samples
    return float(np.max((domain.volume * mean) ** (1.0 / p)))


def sweep(builder: Callable[[float], Network], oracle: Oracle, K: Box, params: Sequence[float],
          grid_per_dim: int | None = None) -> list[tuple[float, float]]:
    """Sup error of ``builder(v)`` for each ``v``, sorted by parameter value."""
    if len(params) < 3:
        raise ValueError("a sweep needs at least 3 parameter values")
    return sorted((float(v), sup_error(builder(v), oracle, K, grid_per_dim)) for v in params)


def is_non_increasing(errors: Iterable[float], slack: float = 0.0) -> bool:
    """``e[i+1] <= e[i] * (1 + slack)`` for consecutive entries (finite values only)."""
    e = list(errors)
    return all(math.isfinite(x) for x in e) and all(b <= a * (1 + slack) for a, b in zip(e, e[1:]))


@dataclass
class VerificationReport:
    sup_error: float
    grid_points: int
    width: int
    depth: int
    lp_error: tuple[float, float] | None = None
    sweep_table: list[tuple[float, float]] = field(default_factory=list)
    sweep_param: str | None = None

    def __post_init__(self):
        errors = [self.sup_error] + [e for _, e in self.sweep_table]
        if self.lp_error is not None:
            errors.append(self.lp_error[1])
        if any(e < 0 for e in errors):
            raise ValueError("errors must be non-negative")
        self.sweep_table = sorted(self.sweep_table)

    def to_json(self) -> str:
        doc = asdict(self)
        doc["sweep_table"] = [list(r) for r in self.sweep_table]
        return json.dumps(doc, indent=1, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["param", "error"])
        for v, e in self.sweep_table:
            w.writerow([repr(v), repr(e)])
        return buf.getvalue()


def report(net: Network, oracle: Oracle, K: Box, grid_per_dim: int | None = None,
           p: float | None = None, samples: int = 100_000, seed: int = 0,
           lp_domain: Box | None = None) -> VerificationReport:
    grid_per_dim = default_grid(K.dim) if grid_per_dim is None else grid_per_dim
    info = audit(net)
    lp = None
    if p is not None:
        lp = (p, lp_error(net, oracle, K if lp_domain is None else lp_domain, p, samples, seed))
    return VerificationReport(
        sup_error(net, oracle, K, grid_per_dim), grid_per_dim ** K.dim, info["width"], info["depth"], lp
    )


def polynomial_oracle(targets: Sequence[Polynomial]) -> Oracle:
    """Stack several polynomial oracles into one ``R^n -> R^m`` map."""
    fs = [poly_oracle(p) for p in targets]
    return lambda X: np.column_stack([f(X) for f in fs])


__all__ = [
    "sup_error",
    "lp_error",
    "sweep",
    "is_non_increasing",
    "quasi_random",
    "VerificationReport",
    "report",
    "poly_oracle",
    "polynomial_oracle",
    "default_grid",
]
