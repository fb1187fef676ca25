"""Sparse multivariate polynomials and their text format.

Text format: terms ``coeff * x1^e1 * x2^e2 ...`` joined by ``+`` or ``-``.
Factors may also be separated by whitespace, the coefficient may be omitted,
and ``^1`` may be dropped, so ``x1^2 + x1`` and ``2*x1^3 - x1`` both parse.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np


class PolynomialParseError(ValueError):
    pass


Exponents = tuple[int, ...]


@dataclass(frozen=True)
class Polynomial:
    n_vars: int
    terms: tuple[tuple[float, Exponents], ...]

    def __post_init__(self):
        merged: dict[Exponents, float] = {}
        for coeff, exps in self.terms:
            exps = tuple(int(e) for e in exps)
            if len(exps) != self.n_vars:
                raise ValueError(f"exponent vector {exps} does not have {self.n_vars} entries")
            if any(e < 0 for e in exps):
                raise ValueError(f"negative exponent in {exps}")
            merged[exps] = merged.get(exps, 0.0) + float(coeff)
        terms = tuple((c, e) for e, c in sorted(merged.items()) if c != 0.0)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_dict(cls, n_vars: int, coeffs: Mapping[Exponents, float]) -> "Polynomial":
        return cls(n_vars, tuple((c, e) for e, c in coeffs.items()))

    @classmethod
    def constant(cls, n_vars: int, value: float) -> "Polynomial":
        return cls(n_vars, ((value, (0,) * n_vars),))

    @classmethod
    def variable(cls, n_vars: int, index: int) -> "Polynomial":
        e = [0] * n_vars
        e[index] = 1
        return cls(n_vars, ((1.0, tuple(e)),))

    def as_dict(self) -> dict[Exponents, float]:
        return {e: c for c, e in self.terms}

    @property
    def degree(self) -> int:
        return max((sum(e) for _, e in self.terms), default=0)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "Polynomial") -> "Polynomial":
        return Polynomial(self.n_vars, self.terms + other.terms)

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            return Polynomial(self.n_vars, tuple((c * other, e) for c, e in self.terms))
        out: dict[Exponents, float] = {}
        for c1, e1 in self.terms:
            for c2, e2 in other.terms:
                e = tuple(a + b for a, b in zip(e1, e2))
                out[e] = out.get(e, 0.0) + c1 * c2
        return Polynomial.from_dict(self.n_vars, out)

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Polynomial":
        result = Polynomial.constant(self.n_vars, 1.0)
        for _ in range(k):
            result = result * self
        return result

    def __call__(self, X) -> np.ndarray:
        """Direct term summation; ``X`` is one point or a batch of rows."""
        X = np.asarray(X, dtype=np.float64)
        single = X.ndim == 1
        X = np.atleast_2d(X)
        out = np.zeros(X.shape[0])
        for c, e in self.terms:
            out += c * np.prod(X ** np.array(e), axis=1)
        return out[0] if single else out

    def compose_affine(self, scale: Iterable[float], shift: Iterable[float]) -> "Polynomial":
        """Polynomial in ``z`` equal to ``self(scale * z + shift)`` coordinate-wise."""
        scale, shift = list(scale), list(shift)
        subs = [
            Polynomial(self.n_vars, ((a, _unit(self.n_vars, k)), (b, (0,) * self.n_vars)))
            for k, (a, b) in enumerate(zip(scale, shift))
        ]
        result = Polynomial(self.n_vars, ())
        for c, e in self.terms:
            term = Polynomial.constant(self.n_vars, c)
            for k, power in enumerate(e):
                if power:
                    term = term * subs[k] ** power
            result = result + term
        return result

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        out = ""
        for i, (c, e) in enumerate(self.terms):
            factors = [f"x{k + 1}" + (f"^{p}" if p > 1 else "") for k, p in enumerate(e) if p]
            body = " * ".join([repr(abs(c))] + factors)
            if i == 0:
                out = ("-" if c < 0 else "") + body
            else:
                out += (" - " if c < 0 else " + ") + body
        return out


def _unit(n: int, k: int) -> Exponents:
    e = [0] * n
    e[k] = 1
    return tuple(e)


_NUMBER = r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"
_FACTOR = re.compile(rf"\s*(?:(?P<num>{_NUMBER})|x(?P<var>\d+)(?:\s*\^\s*(?P<exp>\d+))?)\s*")


def _split_terms(text: str) -> list[tuple[int, str]]:
    # split on +/- that are not part of an exponent like 1e-3
    terms, sign, start = [], 1, 0
    i = 0
    text = text.strip()
    if text.startswith(("+", "-")):
        sign = -1 if text[0] == "-" else 1
        i = start = 1
    while i < len(text):
        ch = text[i]
        if ch in "+-" and not (i > 0 and text[i - 1] in "eE" and i > 1 and text[i - 2].isdigit()):
            terms.append((sign, text[start:i], start))
            sign = -1 if ch == "-" else 1
            start = i + 1
        i += 1
    terms.append((sign, text[start:], start))
    return terms


def parse(text: str, n_vars: int | None = None) -> Polynomial:
    """Parse the text format; ``n_vars`` defaults to the largest variable index."""
    raw = []
    max_var = 0
    for sign, body, pos in _split_terms(text):
        if not body.strip():
            raise PolynomialParseError(f"empty term at column {pos + 1} in {text!r}")
        coeff = float(sign)
        powers: dict[int, int] = {}
        for tok in (t for t in body.split("*")):
            j = 0
            if not tok.strip():
                raise PolynomialParseError(f"empty factor in term {body.strip()!r}")
            while j < len(tok):
                m = _FACTOR.match(tok, j)
                if not m or m.end() == j:
                    raise PolynomialParseError(
                        f"cannot parse {tok[j:].strip()!r} in term {body.strip()!r}"
                    )
                if m.group("num") is not None:
                    coeff *= float(m.group("num"))
                else:
                    k = int(m.group("var"))
                    if k < 1:
                        raise PolynomialParseError("variables are numbered from x1")
                    powers[k] = powers.get(k, 0) + int(m.group("exp") or 1)
                    max_var = max(max_var, k)
                j = m.end()
        raw.append((coeff, powers))
    if n_vars is None:
        n_vars = max(max_var, 1)
    elif max_var > n_vars:
        raise PolynomialParseError(f"x{max_var} used but only {n_vars} variables declared")
    terms = tuple(
        (c, tuple(p.get(k + 1, 0) for k in range(n_vars))) for c, p in raw
    )
    return Polynomial(n_vars, terms)


def poly_oracle(p: Polynomial):
    """Independent evaluator for ``p``: plain term summation, no network."""
    return p.__call__
