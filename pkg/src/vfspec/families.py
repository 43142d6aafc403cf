"""Seeded families of test functions and random expressions.

Everything here is driven by ``numpy.random.default_rng(seed)`` so a seed
fully determines the family.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from .calculus import ScalarField
from .expr import BinOp, Call, Const, Expr, Neg, Var, parse_scalar, variable_names
from .geometry import Domain


def _num(v: float) -> str:
    return f"({float(v)!r})"


def _frequencies(domain: Domain) -> list[float]:
    if domain.periods is not None:
        return [2 * math.pi / p for p in domain.periods]
    return [1.0] * domain.dim


def trig_polynomial(rng: np.random.Generator, domain: Domain, degree: int = 3,
                    terms: int = 3) -> ScalarField:
    """c0 + sum of a*cos(k.x) + b*sin(k.x) with integer wave vectors, max |k_i| <= degree.

    On a torus the wave numbers are scaled by 2*pi/period so the function is
    periodic, i.e. globally smooth on the compact manifold.
    """
    names = variable_names(domain.dim)
    scale = _frequencies(domain)
    waves = [k for k in itertools.product(range(-degree, degree + 1), repeat=domain.dim)
             if any(k)]
    pieces = [_num(rng.uniform(-1, 1))]
    for idx in rng.choice(len(waves), size=terms, replace=False):
        k = waves[idx]
        phase = "+".join(f"{_num(ki * s)}*{v}" for ki, s, v in zip(k, scale, names) if ki)
        a, b = rng.uniform(-1, 1, size=2)
        pieces.append(f"{_num(a)}*cos({phase})+{_num(b)}*sin({phase})")
    return ScalarField(parse_scalar("+".join(pieces), domain.dim), domain)


def polynomial(rng: np.random.Generator, domain: Domain, degree: int = 3) -> ScalarField:
    """All monomials of total degree <= ``degree`` with coefficients in [-1, 1]."""
    names = variable_names(domain.dim)
    pieces = []
    for powers in itertools.product(range(degree + 1), repeat=domain.dim):
        if sum(powers) > degree:
            continue
        mono = "*".join(f"{v}^{p}" for v, p in zip(names, powers) if p) or "1"
        pieces.append(f"{_num(rng.uniform(-1, 1))}*{mono}")
    return ScalarField(parse_scalar("+".join(pieces), domain.dim), domain)


def trig_family(seed: int, count: int, domain: Domain, degree: int = 3) -> list[ScalarField]:
    rng = np.random.default_rng(seed)
    return [trig_polynomial(rng, domain, degree) for _ in range(count)]


def bound_family(seed: int, count: int, domain: Domain) -> list[ScalarField]:
    """Alternating cubic polynomials and trigonometric combinations."""
    rng = np.random.default_rng(seed)
    return [polynomial(rng, domain) if i % 2 == 0 else trig_polynomial(rng, domain)
            for i in range(count)]


# ----------------------------------------------------- random expressions

def random_expr(rng: np.random.Generator, dim: int, depth: int) -> Expr:
    """Random tree of the given depth that is defined (and smooth) on all of R^n.

    Every potentially singular operation is guarded by construction:
    logarithms and square roots take 1 + u^2, divisions divide by 1 + u^2,
    exponentials take a bounded argument.
    """
    if depth <= 1:
        if rng.random() < 0.6:
            return Var(int(rng.integers(dim)))
        return Const(float(np.round(rng.uniform(0, 3), 3)))
    u = random_expr(rng, dim, depth - 1)
    v = random_expr(rng, dim, int(rng.integers(1, depth)))
    one_plus_sq = BinOp("+", Const(1.0), BinOp("^", u, Const(2.0)))
    choice = int(rng.integers(14))
    if choice == 0:
        return BinOp("+", u, v)
    if choice == 1:
        return BinOp("-", u, v)
    if choice == 2:
        return BinOp("*", u, v)
    if choice == 3:
        return BinOp("/", v, one_plus_sq)
    if choice == 4:
        return Call("sin", (u,))
    if choice == 5:
        return Call("cos", (u,))
    if choice == 6:
        return Call("atan", (u,))
    if choice == 7:
        return Call("exp", (Call("sin", (u,)),))
    if choice == 8:
        return Call("log", (one_plus_sq,))
    if choice == 9:
        return Call("sqrt", (one_plus_sq,))
    if choice == 10:
        return Call("tan", (BinOp("/", Call("atan", (u,)), Const(2.0)),))
    if choice == 11:
        denom = BinOp("+", Const(2.0), Call("cos", (v,)))
        return Call("atan2", (u, denom))
    if choice == 12:
        return Call("pow", (one_plus_sq, Const(float(np.round(rng.uniform(0.1, 1.5), 3)))))
    return Neg(BinOp("^", Call("atan", (u,)), Const(float(rng.integers(2, 4)))))
