import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfspec.errors import EvalDomainError, ParseError
from vfspec.expr import (BinOp, Call, Const, Neg, Var, depth, diff, eval_dual, evaluate,
                         parse_scalar, substitute, to_string)
from vfspec.families import random_expr


def ev(text, p):
    return evaluate(parse_scalar(text, len(p)), p)


@pytest.mark.parametrize("text,p,expected", [
    ("x^2 + y^2", (1, 2), 5.0),
    ("exp(2*atan(y/x))", (1, 0), 1.0),
    ("sqrt(x^2+y^2)", (3, 4), 5.0),
    ("atan(y/x)", (1, 1), math.pi / 4),
    ("2^3^2", (0, 0), 512.0),          # right associative
    ("8/4/2", (0, 0), 1.0),            # left associative
    ("-x^2", (3, 0), -9.0),            # minus binds looser than ^
    ("x - -y", (1, 2), 3.0),
    ("pi", (0, 0), math.pi),
    ("atan2(y, x)", (-1, 0), math.pi),
    ("pow(x, 0.5)", (4, 0), 2.0),
    ("abs(x-y)", (1, 3), 2.0),
    ("1e-3*x", (2, 0), 2e-3),
    ("x1*x2", (2, 5), 10.0),           # indexed names accepted in low dimension
    ("x^3", (-2, 0), -8.0),            # integer exponent, negative base
])
def test_evaluate_examples(text, p, expected):
    assert ev(text, p) == pytest.approx(expected, rel=1e-15)


def test_four_dimensional_names():
    e = parse_scalar("x1 + 2*x4", 4)
    assert evaluate(e, (1, 0, 0, 3)) == 7.0
    with pytest.raises(ParseError):
        parse_scalar("x + x4", 4)


@pytest.mark.parametrize("text,dim", [
    ("exp(l*atan(y/x))", 2),   # free symbol
    ("z", 2),                   # outside the dimension
    ("x3", 2),
    ("sin(x, y)", 2),           # arity
    ("atan2(x)", 2),
    ("x +* y", 2),
    ("(x + y", 2),
    ("x y", 2),
    ("", 1),
    ("sin", 1),
    ("3 $ x", 1),
])
def test_parse_errors(text, dim):
    with pytest.raises(ParseError):
        parse_scalar(text, dim)


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        parse_scalar("x + )", 2)
    assert info.value.position == 4


@pytest.mark.parametrize("text,p", [
    ("1/x", (0, 1)),
    ("log(x)", (0, 1)),
    ("log(x)", (-1, 1)),
    ("sqrt(x)", (-1, 0)),
    ("pow(x, 0.5)", (-1, 0)),
    ("x^(-1)", (0, 0)),
    ("atan2(x, y)", (0, 0)),
    ("exp(x)", (1000, 0)),
])
def test_domain_errors(text, p):
    with pytest.raises(EvalDomainError):
        ev(text, p)


def test_domain_error_names_subexpression():
    with pytest.raises(EvalDomainError) as info:
        ev("sin(x) + 1/(y - 1)", (0.5, 1.0))
    msg = str(info.value)
    assert "/" in msg and "y" in msg and "1.0" in msg


@pytest.mark.parametrize("text,p,value,partials", [
    ("x*y", (2, 3), 6.0, (3.0, 2.0)),
    ("atan(y/x)", (1, 1), math.pi / 4, (-0.5, 0.5)),
    ("7", (0.3, -2), 7.0, (0.0, 0.0)),
    ("x", (0.3, -2), 0.3, (1.0, 0.0)),
    ("exp(2*atan(y/x))", (1, 0), 1.0, (0.0, 2.0)),
    ("sqrt(x^2+y^2)", (3, 4), 5.0, (0.6, 0.8)),
])
def test_dual_examples(text, p, value, partials):
    d = eval_dual(parse_scalar(text, 2), p)
    assert d.value == pytest.approx(value, rel=1e-15)
    np.testing.assert_allclose(d.partials, partials, rtol=1e-15, atol=1e-15)


def test_abs_at_zero_flagged():
    d = eval_dual(parse_scalar("abs(x)", 1), (0.0,))
    assert d.value == 0.0 and d.partials[0] == 0.0 and d.nondiff
    d = eval_dual(parse_scalar("abs(x)", 1), (-2.0,))
    assert d.partials[0] == -1.0 and not d.nondiff


def test_sqrt_at_zero_not_differentiable():
    assert evaluate(parse_scalar("sqrt(x)", 1), (0.0,)) == 0.0
    with pytest.raises(EvalDomainError):
        eval_dual(parse_scalar("sqrt(x)", 1), (0.0,))


@pytest.mark.parametrize("text,expected", [
    ("x^2+y^2", "((x^2)+(y^2))"),
    ("atan2(y,x)", "atan2(y,x)"),
    ("-x", "(-x)"),
])
def test_print(text, expected):
    assert to_string(parse_scalar(text, 2)) == expected


def test_const_is_non_negative():
    with pytest.raises(ValueError):
        Const(-1.0)
    assert parse_scalar("-3", 1) == Neg(Const(3.0))


def test_deep_round_trip():
    e = Var(0)
    for i in range(50):
        e = Call("sin", (e,)) if i % 3 == 0 else BinOp("+-*/^"[i % 5], e, Const(float(i % 4 + 1)))
    assert depth(e) == 51
    assert parse_scalar(to_string(e), 1) == e


@settings(max_examples=300, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 4), d=st.integers(1, 7))
def test_round_trip_random(seed, dim, d):
    e = random_expr(np.random.default_rng(seed), dim, d)
    assert parse_scalar(to_string(e, dim), dim) == e


@settings(max_examples=200, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 3),
       p=st.lists(st.floats(-2, 2), min_size=3, max_size=3))
def test_ad_matches_central_differences(seed, dim, p):
    e = random_expr(np.random.default_rng(seed), dim, 4)
    p = p[:dim]
    d = eval_dual(e, p)
    assert d.value == evaluate(e, p)
    h = 1e-5
    for i in range(dim):
        hi = list(p); hi[i] += h
        lo = list(p); lo[i] -= h
        fd = (evaluate(e, hi) - evaluate(e, lo)) / (2 * h)
        assert abs(d.partials[i] - fd) / (1 + abs(d.partials[i])) < 1e-6


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=st.lists(st.floats(-2, 2), min_size=2, max_size=2))
def test_symbolic_diff_agrees_with_dual(seed, p):
    e = random_expr(np.random.default_rng(seed), 2, 4)
    d = eval_dual(e, p)
    for i in range(2):
        assert evaluate(diff(e, i), p) == pytest.approx(d.partials[i], rel=1e-9, abs=1e-12)


def test_evaluation_is_pure():
    e = parse_scalar("sin(x)*exp(y)/(1+x^2)", 2)
    assert evaluate(e, (0.3, 0.7)) == evaluate(e, (0.3, 0.7))


def test_substitute():
    e = parse_scalar("x*y + x", 2)
    swapped = substitute(e, [Var(1), Var(0)])
    assert evaluate(swapped, (2, 5)) == 15.0
