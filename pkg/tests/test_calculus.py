import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfspec.calculus import (DiffeoMap, ScalarField, VectorField, apply_field, classify,
                             covariant_derivative, gradient, lie_bracket, lie_derivative_metric,
                             pullback_metric_residual, pushforward)
from vfspec.errors import PreconditionError, SpecError
from vfspec.expr import BinOp, diff
from vfspec.families import random_expr
from vfspec.geometry import Domain, Metric, build_grid, parse_domain, parse_metric

PLANE = parse_domain("box:-3,3,-3,3")
FLAT = Metric.flat(2)
POLAR = parse_metric("1;0;0;x^2", 2)

points = st.lists(st.floats(-2, 2), min_size=2, max_size=2)


def vf(text, d=PLANE):
    return VectorField.parse(text, d)


def sf(text, d=PLANE):
    return ScalarField.parse(text, d)


def test_apply_field_examples():
    assert apply_field(vf("-y,x"), sf("exp(2*atan(y/x))"), [1, 1]) == pytest.approx(
        2 * math.exp(math.pi / 2), rel=1e-15)
    assert apply_field(vf("x,y"), sf("sqrt(x^2+y^2)"), [0.3, 0.4]) == pytest.approx(0.5, rel=1e-15)
    assert apply_field(vf("sin(x)*y,exp(x)"), sf("3.5"), [0.2, 0.7]) == 0.0


def test_apply_field_batch():
    pts = np.array([[1.0, 1.0], [0.5, -0.2]])
    out = apply_field(vf("-y,x"), sf("x^2+y^2"), pts)
    np.testing.assert_allclose(out, 0.0, atol=1e-15)


def test_gradient_examples():
    np.testing.assert_allclose(gradient(FLAT, sf("x^2+y^2"), [1, 2]), [2, 4])
    np.testing.assert_allclose(gradient(POLAR, sf("y"), [2, 0]), [0, 0.25])
    np.testing.assert_array_equal(gradient(POLAR, sf("4"), [2, 0]), [0, 0])


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=points)
def test_gradient_euclidean_is_partials(seed, p):
    f = ScalarField(random_expr(np.random.default_rng(seed), 2, 4), PLANE)
    np.testing.assert_array_equal(gradient(FLAT, f, p), f.value_grad(p)[1])


def test_lie_bracket_examples():
    np.testing.assert_allclose(lie_bracket(vf("-y,x"), vf("x,y"), [0.7, -1.3]), [0, 0], atol=1e-15)
    np.testing.assert_array_equal(lie_bracket(vf("1,0"), vf("0,x"), [2, 3]), [0, 1])
    X = vf("sin(y),x*y")
    np.testing.assert_array_equal(lie_bracket(X, X, [0.4, 0.9]), [0, 0])


def test_lie_derivative_examples():
    p = [0.3, -0.8]
    np.testing.assert_allclose(lie_derivative_metric(vf("-y,x"), FLAT, p), np.zeros((2, 2)),
                               atol=1e-15)
    np.testing.assert_allclose(lie_derivative_metric(vf("x,y"), FLAT, p), 2 * np.eye(2))
    np.testing.assert_array_equal(lie_derivative_metric(vf("0,0"), FLAT, p), np.zeros((2, 2)))


def test_lie_derivative_polar_rotation():
    # d/dtheta is Killing for dr^2 + r^2 dtheta^2; r d/dr is not
    d = parse_domain("box:0.5,2,0,3")
    np.testing.assert_allclose(lie_derivative_metric(vf("0,1", d), POLAR, [1.2, 0.4]),
                               np.zeros((2, 2)), atol=1e-15)
    np.testing.assert_allclose(lie_derivative_metric(vf("x,0", d), POLAR, [1.2, 0.4]),
                               np.diag([2.0, 2 * 1.44]), rtol=1e-14)


def test_covariant_derivative_examples():
    np.testing.assert_allclose(covariant_derivative([0.3, -2.0], vf("x,y"), FLAT, [1.5, 0.2]),
                               [0.3, -2.0])
    np.testing.assert_array_equal(covariant_derivative([1, 0], vf("2,-1"), FLAT, [0.5, 0.5]), [0, 0])
    np.testing.assert_array_equal(covariant_derivative([1, 0], vf("-y,x"), FLAT, [0, 0]), [0, 1])
    # field Y instead of a constant vector
    np.testing.assert_allclose(covariant_derivative(vf("y,1"), vf("x,y"), FLAT, [1.0, 2.0]), [2, 1])


def test_covariant_derivative_polar_concurrent():
    # the position field r d/dr in polar coordinates satisfies nabla_Y X = Y
    d = parse_domain("box:0.5,2,0,3")
    X = vf("x,0", d)
    for Y in ([1.0, 0.0], [0.0, 1.0], [0.4, -0.7]):
        np.testing.assert_allclose(covariant_derivative(Y, X, POLAR, [1.3, 0.6]), Y, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=points)
def test_leibniz(seed, p):
    rng = np.random.default_rng(seed)
    X = VectorField((random_expr(rng, 2, 3), random_expr(rng, 2, 3)), PLANE)
    f, h = random_expr(rng, 2, 3), random_expr(rng, 2, 3)
    F, H = ScalarField(f, PLANE), ScalarField(h, PLANE)
    FH = ScalarField(BinOp("*", f, h), PLANE)
    lhs = apply_field(X, FH, p)
    rhs = F.values(p) * apply_field(X, H, p) + H.values(p) * apply_field(X, F, p)
    assert abs(lhs - rhs) < 1e-10 * (1 + abs(lhs))


def _bracket_field(X, Y):
    comps = []
    for k in range(X.dim):
        e = None
        for i in range(X.dim):
            t = BinOp("-", BinOp("*", X.components[i], diff(Y.components[k], i)),
                      BinOp("*", Y.components[i], diff(X.components[k], i)))
            e = t if e is None else BinOp("+", e, t)
        comps.append(e)
    return VectorField(tuple(comps), X.domain)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), p=points)
def test_bracket_antisymmetry_and_jacobi(seed, p):
    rng = np.random.default_rng(seed)
    X, Y, Z = (VectorField((random_expr(rng, 2, 3), random_expr(rng, 2, 3)), PLANE)
               for _ in range(3))
    np.testing.assert_allclose(lie_bracket(X, Y, p), -lie_bracket(Y, X, p), atol=1e-12)
    np.testing.assert_allclose(_bracket_field(X, Y).values(p), lie_bracket(X, Y, p),
                               rtol=1e-9, atol=1e-10)
    jac = (lie_bracket(X, _bracket_field(Y, Z), p) + lie_bracket(Y, _bracket_field(Z, X), p)
           + lie_bracket(Z, _bracket_field(X, Y), p))
    scale = 1 + max(np.max(np.abs(lie_bracket(X, _bracket_field(Y, Z), p))), 1.0)
    assert np.max(np.abs(jac)) < 1e-9 * scale


MAPS = [
    ("-x,-y", "-x,-y"),
    ("x+3,y", "x-3,y"),
    ("x+0.3*sin(y),y", "x-0.3*sin(y),y"),
    ("x,y+x^3/4", "x,y-x^3/4"),
    ("x,y", "x,y"),
]


@pytest.mark.parametrize("fw,inv", MAPS)
@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), q=st.lists(st.floats(-1, 1), min_size=2, max_size=2))
def test_pushforward_intertwines(fw, inv, seed, q):
    big = parse_domain("box:-10,10,-10,10")
    phi = DiffeoMap.parse(fw, inv, big, big)
    rng = np.random.default_rng(seed)
    X = VectorField((random_expr(rng, 2, 3), random_expr(rng, 2, 3)), big)
    f = ScalarField(random_expr(rng, 2, 3), big)
    p = phi.apply_inverse(q)[0]
    lhs = apply_field(X, f, p)
    y = pushforward(phi, X, q)
    moved = phi.compose_inverse(f)
    rhs = float(np.dot(y, moved.value_grad(q)[1]))
    assert abs(lhs - rhs) < 1e-9 * (1 + abs(lhs))


def test_pushforward_examples():
    phi = DiffeoMap.parse("-x,-y", "-x,-y", PLANE, PLANE)
    np.testing.assert_allclose(pushforward(phi, vf("-y,x"), [1, 0]), [0, 1])
    shift = DiffeoMap.parse("x+3,y", "x-3,y", PLANE, parse_domain("box:0,6,-3,3"))
    np.testing.assert_array_equal(pushforward(shift, vf("1,0"), [[1, 1], [5, -2]]), [[1, 0], [1, 0]])
    ident = DiffeoMap.identity(PLANE)
    np.testing.assert_array_equal(pushforward(ident, vf("x*y,sin(x)"), [0.5, 2.0]),
                                  vf("x*y,sin(x)").values([0.5, 2.0]))


def test_pushforward_needs_preimage():
    shift = DiffeoMap.parse("x+3,y", "x-3,y", PLANE, parse_domain("box:0,10,-3,3"))
    with pytest.raises(PreconditionError):
        pushforward(shift, vf("1,0"), [9.0, 0.0])


def test_isometry_precheck():
    rot = DiffeoMap.parse("-x,-y", "-x,-y", PLANE, PLANE)
    assert pullback_metric_residual(rot, FLAT, FLAT, [[0.3, 0.2], [1, -1]]) == 0.0
    stretch = DiffeoMap.parse("2*x,y", "x/2,y", PLANE, parse_domain("box:-6,6,-3,3"))
    assert pullback_metric_residual(stretch, FLAT, FLAT, [[0.3, 0.2]]) == pytest.approx(3.0)
    assert rot.inverse_residual([[0.3, 0.2]], [[0.1, 0.1]]) == 0.0


def test_diffeo_component_count():
    with pytest.raises(SpecError):
        DiffeoMap.parse("x", "x,y", PLANE, PLANE)


@pytest.fixture(scope="module")
def box_grid():
    return build_grid(parse_domain("box:-2,2,-2,2"), FLAT, 60)


def test_classify_rotation(box_grid):
    rep = classify(vf("-y,x", box_grid.domain), FLAT, box_grid, 1e-9)
    assert rep.verdict == "killing"
    assert rep.killing_residual < 1e-12 and abs(rep.c) < 1e-9
    assert rep.length_variance > 0.1


def test_classify_position(box_grid):
    rep = classify(vf("x,y", box_grid.domain), FLAT, box_grid)
    assert rep.verdict == "concurrent"
    assert rep.c == pytest.approx(1.0, abs=1e-12)
    assert rep.homothetic_residual < 1e-12 and rep.concurrent_residual < 1e-12


def test_classify_scaled_position_is_homothetic(box_grid):
    rep = classify(vf("3*x,3*y", box_grid.domain), FLAT, box_grid)
    assert rep.verdict == "homothetic" and rep.c == pytest.approx(3.0)


def test_classify_none(box_grid):
    rep = classify(vf("x^2,0", box_grid.domain), FLAT, box_grid)
    assert rep.verdict == "none"
    assert min(rep.killing_residual, rep.homothetic_residual, rep.concurrent_residual) > 1.0


def test_classify_translation_constant_length(box_grid):
    rep = classify(vf("1,0", box_grid.domain), FLAT, box_grid)
    assert rep.verdict == "killing" and rep.length_variance == 0.0


def test_classify_empty_grid():
    d = Domain.plane_minus_line(2.0, 0.05, clip_radius=0.06)
    g = build_grid(d, FLAT, 4)
    with pytest.raises(PreconditionError):
        classify(vf("-y,x", d), FLAT, g)
