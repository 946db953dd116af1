import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from painlin.core import DomainBreakdown, Generic, InvalidProblem, OdeProblem, PowerPlusConstant, Unit
from painlin.linear_solver import solve_constant, solve_constant_ivp
from painlin.linearize import LinearProblem, antiderivative, forward_map, linearize, pullback, solve_coupled
from painlin.verify import residual


def test_antiderivative_examples():
    assert antiderivative(Unit())(2.0) == 2.0
    assert antiderivative(PowerPlusConstant(1, 1, 0))(3.0) == 4.5
    F = antiderivative(PowerPlusConstant(1, -1, 0))
    assert F(math.e) == pytest.approx(1.0, abs=1e-15)
    ref, _ = quad(lambda y: 1 / y, 1.0, math.e, epsabs=1e-14)
    assert F(math.e) == pytest.approx(ref, abs=1e-13)


@pytest.mark.parametrize(
    "b, n, k",
    [(1, 1, 0), (2, 2, 1), (0.5, 0.5, 1), (1, -1, 1), (1, -1, 0), (3, -2, 0), (1, 1, 2), (1, 1, -2), (0.7, 3, 0)],
)
def test_power_antiderivative_matches_quadrature(b, n, k):
    fam = PowerPlusConstant(b, n, k)
    F = antiderivative(fam)
    lo = max(fam.domain[0], 0.0) + 0.5
    for y in (lo, lo + 0.7, lo + 2.3):
        ref, _ = quad(lambda t: fam(t), lo, y, epsabs=1e-14, epsrel=1e-14)
        assert F(y) - F(lo) == pytest.approx(ref, rel=1e-12, abs=1e-12)


@pytest.mark.parametrize(
    "fam",
    [
        Unit(),
        PowerPlusConstant(1, 1, 0),
        PowerPlusConstant(1, 1, 2),
        PowerPlusConstant(1, 1, -2),
        PowerPlusConstant(2, 2, 1),
        PowerPlusConstant(1, -1, 0),
        PowerPlusConstant(1, -1, 1),
        PowerPlusConstant(0.5, 0.5, 1),
        PowerPlusConstant(1, -3, 0),
        Generic(lambda y: 1 + y * y, (-math.inf, math.inf)),
        Generic(lambda y: math.exp(-y), (-math.inf, math.inf)),
    ],
    ids=lambda f: repr(f)[:40],
)
def test_inverse_roundtrip(fam):
    F = antiderivative(fam)
    lo = fam.domain[0] if hasattr(fam, "domain") and math.isfinite(fam.domain[0]) else -2.0
    for y in np.linspace(lo + 0.25, lo + 4.0, 9):
        assert F.inverse(F(y)) == pytest.approx(y, rel=1e-12, abs=1e-12)


@given(st.floats(0.2, 3), st.floats(-1.5, 3).filter(lambda n: abs(n + 1) > 1e-2), st.floats(0, 2), st.floats(0.1, 5))
@settings(max_examples=100, deadline=None)
def test_inverse_roundtrip_property(b, n, k, y):
    F = antiderivative(PowerPlusConstant(b, n, k))
    assert F.inverse(F(y)) == pytest.approx(y, rel=1e-10)


def test_generic_antiderivative_anchor():
    g = Generic(lambda y: math.cosh(y), (-math.inf, math.inf), anchor=0.0)
    F = antiderivative(g)
    for y in (-2.0, 0.3, 1.7):
        assert F(y) == pytest.approx(math.sinh(y), abs=1e-12)


def test_inverse_outside_range():
    with pytest.raises(DomainBreakdown):
        antiderivative(PowerPlusConstant(1, 1, 0)).inverse(-1.0)
    with pytest.raises(DomainBreakdown):
        antiderivative(Generic(lambda y: 1.0, (0.0, 1.0), anchor=0.5)).inverse(3.0)


def test_linearize_examples():
    lp, trace = linearize(OdeProblem(PowerPlusConstant(1, 1, 0), 3, 2, 0))
    assert lp == LinearProblem(3.0, 2.0, 0.0)
    assert lp.is_constant
    assert (trace.c, trace.c_bar) == (0.0, 0.0)
    lp, trace = linearize(OdeProblem(Unit(), 5, 3, 1))
    assert lp == LinearProblem(5.0, 3.0, 1.0)
    assert trace.F(1.25) == 1.25
    alpha, beta = (lambda x: x), (lambda x: x * x)
    lp, _ = linearize(OdeProblem(PowerPlusConstant(1, 1, 0), alpha, beta, 0))
    assert lp.a is alpha and lp.b is beta and not lp.is_constant


def test_linearize_rejects_out_of_class():
    with pytest.raises(InvalidProblem):
        linearize(OdeProblem(PowerPlusConstant(1, 0.5, 0), 0, lambda x: -3.0, 0))
    with pytest.raises(InvalidProblem):
        linearize(OdeProblem(PowerPlusConstant(1, 2, 1), 4, 3, 0, 0.5))


def test_forward_map_identity():
    x = np.linspace(1.0, 3.0, 21)
    y = np.sin(x)
    s, u = forward_map(x, y, Unit(), x0=1.0)
    assert np.allclose(s, x - 1.0, atol=1e-14)
    assert np.array_equal(u, y)


def test_forward_map_constant_trajectory():
    x = np.linspace(0.0, 1.0, 11)
    y = np.full_like(x, 1.5)
    s, u = forward_map(x, y, PowerPlusConstant(1, 1, 0), x0=0.0)
    assert np.allclose(s, 1.5 * x, atol=1e-14)
    assert np.allclose(u, 1.125, atol=0)


@pytest.mark.parametrize("use_function", [False, True])
def test_forward_map_reciprocal(use_function):
    x = np.linspace(1.0, 2.0, 401)
    y = 1.0 / x
    s, u = forward_map(x, y, PowerPlusConstant(1, 1, 0), x0=1.0, y_of_x=(lambda t: 1.0 / t) if use_function else None)
    assert np.allclose(s, np.log(x), atol=1e-11)
    assert np.allclose(u, 1.0 / (2 * x * x), atol=1e-15)


def test_forward_map_rejects_non_monotone():
    with pytest.raises(ValueError):
        forward_map(np.array([0.0, 1.0, 0.5]), np.ones(3), Unit())


def test_forward_map_requires_positive_f():
    with pytest.raises(DomainBreakdown):
        forward_map(np.linspace(0, 1, 5), np.linspace(-1, 1, 5), PowerPlusConstant(1, 1, 0))


def test_pullback_identity():
    lin = solve_constant(1, 2, 0, 1, 0.5)
    _, trace = linearize(OdeProblem(Unit(), 1, 2, 0), x0=0.5)
    curve = pullback(lin, Unit(), trace, (0.0, 2.0), samples=21)
    assert np.allclose(curve.x, np.linspace(0.0, 2.0, 21) + 0.5, atol=1e-13)
    assert np.allclose(curve.y, lin(np.linspace(0.0, 2.0, 21)), atol=1e-15)


def test_pullback_exponential_example():
    # u = exp(-s) solves u'' + 3u' + 2u = 0
    lin = solve_constant(3, 2, 0, 1, 0)
    problem = OdeProblem(PowerPlusConstant(1, 1, 0), 3, 2, 0)
    _, trace = linearize(problem)
    curve = pullback(lin, problem.f, trace, (0.0, 1.0), samples=41)
    s = np.linspace(0.0, 1.0, 41)
    assert np.allclose(curve.y, np.sqrt(2 * np.exp(-s)), rtol=1e-14)
    # x(s) = int_0^s e^(t/2)/sqrt(2) dt
    assert np.allclose(curve.x, math.sqrt(2) * (np.exp(s / 2) - 1), rtol=1e-12, atol=1e-14)
    xs = np.linspace(curve.span[0], curve.span[1], 37)
    assert residual(problem, curve, xs) < 1e-8
    # finite differences need room for the stencil
    assert residual(problem, curve, xs[1:-1], analytic=False) < 1e-8


def test_pullback_breakdown():
    # u crosses zero, where f = y forces y -> 0
    lin = solve_constant(0, 1, 0, 1, 0)
    with pytest.raises(DomainBreakdown):
        pullback(lin, PowerPlusConstant(1, 1, 0), None, (0.0, 3.0))


def test_parametric_curve_queries_are_consistent():
    lin = solve_constant(3, 2, 0, 1, 1)
    problem = OdeProblem(PowerPlusConstant(1, 1, 0), 3, 2, 0)
    curve = pullback(lin, problem.f, linearize(problem)[1], (-0.5, 1.0), samples=31)
    assert np.all(np.diff(curve.x) > 0)
    for x in np.linspace(curve.span[0], curve.span[1], 17):
        s = curve.parameter_of(x)
        assert curve.at_parameter(s)[0] == pytest.approx(x, abs=1e-14)


def test_coupled_matches_closed_form_pullback():
    problem = OdeProblem(PowerPlusConstant(1, 1, 0), 3, 2, 0)
    lin = solve_constant_ivp(3, 2, 0, 2.0, -0.5)
    closed = pullback(lin, problem.f, linearize(problem)[1], (-0.4, 1.0), samples=31)
    coupled = solve_coupled(3, 2, 0, problem.f, 2.0, -0.5, 0.0, (-0.4, 1.0), samples=31, tol=1e-12)
    assert np.allclose(closed.x, coupled.x, atol=1e-10)
    assert np.allclose(closed.y, coupled.y, atol=1e-10)


def test_coupled_variable_coefficients():
    # coefficients read at the original x
    problem = OdeProblem(PowerPlusConstant(1, 1, 0), lambda x: 1 + 0.5 * x, lambda x: 0.3 * math.cos(x), 0)
    curve = solve_coupled(problem.alpha, problem.beta, 0.0, problem.f, 1.0, 0.2, 0.0, (0.0, 1.5), samples=41, tol=1e-12)
    xs = np.linspace(curve.span[0], curve.span[1], 25)
    assert residual(problem, curve, xs) < 1e-8
