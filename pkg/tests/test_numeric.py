import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from painlin.core import DomainBreakdown, IntegrationError
from painlin.numeric import (
    CumulativeIntegral,
    adaptive_simpson,
    bisect_root,
    cumulative_quadrature,
    integrate,
    invert_monotone,
    sign_change_roots,
)

TOL = 1e-10


def exp_rhs(t, y):
    return y


def oscillator(t, s):
    return np.array([s[1], -s[0]])


def test_exponential_growth():
    sol = integrate(exp_rhs, [1.0], (0.0, 1.0), TOL)
    assert abs(sol.y[-1, 0] - math.e) < 10 * TOL


def test_oscillator_energy():
    sol = integrate(oscillator, [1.0, 0.0], (0.0, 2 * math.pi), TOL)
    energy = np.sum(sol.y**2, axis=1)
    assert np.max(np.abs(energy - 1.0)) < 10 * TOL


def painleve_ince_rhs(t, s):
    y, dy = s
    return np.array([dy, -3 * y * dy - y**3])


def test_painleve_ince_trajectory_matches_closed_form():
    # y = 2x/(x^2+1): y(1) = 1, y'(1) = 0, y(2) = 4/5
    sol = integrate(painleve_ince_rhs, [1.0, 0.0], (1.0, 2.0), TOL)
    assert abs(sol.y[-1, 0] - 0.8) < 10 * TOL
    assert abs(sol.precise(2.0)[0] - 0.8) < 10 * TOL


def test_backward_span():
    sol = integrate(exp_rhs, [1.0], (0.0, -2.0), TOL)
    assert abs(sol.y[-1, 0] - math.exp(-2.0)) < 10 * TOL
    assert abs(sol.precise(-1.0)[0] - math.exp(-1.0)) < 10 * TOL


def test_dense_output_accuracy_against_scipy():
    sol = integrate(oscillator, [1.0, 0.0], (0.0, 10.0), TOL)
    ref = solve_ivp(oscillator, (0.0, 10.0), [1.0, 0.0], rtol=1e-13, atol=1e-13, dense_output=True)
    ts = np.linspace(0.0, 10.0, 97)
    hermite = sol(ts)[:, 0]
    assert np.max(np.abs(hermite - ref.sol(ts)[0])) < 10 * TOL
    precise = np.array([sol.precise(t)[0] for t in ts])
    assert np.max(np.abs(precise - np.cos(ts))) < 10 * TOL
    assert np.max(np.abs(sol.derivative(ts)[:, 0] + np.sin(ts))) < 1e-6


def test_queries_outside_span_rejected():
    sol = integrate(exp_rhs, [1.0], (0.0, 1.0), TOL)
    with pytest.raises(ValueError):
        sol(1.5)


def test_fixed_step_fourth_order_or_better():
    errors = []
    for h in (0.2, 0.1, 0.05):
        sol = integrate(exp_rhs, [1.0], (0.0, 1.0), TOL, fixed_step=h)
        errors.append(abs(sol.y[-1, 0] - math.e))
    assert errors[0] / errors[1] >= 2**4
    assert errors[1] / errors[2] >= 2**4


@pytest.mark.parametrize("tol", [1e-6, 1e-8, 1e-10, 1e-12])
def test_adaptive_error_tracks_tolerance(tol):
    sol = integrate(exp_rhs, [1.0], (0.0, 1.0), tol)
    assert abs(sol.y[-1, 0] - math.e) < 10 * tol * math.e


def test_tolerance_range_enforced():
    with pytest.raises(ValueError):
        integrate(exp_rhs, [1.0], (0.0, 1.0), 1e-16)
    with pytest.raises(ValueError):
        integrate(exp_rhs, [1.0], (0.0, 1.0), 0.1)


def test_underflow_reports_location():
    # y' = y^2 from y(0) = 1 blows up at t = 1
    with pytest.raises(IntegrationError) as info:
        integrate(lambda t, y: y * y, [1.0], (0.0, 2.0), TOL)
    assert info.value.location is not None
    assert 0.99 < info.value.location <= 1.0


def test_non_finite_rhs_reported():
    with pytest.raises(IntegrationError):
        integrate(lambda t, y: np.array([math.nan]), [1.0], (0.0, 1.0), TOL)


# -- quadrature --------------------------------------------------------------


@pytest.mark.parametrize(
    "g, a, grid, expected",
    [
        (lambda x: 1.0, 0.0, [0.5, 1.0, 2.0], [0.5, 1.0, 2.0]),
        (lambda x: x, 0.0, [1.0, 2.0], [0.5, 2.0]),
        (lambda x: 1.0 / x, 1.0, [math.e], [1.0]),
    ],
    ids=["constant", "linear", "log"],
)
def test_cumulative_quadrature_examples(g, a, grid, expected):
    out = cumulative_quadrature(g, a, grid, 1e-12)
    assert np.allclose(out, expected, rtol=0, atol=1e-11)


def test_cumulative_quadrature_monotone_for_nonnegative_integrand():
    grid = np.linspace(0.0, 3.0, 40)
    out = cumulative_quadrature(lambda x: math.sin(x) ** 2, 0.0, grid, 1e-12)
    assert np.all(np.diff(out) >= 0)


def test_cumulative_quadrature_rejects_unordered_grid():
    with pytest.raises(ValueError):
        cumulative_quadrature(lambda x: x, 0.0, [1.0, 0.5, 2.0])


@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(-3, 3))
@settings(max_examples=60, deadline=None)
def test_quadrature_additivity(a, b, c):
    g = lambda x: math.exp(-x * x) * math.cos(3 * x)
    tol = 1e-12
    ab = adaptive_simpson(g, a, b, tol)
    bc = adaptive_simpson(g, b, c, tol)
    ac = adaptive_simpson(g, a, c, tol)
    assert abs(ab + bc - ac) <= 2 * tol + 1e-15


def test_non_finite_integrand_reported():
    with pytest.raises(DomainBreakdown):
        adaptive_simpson(lambda x: math.inf if x == 0 else 1.0 / x, -1.0, 1.0)


def test_cumulative_integral_both_directions():
    ci = CumulativeIntegral(math.cos, 0.5, offset=2.0)
    for x in (-4.0, -0.3, 0.5, 1.7, 6.0):
        assert ci(x) == pytest.approx(2.0 + math.sin(x) - math.sin(0.5), abs=1e-13)


def test_cumulative_integral_is_smooth_in_upper_limit():
    # second differences of a smooth antiderivative recover the integrand's slope
    ci = CumulativeIntegral(math.exp, 0.0)
    h = 1e-3
    for x in (0.1, 0.37, 0.99):
        d2 = (ci(x + h) - 2 * ci(x) + ci(x - h)) / h**2
        assert d2 == pytest.approx(math.exp(x), rel=1e-6)


# -- inversion ----------------------------------------------------------------


def test_invert_examples():
    assert invert_monotone(lambda y: y * y / 2, 2.0, (0.0, 10.0)) == pytest.approx(2.0, abs=1e-12)
    assert invert_monotone(math.log, 1.0, (1.0, 10.0)) == pytest.approx(math.e, abs=1e-12)


def test_invert_outside_image():
    with pytest.raises(DomainBreakdown):
        invert_monotone(math.log, 5.0, (1.0, 10.0))


@given(
    st.floats(0.1, 3), st.floats(0, 3), st.floats(0.01, 2),
    st.floats(-2, 2),
)
@settings(max_examples=80, deadline=None)
def test_invert_random_cubic_roundtrip(a, b, c, y_star):
    # strictly increasing: every term is nondecreasing and c > 0
    F = lambda y: c * y + a * y**3 + b * math.atan(y)
    target = F(y_star)
    y = invert_monotone(F, target, (-3.0, 3.0), tol=0.0)
    assert abs(F(y) - target) <= 1e-12 * max(1.0, abs(target))
    assert y == pytest.approx(y_star, abs=1e-9)


def test_invert_with_derivative_reaches_machine_precision():
    y = invert_monotone(math.exp, 2.0, (0.0, 2.0), tol=0.0, derivative=math.exp, guess=0.5)
    assert abs(y - math.log(2.0)) <= 2e-16


def test_root_helpers():
    assert bisect_root(math.cos, 0.0, 3.0) == pytest.approx(math.pi / 2, abs=1e-15)
    roots = sign_change_roots(math.sin, 0.5, 10.0)
    assert np.allclose(roots, [math.pi, 2 * math.pi, 3 * math.pi], atol=1e-14)
