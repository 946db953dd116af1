"""Independent checks of candidate solutions.

Residuals are taken in the original nonlinear equation, oracle comparisons
integrate that equation directly, and round trips check forward-mapped data
against the linear target.  Nothing here reuses the transformation used to
build a solution.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .closed_forms import POLE_GUARD, CaseASolution
from .core import DomainBreakdown, InvalidProblem, OdeProblem, PoleError, is_map, param_at, real_root, signed_power
from .linearize import antiderivative, forward_map
from .numeric import DEFAULT_INTEGRATE_TOL, DEFAULT_QUAD_TOL, cumulative_quadrature, integrate

FD_REL_STEP = 1e-3


def fd_derivatives(g: Callable[[float], float], x: float, h: float | None = None):
    """(g, g', g'') at x from 5-point central differences."""
    x = float(x)
    if h is None:
        h = max(FD_REL_STEP, FD_REL_STEP * abs(x))
    v = [float(g(x + j * h)) for j in (-2, -1, 0, 1, 2)]
    d1 = (v[0] - 8 * v[1] + 8 * v[3] - v[4]) / (12 * h)
    d2 = (-v[0] + 16 * v[1] - 30 * v[2] + 16 * v[3] - v[4]) / (12 * h * h)
    return v[2], d1, d2


def _check_poles(solution, points):
    poles = getattr(solution, "poles", None)
    if poles is None:
        return
    lo, hi = float(np.min(points)), float(np.max(points))
    found = poles((lo - 1e-3, hi + 1e-3)) if callable(poles) else list(poles)
    for p in found:
        near = np.abs(np.asarray(points) - p) < POLE_GUARD
        if np.any(near):
            raise PoleError(f"x={float(np.asarray(points)[near][0]):.17g} lies within {POLE_GUARD} of a pole at {p:.17g}")


def residual_values(problem: OdeProblem, solution, points, *, analytic: bool | None = None) -> np.ndarray:
    """Normalized residuals of ``problem`` at each point.

    Each value is ``|y'' + alpha f y' + beta f F + gamma f + delta y| / (1 + |y| + |y|^3)``.

    Args:
        solution: Either exposes ``derivatives(x) -> (y, y', y'')`` or is a
            plain callable, differentiated by finite differences.
        analytic: Force (True) or forbid (False) use of ``derivatives``.

    Raises:
        PoleError: a point is within the guard band of a registered pole.
    """
    points = np.atleast_1d(np.asarray(points, dtype=float))
    _check_poles(solution, points)
    F = antiderivative(problem.f)
    use_analytic = hasattr(solution, "derivatives") if analytic is None else analytic
    out = np.empty(points.size)
    for i, x in enumerate(points):
        if use_analytic:
            y, dy, d2y = (float(v) for v in solution.derivatives(float(x)))
        else:
            y, dy, d2y = fd_derivatives(solution, x)
        a, b, g, d = problem.at(x)
        f = float(problem.f(y, x))
        r = d2y + a * f * dy + b * f * float(F(y, x)) + g * f + d * y
        if not math.isfinite(r):
            raise DomainBreakdown(f"residual is not finite at x={x:.17g} (y={y:.6g})")
        out[i] = abs(r) / (1.0 + abs(y) + abs(y) ** 3)
    return out


def residual(problem: OdeProblem, solution, points, *, analytic: bool | None = None) -> float:
    """Maximum normalized residual over ``points``; see :func:`residual_values`."""
    return float(np.max(residual_values(problem, solution, points, analytic=analytic)))


def oracle_rhs(problem: OdeProblem):
    """First-order system (y, y')' of the nonlinear equation."""
    F = antiderivative(problem.f)

    def rhs(x, s):
        y, dy = s
        a, b, g, d = problem.at(x)
        f = float(problem.f(y, x))
        return np.array([dy, -a * f * dy - b * f * float(F(y, x)) - g * f - d * y])

    return rhs


def oracle_solve(problem: OdeProblem, x0: float, y0: float, ydot0: float, span, tol: float = DEFAULT_INTEGRATE_TOL):
    """Direct numeric solution through (x0, y0, ydot0) covering ``span``.

    Returns a callable ``x -> y`` backed by one or two dense solutions.
    """
    rhs = oracle_rhs(problem)
    lo, hi = float(span[0]), float(span[1])
    pieces = []
    if hi > x0:
        pieces.append(integrate(rhs, [y0, ydot0], (x0, hi), tol))
    if lo < x0:
        pieces.append(integrate(rhs, [y0, ydot0], (x0, lo), tol))

    def value(x):
        x = float(x)
        if x == x0:
            return float(y0)
        for p in pieces:
            a, b = sorted(p.span)
            if a <= x <= b:
                return float(p.precise(x)[0])
        raise ValueError(f"x={x:.17g} outside oracle span")

    value.pieces = pieces
    return value


def oracle_compare(problem: OdeProblem, solution, x0: float, span, tol: float = DEFAULT_INTEGRATE_TOL,
                   points: int | np.ndarray = 201) -> float:
    """Maximum |y_candidate - y_oracle| over ``span``.

    Initial data (y, y') are read from the candidate at ``x0``.

    Raises:
        IntegrationError: the oracle integration failed.
    """
    if hasattr(solution, "derivatives"):
        y0, dy0, _ = (float(v) for v in solution.derivatives(float(x0)))
    else:
        y0, dy0, _ = fd_derivatives(solution, x0)
    oracle = oracle_solve(problem, float(x0), y0, dy0, span, tol)
    xs = np.linspace(span[0], span[1], points) if np.ndim(points) == 0 else np.asarray(points, dtype=float)
    return float(max(abs(float(solution(x)) - oracle(x)) for x in xs))


def fd_nonuniform(t, u):
    """First and second derivatives on a nonuniform grid (3-point stencil), interior points."""
    t = np.asarray(t, dtype=float)
    u = np.asarray(u, dtype=float)
    h0 = t[1:-1] - t[:-2]
    h1 = t[2:] - t[1:-1]
    um, uc, up = u[:-2], u[1:-1], u[2:]
    d1 = (-h1 / (h0 * (h0 + h1))) * um + ((h1 - h0) / (h0 * h1)) * uc + (h0 / (h1 * (h0 + h1))) * up
    d2 = 2.0 * (um / (h0 * (h0 + h1)) - uc / (h0 * h1) + up / (h1 * (h0 + h1)))
    return d1, d2


def roundtrip(problem: OdeProblem, x, y, *, x0: float | None = None, y_of_x: Callable | None = None) -> float:
    """Linear residual of forward-mapped trajectory samples.

    The samples are mapped to (s, u) and ``u'' + a u' + b u + g`` is
    evaluated by finite differences on that grid.  x-dependent coefficients
    are read at the original sample abscissae.

    Raises:
        DomainBreakdown: f(y) <= 0 along the trajectory.
    """
    if is_map(problem.delta) or problem.delta != 0:
        raise InvalidProblem("round trip applies to problems without a delta term")
    x = np.asarray(x, dtype=float)
    s, u = forward_map(x, y, problem.f, x0=x0, y_of_x=y_of_x)
    d1, d2 = fd_nonuniform(s, u)
    xi = x[1:-1]
    a = np.array([param_at(problem.alpha, v) for v in xi])
    b = np.array([param_at(problem.beta, v) for v in xi])
    g = np.array([param_at(problem.gamma, v) for v in xi])
    return float(np.max(np.abs(d2 + a * d1 + b * u[1:-1] + g)))


def cross_quantity(sol: CaseASolution, points, tol: float = DEFAULT_QUAD_TOL) -> np.ndarray:
    """y D^(1/n) exp(alpha k x / 2) with D recomputed by adaptive Simpson."""
    if is_map(sol.k):
        raise InvalidProblem("the cross relation needs a constant k")
    points = np.asarray(points, dtype=float)
    n = sol.n
    D = sol.c3 + cumulative_quadrature(lambda t: signed_power(float(sol.inner(t)), n), sol.span[0], points, tol)
    root = real_root(D, n)
    if not np.all(np.isfinite(root)):
        raise DomainBreakdown("D^(1/n) has no real value on the sample points")
    y = np.array([float(sol(v)) for v in points])
    return y * root * np.exp(sol.alpha * float(sol.k) * points / 2.0)


def cross_relation(pair: tuple[CaseASolution, CaseASolution], points=None, tol: float = DEFAULT_QUAD_TOL) -> float:
    """Maximum relative difference of y D^(1/n) exp(alpha k x/2) between two linked solutions."""
    a, b = pair
    if points is None:
        lo = max(a.span[0], b.span[0])
        hi = min(a.span[1], b.span[1])
        points = np.linspace(lo, hi, 101)
    qa, qb = cross_quantity(a, points, tol), cross_quantity(b, points, tol)
    scale = np.maximum(np.abs(qa), np.abs(qb))
    rel = np.where(scale > 0, np.abs(qa - qb) / np.where(scale > 0, scale, 1.0), 0.0)
    return float(np.max(rel))
