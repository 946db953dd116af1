"""Nonlocal linearization.

With ``u = F(y) = int f(y) dy`` and ``s = int f(y(x)) dx`` the nonlinear
equation becomes ``u'' + alpha u' + beta u + gamma = 0`` in ``s``.  This
module maps problems and trajectories forward, and pulls linear solutions
back to parametric curves ``(x(s), y(s))`` with ``dx/ds = 1/f(y)``.

Conventions: both integration constants of the transformation are zero,
``s(x0) = 0`` and ``x(0) = x0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import cumulative_simpson

from .core import (
    DomainBreakdown,
    FamilyClass,
    FunctionFamily,
    Generic,
    InvalidProblem,
    OdeProblem,
    Param,
    PowerPlusConstant,
    Unit,
    as_function,
    classify,
    signed_power,
)
from .numeric import (
    DEFAULT_INTEGRATE_TOL,
    DEFAULT_QUAD_TOL,
    CumulativeIntegral,
    integrate,
    invert_monotone,
)


class Antiderivative:
    """F(y) = int f dy with zero integration constant, plus its inverse.

    Attributes:
        family: The integrand family.
        domain: Interval of y on which F is strictly increasing.
    """

    def __init__(self, family: FunctionFamily):
        self.family = family
        if isinstance(family, Unit):
            self.domain = (-math.inf, math.inf)
            self._integral = None
        elif isinstance(family, PowerPlusConstant):
            self.domain = family.domain
            self._integral = None
        elif isinstance(family, Generic):
            self.domain = family.domain
            if family.primitive is not None:
                self._integral = self._from_primitive
            else:
                lo, hi = family.domain
                width = hi - lo
                chunk = width / 16 if math.isfinite(width) else 1.0
                self._integral = CumulativeIntegral(
                    family.func, family.anchor, domain=family.domain, chunk=chunk, tol=DEFAULT_QUAD_TOL
                )
        else:
            raise InvalidProblem(f"unknown function family {family!r}")

    def f(self, y, x=None):
        return self.family(y, x)

    def _from_primitive(self, y):
        fam = self.family
        lo, hi = fam.domain
        if np.any(np.asarray(y) < lo) or np.any(np.asarray(y) > hi):
            raise DomainBreakdown(f"y outside integration domain {fam.domain}")
        return fam.primitive(y) - fam.primitive(fam.anchor)

    def __call__(self, y, x=None):
        fam = self.family
        if isinstance(fam, Unit):
            return y
        if isinstance(fam, Generic):
            return self._integral(y)
        b, n, k = fam.b, fam.n, fam.k_at(x)
        if n == -1:
            return b * np.log(y) + k * y
        m = n + 1.0
        return b * signed_power(y, m) / m + k * y

    def inverse(self, u, x=None):
        """y with F(y) = u inside the domain; accepts arrays."""
        if np.ndim(u):
            return np.array([self.inverse(v, x) for v in np.ravel(u)]).reshape(np.shape(u))
        fam = self.family
        u = float(u)
        if isinstance(fam, Unit):
            return u
        if isinstance(fam, PowerPlusConstant) and not fam.variable_k:
            b, n, k = fam.b, fam.n, float(fam.k)
            y = None
            if k == 0 and n == -1:
                y = math.exp(u / b)
            elif k == 0:
                m = n + 1.0
                base = m * u / b
                if base <= 0:
                    raise DomainBreakdown(f"F^-1({u:.17g}) leaves y > 0 for f = {b}*y**{n}")
                y = base ** (1.0 / m)
            elif n == 1:
                disc = k * k + 2 * b * u
                if disc < 0:
                    raise DomainBreakdown(f"F^-1({u:.17g}) has no real branch")
                r = math.sqrt(disc)
                y = 2 * u / (k + r) if k > 0 else (r - k) / b
            elif n == -1 and b == 0:
                y = u / k
            if y is not None:
                lo, hi = self.domain
                if not lo < y < hi:
                    raise DomainBreakdown(f"F^-1({u:.17g}) = {y:.17g} outside domain {self.domain}")
                return y
        return self._numeric_inverse(u, x)

    def _numeric_inverse(self, u, x=None):
        lo, hi = self.domain
        F = (lambda y: self(y, x))
        a, b = _bracket_for(F, u, lo, hi, getattr(self.family, "anchor", None))
        return invert_monotone(F, u, (a, b), tol=0.0, derivative=lambda y: self.f(y, x))


def _bracket_for(F, target, lo, hi, seed=None):
    """Finite sub-bracket of (lo, hi) whose image contains ``target``."""
    if math.isfinite(lo) and math.isfinite(hi):
        a, b = _inset(lo, hi)
    else:
        if seed is None or not lo < seed < hi:
            seed = 1.0 if lo < 1.0 < hi else (lo + 1.0 if math.isfinite(lo) else hi - 1.0)
        a = b = float(seed)
        step = 1.0
        a = _toward(a, lo, step)
        b = _toward(b, hi, step)
    for _ in range(400):
        fa, fb = F(a), F(b)
        if fa <= target <= fb:
            return a, b
        if target < fa:
            new = _toward(a, lo, max(1.0, 2 * abs(b - a)))
            if new == a:
                break
            a = new
        else:
            new = _toward(b, hi, max(1.0, 2 * abs(b - a)))
            if new == b:
                break
            b = new
    raise DomainBreakdown(f"target {target:.17g} outside the range of F on {(lo, hi)}")


def _inset(lo, hi):
    w = hi - lo
    return lo + 1e-15 * max(w, abs(lo)), hi - 1e-15 * max(w, abs(hi))


def _toward(v, edge, step):
    if math.isinf(edge):
        return v + math.copysign(step, edge)
    # halve the distance to an open finite edge
    return v + 0.5 * (edge - v) if abs(edge - v) > 1e-300 else v


def antiderivative(f: FunctionFamily) -> Antiderivative:
    """Antiderivative of ``f`` with the zero-constant convention."""
    return Antiderivative(f)


@dataclass(frozen=True)
class LinearProblem:
    """u'' + a u' + b u + g = 0, coefficients constant or maps of the new variable."""

    a: Param
    b: Param
    g: Param

    @property
    def is_constant(self) -> bool:
        return not (callable(self.a) or callable(self.b) or callable(self.g))


@dataclass(frozen=True)
class TransformTrace:
    """Record of the transformation used for one problem."""

    F: Antiderivative
    x0: float = 0.0
    y0: float | None = None
    c: float = 0.0
    c_bar: float = 0.0
    new_dependent: str = "u = int f(y) dy"
    new_independent: str = "s = int f(y(x)) dx, s(x0) = 0"

    @property
    def f(self):
        return self.F.family


def linearize(problem: OdeProblem, x0: float = 0.0, y0: float | None = None) -> tuple[LinearProblem, TransformTrace]:
    """Linear target equation and transformation record for ``problem``.

    Map-valued parameters carry over as the same maps, read as functions of
    the new independent variable.
    """
    cls = classify(problem)
    if cls is FamilyClass.SHEAR_FREE:
        raise InvalidProblem("the shear-free family uses its own transformation; see closed_forms.shear_free")
    if callable(problem.delta) or problem.delta != 0:
        raise InvalidProblem("a delta y term is outside the class this transformation linearizes")
    if isinstance(problem.f, PowerPlusConstant) and problem.f.variable_k:
        raise InvalidProblem("x-dependent k is handled by the power-family solver, not by linearization")
    lp = LinearProblem(a=problem.alpha, b=problem.beta, g=problem.gamma)
    return lp, TransformTrace(F=antiderivative(problem.f), x0=float(x0), y0=y0)


def forward_map(x, y, f: FunctionFamily, x0: float | None = None, y_of_x: Callable | None = None):
    """Transformed samples (s_i, u_i) of a trajectory y(x).

    ``u_i = F(y_i)``; ``s_i`` is the integral of f(y(x)) from ``x0``.  With
    ``y_of_x`` the integral uses adaptive quadrature of the trajectory;
    otherwise cumulative Simpson on the samples, in which case ``x0`` must
    be one of the sample points.

    Raises:
        ValueError: ``x`` is not strictly monotone.
        DomainBreakdown: f(y) <= 0 somewhere along the trajectory.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("x and y must be matching 1-d sample arrays")
    d = np.diff(x)
    if not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("trajectory samples must be strictly monotone in x")
    x0 = float(x[0]) if x0 is None else float(x0)
    F = antiderivative(f)
    fy = np.asarray(f(y), dtype=float) if not isinstance(f, Generic) else np.array([f(v) for v in y])
    if np.ndim(fy) == 0:
        fy = np.full_like(y, float(fy))
    if not np.all(np.isfinite(fy) & (fy > 0)):
        raise DomainBreakdown("f(y) must stay positive along the trajectory")
    ybar = np.array([float(F(v)) for v in y])
    if y_of_x is not None:
        s = CumulativeIntegral(lambda t: f(float(y_of_x(t))), x0)
        xbar = np.array([s(v) for v in x])
    else:
        idx = np.flatnonzero(np.isclose(x, x0, rtol=0, atol=1e-12 * max(1.0, abs(x0))))
        if idx.size == 0:
            raise ValueError("x0 must be one of the sample points when no trajectory function is given")
        cum = cumulative_simpson(fy, x=x, initial=0.0)
        xbar = cum - cum[idx[0]]
    return xbar, ybar


class ParametricCurve:
    """A solution given parametrically as (x(s), y(s)).

    Args:
        state: Map s -> (x, u, u', u'') where u is the transformed dependent
            variable; u'' is evaluated exactly from its linear equation.
        F: Antiderivative used to recover y = F^-1(u).
        xbar: Parameter samples; the curve's span.
        dxds: Optional map s -> dx/ds; defaults to 1/f(y(s)) through ``state``.
        poles: Optional x locations to keep out of.

    Derivatives with respect to x follow from the chain rule:
    dy/dx = u' and d2y/dx2 = u'' f(y).
    """

    def __init__(self, state: Callable, F: Antiderivative, xbar, poles=(), dxds: Callable | None = None):
        self._state = state
        self._dxds = dxds or (lambda s: 1.0 / float(F.f(F.inverse(state(s)[1]))))
        self.F = F
        self.xbar = np.asarray(xbar, dtype=float)
        self.poles = list(poles)
        rows = [self.at_parameter(s) for s in self.xbar]
        self.x = np.array([r[0] for r in rows])
        self.y = np.array([r[1] for r in rows])
        self._cache = {float(r[0]): r[1:] for r in rows}
        if not np.all(np.diff(self.x) > 0):
            raise DomainBreakdown("x(s) is not strictly increasing along the curve")

    @property
    def span(self) -> tuple[float, float]:
        return (float(self.x[0]), float(self.x[-1]))

    def at_parameter(self, s: float):
        """(x, y, dy/dx, d2y/dx2) at parameter value ``s``."""
        x, u, du, d2u = self._state(float(s))
        y = self.F.inverse(u)
        return x, y, du, d2u * float(self.F.f(y))

    def parameter_of(self, x: float) -> float:
        """Parameter value where the curve reaches ``x``."""
        x = float(x)
        lo, hi = self.span
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if not lo - slack <= x <= hi + slack:
            raise ValueError(f"x={x:.17g} outside curve span {self.span}")
        i = int(np.clip(np.searchsorted(self.x, x) - 1, 0, len(self.x) - 2))
        s_lo, s_hi = self.xbar[i], self.xbar[i + 1]
        if x <= self.x[i]:
            return float(s_lo)
        if x >= self.x[i + 1]:
            return float(s_hi)
        known = {float(s_lo): float(self.x[i]), float(s_hi): float(self.x[i + 1])}
        guess = s_lo + (s_hi - s_lo) * (x - self.x[i]) / (self.x[i + 1] - self.x[i])
        return invert_monotone(
            lambda s: known[s] if s in known else self._state(s)[0],
            x,
            (s_lo, s_hi),
            tol=0.0,
            derivative=self._dxds,
            guess=guess,
        )

    def derivatives(self, x):
        """(y, dy/dx, d2y/dx2) at ``x``."""
        if np.ndim(x):
            out = np.array([self.derivatives(float(v)) for v in np.ravel(x)])
            return out[:, 0], out[:, 1], out[:, 2]
        hit = self._cache.get(float(x))
        if hit is not None:
            return hit
        _, y, dy, d2y = self.at_parameter(self.parameter_of(x))
        return y, dy, d2y

    def __call__(self, x):
        return self.derivatives(x)[0]


def pullback(
    linear_solution,
    f: FunctionFamily,
    trace: TransformTrace | None,
    span: tuple[float, float],
    samples: int = 201,
    *,
    anchor: float = 0.0,
) -> ParametricCurve:
    """Parametric nonlinear solution from a solution u(s) of the linear equation.

    ``y = F^-1(u(s))`` and ``x = x0 + int_anchor^s ds / f(y)``.  ``anchor``
    is the parameter value where x equals ``trace.x0`` (zero by convention).

    Raises:
        DomainBreakdown: u(s) leaves the range of F on ``span``.
    """
    F = trace.F if trace is not None else antiderivative(f)
    x0 = trace.x0 if trace is not None else 0.0
    s0, s1 = float(span[0]), float(span[1])
    if not s0 < s1:
        raise ValueError("parameter span must be increasing")
    grid = np.linspace(s0, s1, samples)
    # fail early, before building the time map
    for s in grid:
        F.inverse(float(linear_solution(s)))

    def inv_f(s):
        if np.ndim(s):
            return 1.0 / np.asarray(F.f(F.inverse(linear_solution(s))), dtype=float)
        return 1.0 / float(F.f(F.inverse(float(linear_solution(s)))))

    time_map = CumulativeIntegral(inv_f, anchor, offset=x0, chunk=max(s1 - s0, 1e-3) / 8)

    def state(s):
        u, du, d2u = linear_solution.derivatives(s)
        return time_map(s), float(u), float(du), float(d2u)

    return ParametricCurve(state, F, grid, dxds=inv_f)


def solve_coupled(
    a: Param,
    b: Param,
    g: Param,
    f: FunctionFamily,
    u0: float,
    du0: float,
    x0: float,
    span: tuple[float, float],
    samples: int = 201,
    tol: float = DEFAULT_INTEGRATE_TOL,
) -> ParametricCurve:
    """Parametric solution when the coefficients depend on the original x.

    Integrates u'' = -a(x) u' - b(x) u - g(x) together with dx/ds = 1/f(y)
    from s = 0, where u = u0, u' = du0 and x = x0.  With constant coefficients
    this coincides with the closed-form pullback.
    """
    F = antiderivative(f)
    af, bf, gf = as_function(a), as_function(b), as_function(g)

    def rhs(s, state):
        u, du, x = state
        y = F.inverse(u)
        return np.array([du, -af(x) * du - bf(x) * u - gf(x), 1.0 / float(f(y))])

    s0, s1 = float(span[0]), float(span[1])
    pieces = []
    if s1 > 0:
        pieces.append(integrate(rhs, [u0, du0, x0], (0.0, s1), tol))
    if s0 < 0:
        pieces.append(integrate(rhs, [u0, du0, x0], (0.0, s0), tol))

    def state(s):
        dense = pieces[0] if (s >= 0 or len(pieces) == 1) and pieces[0].span[1] >= s else pieces[-1]
        u, du, x = dense.precise(s)
        return x, u, du, -af(x) * du - bf(x) * u - gf(x)

    return ParametricCurve(state, F, np.linspace(s0, s1, samples))
