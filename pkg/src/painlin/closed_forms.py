"""Explicit solution families of the nonlinear equation.

* Painleve-Ince: ``f = y`` with ``beta = 2 alpha^2 / 9``; ``y = (3/alpha) w'/w``
  with ``w''' + gamma w' = 0``.
* Power families ``f = b y^n + k`` with ``beta = alpha^2 (n+1)/(n+2)^2``:
  ``y^n = K yh^n / (c3 + int yh^n dx)`` where ``K = (n+2)/(alpha b n)`` and
  ``yh`` solves a linear second order equation.  Adding ``delta y`` to the
  equation shifts the inner coefficient by ``delta``; ``k`` and ``delta`` may
  depend on x.
* Shear-free fluid ``y'' = F(x) y^2`` through ``u = y^3/9``, ``s = int y^2/3 dx``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    DomainBreakdown,
    InvalidProblem,
    OdeProblem,
    Param,
    PoleError,
    PowerPlusConstant,
    as_function,
    classify,
    FamilyClass,
    is_map,
    real_root,
    power_beta,
)
from .linear_solver import solve_constant, solve_constant_ivp, solve_variable
from .linearize import (
    ParametricCurve,
    TransformTrace,
    antiderivative,
    linearize,
    pullback,
    solve_coupled,
)
from .numeric import (
    DEFAULT_INTEGRATE_TOL,
    DEFAULT_QUAD_TOL,
    CumulativeIntegral,
    integrate,
    sign_change_roots,
)

POLE_GUARD = 1e-6


def _poles_of(g, span, samples=2001, scan=None):
    a, b = float(span[0]), float(span[1])
    return sign_change_roots(g, a, b, samples=samples, scan=scan) if b > a else []


@dataclass(frozen=True)
class PainleveInceSolution:
    """y = (3/alpha) w'/w for y'' + alpha y y' + (alpha^2/9) y^3 + gamma y = 0.

    Generator by sign of gamma (mu = sqrt|gamma|):

    * gamma = 0: ``w = c1 x^2 + c2 x + c3``
    * gamma > 0: ``w = c1 sin(mu x) + c2 cos(mu x) + c3``
    * gamma < 0: ``w = c1 exp(mu x) + c2 exp(-mu x) + c3``

    With ``literal=True`` and gamma > 0 the generator is
    ``c1 exp(mu x) - c2 exp(-mu x) + c3``, which solves the equation with
    the sign of gamma reversed.  It is kept to document that discrepancy.
    """

    alpha: float
    gamma: float
    c1: float
    c2: float
    c3: float
    literal: bool = False

    def __post_init__(self):
        if self.alpha == 0:
            raise InvalidProblem("alpha must be nonzero")
        if self.literal and not self.gamma > 0:
            raise InvalidProblem("the literal exponential generator is defined for gamma > 0 only")

    @classmethod
    def from_initial(cls, alpha: float, gamma: float, x0: float, y0: float, ydot0: float) -> "PainleveInceSolution":
        """Constants with y(x0) = y0, y'(x0) = ydot0, normalized so w(x0) = 1."""
        w1 = alpha * y0 / 3.0
        w2 = alpha * ydot0 / 3.0 + w1 * w1
        if gamma == 0:
            c1 = w2 / 2.0
            c2 = w1 - w2 * x0
            c3 = 1.0 - w1 * x0 + 0.5 * w2 * x0 * x0
        elif gamma > 0:
            om = math.sqrt(gamma)
            s, c = math.sin(om * x0), math.cos(om * x0)
            c1 = -w2 / om**2 * s + w1 / om * c
            c2 = -w2 / om**2 * c - w1 / om * s
            c3 = 1.0 + w2 / om**2
        else:
            mu = math.sqrt(-gamma)
            c1 = 0.5 * (w2 / mu**2 + w1 / mu) * math.exp(-mu * x0)
            c2 = 0.5 * (w2 / mu**2 - w1 / mu) * math.exp(mu * x0)
            c3 = 1.0 - w2 / mu**2
        return cls(float(alpha), float(gamma), c1, c2, c3)

    def problem(self) -> OdeProblem:
        a = self.alpha
        return OdeProblem(PowerPlusConstant(1.0, 1.0, 0.0), a, 2.0 * a * a / 9.0, self.gamma)

    def generator(self, x):
        """(w, w', w'', w''') at x."""
        x = np.asarray(x, dtype=float)
        c1, c2, c3, g = self.c1, self.c2, self.c3, self.gamma
        if self.literal:
            m = math.sqrt(g)
            ep, em = c1 * np.exp(m * x), -c2 * np.exp(-m * x)
            return ep + em + c3, m * (ep - em), m * m * (ep + em), m**3 * (ep - em)
        if g == 0:
            zero = np.zeros_like(x)
            return c1 * x * x + c2 * x + c3, 2 * c1 * x + c2, zero + 2 * c1, zero
        if g > 0:
            m = math.sqrt(g)
            s, c = np.sin(m * x), np.cos(m * x)
            p = c1 * s + c2 * c
            q = c1 * c - c2 * s
            return p + c3, m * q, -m * m * p, -(m**3) * q
        m = math.sqrt(-g)
        ep, em = c1 * np.exp(m * x), c2 * np.exp(-m * x)
        return ep + em + c3, m * (ep - em), m * m * (ep + em), m**3 * (ep - em)

    def derivatives(self, x):
        """(y, y', y'') at x."""
        w, w1, w2, w3 = self.generator(x)
        s = 3.0 / self.alpha
        r = w1 / w
        if self.gamma == 0 and not self.literal:
            x = np.asarray(x, dtype=float)
            c1, c2, c3 = self.c1, self.c2, self.c3
            # written exactly as the quadratic-generator formula
            y = 3 / self.alpha * (2 * c1 * x + c2) / (c1 * x**2 + c2 * x + c3)
        else:
            y = s * r
        dy = s * (w2 / w - r * r)
        d2y = s * (w3 / w - 3 * r * w2 / w + 2 * r**3)
        return y, dy, d2y

    def __call__(self, x):
        return self.derivatives(x)[0]

    def residual_identity(self, x):
        """Exact residual (3/alpha)(w''' + gamma w')/w."""
        w, w1, _, w3 = self.generator(x)
        return 3.0 / self.alpha * (w3 + self.gamma * w1) / w

    def poles(self, span) -> list[float]:
        """Zeros of w in ``span``."""
        return _poles_of(lambda t: float(self.generator(t)[0]), span)


def painleve_ince(alpha: float, gamma: float, c1: float, c2: float, c3: float, *, literal: bool = False) -> PainleveInceSolution:
    """General solution of y'' + alpha y y' + (alpha^2/9) y^3 + gamma y = 0."""
    return PainleveInceSolution(float(alpha), float(gamma), float(c1), float(c2), float(c3), literal)


class _Scaled:
    """Constant multiple of an inner linear solution."""

    def __init__(self, inner, scale: float):
        self.inner, self.scale = inner, scale

    def derivatives(self, x):
        u, du, d2u = self.inner.derivatives(x)
        return self.scale * u, self.scale * du, self.scale * d2u

    def __call__(self, x):
        return self.derivatives(x)[0]


class CaseASolution:
    """Power-family solution built from an inner linear solution.

    ``y = (K/D)^(1/n) yh`` with ``K = (n+2)/(alpha b n)`` and
    ``D(x) = c3 + int_{x_a}^x yh^n``, where ``x_a`` is the start of ``span``.
    Only the positive real branch is used for even or fractional n.

    Args:
        b, n, k, alpha, delta: Equation parameters; ``k`` and ``delta`` may be maps.
        inner: Object with ``derivatives(x) -> (yh, yh', yh'')``.
        c3: Additive constant of the quadrature.
        span: Interval the solution is meant for; its start anchors D.
    """

    def __init__(self, b, n, k, alpha, delta, inner, c3, span, tol=DEFAULT_QUAD_TOL):
        _check_power(b, n, alpha)
        self.b, self.n, self.k, self.alpha, self.delta = float(b), float(n), k, float(alpha), delta
        self.inner = inner
        self.c3 = float(c3)
        self.span = (float(span[0]), float(span[1]))
        self.K = (self.n + 2.0) / (self.alpha * self.b * self.n)
        self._even = self.n == round(self.n) and int(round(self.n)) % 2 == 0
        self._integer = self.n == round(self.n)
        if hasattr(inner, "integral"):
            self.D = lambda x: self.c3 + inner.integral(x)
        else:
            self.D = CumulativeIntegral(self._power, self.span[0], offset=self.c3, tol=tol,
                                        chunk=max(self.span[1] - self.span[0], 1e-3) / 8)

    def _power(self, x):
        u = float(self.inner(x))
        if self._integer:
            return u ** int(round(self.n))
        if u <= 0:
            raise DomainBreakdown(f"inner solution {u:.6g} <= 0 at x={x:.17g} with fractional n")
        return u**self.n

    def problem(self) -> OdeProblem:
        n, a, b = self.n, self.alpha, self.b
        f = PowerPlusConstant(b, n, self.k)
        if n == -1:
            return OdeProblem(f, a, 0.0, a * a * b, self.delta)
        return OdeProblem(f, a, power_beta(a, n), 0.0, self.delta)

    def derivatives(self, x):
        """(y, y', y'') at x."""
        if np.ndim(x):
            out = np.array([self.derivatives(float(v)) for v in np.ravel(x)])
            return out[:, 0], out[:, 1], out[:, 2]
        n = self.n
        u, du, d2u = (float(v) for v in self.inner.derivatives(x))
        D = self.D(x)
        if D == 0:
            raise PoleError(f"quadrature denominator vanishes at x={x:.17g}")
        Q = real_root(self.K / D, n)
        if not math.isfinite(Q):
            raise DomainBreakdown(f"(K/D)^(1/n) has no real positive branch at x={x:.17g}")
        sigma = 1.0
        if self._even and u < 0:
            sigma = -1.0
        if self._integer:
            P = u ** int(round(n)) / D
        else:
            if u <= 0:
                raise DomainBreakdown(f"inner solution {u:.6g} <= 0 at x={x:.17g} with fractional n")
            P = u**n / D
        y = sigma * Q * u
        dy = sigma * Q * (du - P * u / n)
        d2y = sigma * Q * (d2u - (2.0 / n + 1.0) * P * du + P * P * u * (1.0 / n + 1.0 / (n * n)))
        return y, dy, d2y

    def __call__(self, x):
        return self.derivatives(x)[0]

    def poles(self, span=None) -> list[float]:
        """Zeros of D in ``span``."""
        lo, hi = self.span
        if span is not None:
            lo, hi = max(lo, span[0]), min(hi, span[1])
        scan = getattr(self.inner, "scan_integral", None)
        return _poles_of(self.D, (lo, hi), samples=401,
                         scan=(lambda xs: self.c3 + scan(xs)) if scan is not None else None)


def _inner_constant(n, k, alpha, delta):
    """(a, b) of the inner equation yh'' + a yh' + b yh = 0."""
    return alpha * k, alpha * alpha * k * k * (n + 1.0) / (n + 2.0) ** 2 + delta


def case_a(b, n, k, alpha, c1, c2, c3, span) -> CaseASolution:
    """Power family with beta = alpha^2 (n+1)/(n+2)^2 (beta = 0, gamma = alpha^2 b at n = -1).

    ``c1, c2`` are the constants of the inner closed form and ``c3`` the
    quadrature constant.
    """
    return case_b(b, n, k, alpha, 0.0, c1, c2, c3, span)


def _check_power(b, n, alpha):
    if alpha == 0 or b == 0:
        raise InvalidProblem("alpha and b must be nonzero")
    if n == 0 or n == -2:
        raise InvalidProblem("n = 0 and n = -2 are excluded")


def case_b(b, n, k, alpha, delta, c1, c2, c3, span) -> CaseASolution:
    """Power family with an added ``delta y`` term; delta = 0 is ``case_a``."""
    _check_power(b, n, alpha)
    ia, ib = _inner_constant(float(n), float(k), float(alpha), float(delta))
    inner = solve_constant(ia, ib, 0.0, c1, c2)
    return CaseASolution(b, n, float(k), alpha, float(delta), inner, c3, span)


class _InnerWithIntegral:
    """Inner solution integrated together with J = int_{x_a}^x yh^n.

    Carrying the quadrature as a third state keeps D' = yh^n consistent to
    the integrator's precision and avoids re-integrating yh at every query.
    """

    def __init__(self, a, b, power, ics, span, tol):
        self.a, self.b = a, b

        def rhs(x, s):
            return np.array([s[1], -a(x) * s[1] - b(x) * s[0], power(s[0], x)])

        self.dense = integrate(rhs, [ics[0], ics[1], 0.0], span, tol)
        self._last = (None, None)

    def _state(self, x):
        x = float(x)
        if self._last[0] != x:
            self._last = (x, self.dense.precise(x))
        return self._last[1]

    def derivatives(self, x):
        if np.ndim(x):
            out = np.array([self.derivatives(float(v)) for v in np.ravel(x)])
            return out[:, 0], out[:, 1], out[:, 2]
        u, du, _ = self._state(x)
        return u, du, -self.a(x) * du - self.b(x) * u

    def __call__(self, x):
        return self.derivatives(x)[0]

    def integral(self, x):
        return float(self._state(x)[2])

    def scan_integral(self, xs):
        """Approximate J from the dense interpolant; used only to locate sign changes."""
        return self.dense(np.asarray(xs, dtype=float))[:, 2]


def case_c(b, n, alpha, k: Param, delta: Param, ics, c3, span, tol=DEFAULT_INTEGRATE_TOL) -> CaseASolution:
    """Power family with ``k`` and ``delta`` given as maps of x.

    The inner equation ``yh'' + alpha k(x) yh' + [alpha^2 k(x)^2 (n+1)/(n+2)^2
    + delta(x)] yh = 0`` is integrated from ``span[0]`` with
    ``(yh, yh') = ics``.
    """
    _check_power(b, n, alpha)
    n, alpha = float(n), float(alpha)
    kf, df = as_function(k), as_function(delta)
    a = lambda x: alpha * kf(x)
    bb = lambda x: alpha * alpha * kf(x) ** 2 * (n + 1.0) / (n + 2.0) ** 2 + df(x)
    integer = n == round(n)

    def power(u, x):
        if integer:
            return u ** int(round(n))
        if u <= 0:
            raise DomainBreakdown(f"inner solution {u:.6g} <= 0 at x={x:.17g} with fractional n")
        return u**n

    inner = _InnerWithIntegral(a, bb, power, ics, span, tol)
    return CaseASolution(b, n, k, alpha, delta, inner, c3, span)


def power_from_initial(problem: OdeProblem, x0, y0, ydot0, span, tol=DEFAULT_INTEGRATE_TOL) -> CaseASolution:
    """Power-family solution through (x0, y0, ydot0), valid on ``span`` starting at x0.

    The free quadrature constant is taken as c3 = sign(K), so D(x0) = +-1.
    """
    f = problem.f
    b, n, alpha = f.b, f.n, float(problem.alpha)
    if y0 == 0:
        raise DomainBreakdown("y0 = 0 is not reachable by the power-family representation")
    span = (float(x0), float(span[1]))
    K = (n + 2.0) / (alpha * b * n)
    c3 = math.copysign(1.0, K)
    Q = real_root(K / c3, n)
    integer = n == round(n)
    even = integer and int(round(n)) % 2 == 0
    if (not integer or even) and y0 < 0:
        raise DomainBreakdown("negative y0 lies off the positive branch")
    u0 = y0 / Q
    P = (u0 ** int(round(n)) if integer else u0**n) / c3
    du0 = ydot0 / Q + P * u0 / n
    if is_map(f.k) or is_map(problem.delta):
        return case_c(b, n, alpha, f.k, problem.delta, (u0, du0), c3, span, tol)
    ia, ib = _inner_constant(n, float(f.k), alpha, float(problem.delta))
    inner = solve_constant_ivp(ia, ib, 0.0, u0, du0, span[0])
    return CaseASolution(b, n, float(f.k), alpha, float(problem.delta), inner, c3, span)


def dual_partner(sol: CaseASolution, b_bar: float, c3_bar: float) -> CaseASolution:
    """Partner solution with exponent -n/(n+1) and the same alpha, k.

    Both exponents share the inner equation.  The partner's inner solution
    is rescaled so that ``y D^(1/n) exp(alpha k x / 2)`` coincides on both
    sides.
    """
    if is_map(sol.k) or is_map(sol.delta):
        raise InvalidProblem("dual partners are defined for constant k and delta")
    if sol.n == -1:
        raise InvalidProblem("n = -1 has no dual exponent")
    n_bar = -sol.n / (sol.n + 1.0)
    K_bar = (n_bar + 2.0) / (sol.alpha * b_bar * n_bar)
    scale = real_root(sol.K, sol.n) / real_root(K_bar, n_bar)
    if not math.isfinite(scale):
        raise DomainBreakdown("no real scaling links the pair; adjust the sign of b_bar")
    return CaseASolution(b_bar, n_bar, sol.k, sol.alpha, sol.delta, _Scaled(sol.inner, scale), c3_bar, sol.span)


def shear_free(F, c1: float, c2: float, x_offset: float, span, *, literal: bool = False,
               samples: int = 201, tol: float = DEFAULT_INTEGRATE_TOL) -> ParametricCurve:
    """Parametric solution of y'' = F(x) y^2.

    With ``u = y^3/9`` and ``s = int y^2/3 dx`` the equation becomes
    ``u'' = 3F``, so ``u = c1 s + c2 + (double quadrature of 3F from s = 0)``
    and ``y = (9u)^(1/3)``.

    Args:
        F: Forcing map (or constant).
        c1, c2: u'(0) and u(0).
        x_offset: Value of x at s = 0, or at ``span[0]`` when ``literal``.
        span: Parameter interval to sample.
        literal: Evaluate F at the parameter s itself instead of at x(s).
            This is exact only for constant F, and it allows spans that
            start where u = 0.

    Raises:
        DomainBreakdown: u <= 0 inside the span.
    """
    Ff = as_function(F)
    f_tilde = PowerPlusConstant(1.0 / 3.0, 2.0, 0.0)
    if literal or not is_map(F):
        linear = solve_variable(0.0, 0.0, lambda s: -3.0 * Ff(s), c2, c1, (0.0, span[1]), tol)
        trace = TransformTrace(F=antiderivative(f_tilde), x0=float(x_offset))
        anchor = float(span[0]) if literal else 0.0
        return pullback(linear, f_tilde, trace, span, samples, anchor=anchor)
    return solve_coupled(0.0, 0.0, lambda x: -3.0 * Ff(x), f_tilde, c2, c1, x_offset, span, samples, tol)


def shear_free_problem(F) -> OdeProblem:
    """y'' = F(x) y^2 as a member of the class: f = y^(1/2), beta = -3F/2."""
    Ff = as_function(F)
    return OdeProblem(PowerPlusConstant(1.0, 0.5, 0.0), 0.0, lambda x: -1.5 * Ff(x), 0.0)


def _parameter_extent(curve_for, s_guess, x_target):
    """Shortest tried curve reaching ``x_target``, growing or bisecting the parameter span."""
    s, s_ok, s_bad = s_guess, 0.0, None
    for _ in range(80):
        try:
            curve = curve_for(s)
        except DomainBreakdown:
            s_bad = s
            s = 0.5 * (s_ok + s)
            continue
        if curve.span[1] >= x_target:
            return curve
        s_ok = s
        s = 2.0 * s if s_bad is None else 0.5 * (s + s_bad)
    raise DomainBreakdown(f"the parametric solution does not reach x={x_target:.17g}")


def solve_initial(problem: OdeProblem, x0: float, y0: float, ydot0: float, x_end: float,
                  tol: float = DEFAULT_INTEGRATE_TOL):
    """Solution through (x0, y0, ydot0) on [x0, x_end], routed by family class.

    Painleve-Ince and power families use their closed forms.  Everything
    else is linearized and pulled back; when the coefficients depend on x
    the linear equation is integrated together with the time map.
    """
    if not x_end > x0:
        raise InvalidProblem("x_end must exceed x0")
    cls = classify(problem)
    if cls is FamilyClass.PAINLEVE_INCE:
        return painleve_ince_from(problem, x0, y0, ydot0)
    if cls in (FamilyClass.CASE_A, FamilyClass.CASE_B, FamilyClass.CASE_C):
        return power_from_initial(problem, x0, y0, ydot0, (x0, x_end), tol)
    if cls is FamilyClass.SHEAR_FREE:
        raise InvalidProblem("shear-free problems take (c1, c2) constants; use shear_free")
    lp, trace = linearize(problem, x0=x0, y0=y0)
    u0 = float(trace.F(y0))
    fy0 = float(problem.f(y0))
    s_guess = max((x_end - x0) * fy0, 1e-3)
    if lp.is_constant:
        linear = solve_constant_ivp(lp.a, lp.b, lp.g, u0, ydot0, 0.0)
        return _parameter_extent(lambda s: pullback(linear, problem.f, trace, (0.0, s)), s_guess, x_end)
    return _parameter_extent(
        lambda s: solve_coupled(lp.a, lp.b, lp.g, problem.f, u0, ydot0, x0, (0.0, s), tol=tol), s_guess, x_end
    )


def painleve_ince_from(problem: OdeProblem, x0, y0, ydot0) -> PainleveInceSolution:
    return PainleveInceSolution.from_initial(float(problem.alpha), float(problem.gamma), x0, y0, ydot0)
