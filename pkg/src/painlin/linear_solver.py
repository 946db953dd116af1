"""Solvers for the linear target equation  u'' + a u' + b u + g = 0."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BETA_RTOL, PainlinError, Param, Regime, as_function, close
from .numeric import DEFAULT_INTEGRATE_TOL, CumulativeIntegral, integrate


class UndampedBoundary(PainlinError, ValueError):
    """alpha = 0: the undamped boundary between decaying and growing regimes."""


def classify_damping(alpha: float, beta: float) -> Regime:
    """Damping regime of u'' + alpha u' + beta u = 0 from the signs of alpha and alpha^2/4 - beta."""
    if alpha == 0:
        raise UndampedBoundary("alpha = 0 is the undamped boundary; no damping regime applies")
    if alpha < 0:
        return Regime.GROWING
    critical = alpha * alpha / 4.0
    if close(beta, critical, BETA_RTOL):
        return Regime.CRITICALLY_DAMPED
    return Regime.STRONG_DAMPED if beta < critical else Regime.WEAK_DAMPED


@dataclass(frozen=True)
class _ConstantCoefficients:
    alpha: float
    beta: float
    gamma: float

    def particular(self, x):
        """Particular solution and its first two derivatives."""
        a, b, g = self.alpha, self.beta, self.gamma
        x = np.asarray(x, dtype=float)
        zero = np.zeros_like(x)
        if b != 0:
            return zero - g / b, zero, zero
        if a != 0:
            return -g * x / a, zero - g / a, zero
        return -0.5 * g * x * x, -g * x, zero - g

    def derivatives(self, x):
        """(u, u', u'') at x."""
        x = np.asarray(x, dtype=float)
        (p0, p1, p2), (h0, h1, h2) = self.particular(x), self.homogeneous(x)
        return h0 + p0, h1 + p1, h2 + p2

    def __call__(self, x):
        return self.derivatives(x)[0]

    def residual(self, x):
        u, du, d2u = self.derivatives(x)
        return d2u + self.alpha * du + self.beta * u + self.gamma


@dataclass(frozen=True)
class DistinctReal(_ConstantCoefficients):
    """c1 exp(l1 x) + c2 exp(l2 x) + particular."""

    lam1: float
    lam2: float
    c1: float
    c2: float

    def homogeneous(self, x):
        e1, e2 = self.c1 * np.exp(self.lam1 * x), self.c2 * np.exp(self.lam2 * x)
        return (
            e1 + e2,
            self.lam1 * e1 + self.lam2 * e2,
            self.lam1**2 * e1 + self.lam2**2 * e2,
        )


@dataclass(frozen=True)
class DoubleRoot(_ConstantCoefficients):
    """(c1 + c2 x) exp(lam x) + particular."""

    lam: float
    c1: float
    c2: float

    def homogeneous(self, x):
        lam = self.lam
        e = np.exp(lam * x)
        p = self.c1 + self.c2 * x
        return (
            p * e,
            (self.c2 + lam * p) * e,
            (2 * lam * self.c2 + lam * lam * p) * e,
        )


@dataclass(frozen=True)
class ComplexPair(_ConstantCoefficients):
    """exp(sigma x) (c1 cos(omega x) + c2 sin(omega x)) + particular."""

    sigma: float
    omega: float
    c1: float
    c2: float

    def homogeneous(self, x):
        s, w = self.sigma, self.omega
        e = np.exp(s * x)
        cs, sn = np.cos(w * x), np.sin(w * x)
        p = self.c1 * cs + self.c2 * sn
        q = -self.c1 * sn + self.c2 * cs  # d/d(wx) of p
        return (
            e * p,
            e * (s * p + w * q),
            e * ((s * s - w * w) * p + 2 * s * w * q),
        )


LinearClosedForm = DistinctReal | DoubleRoot | ComplexPair


def solve_constant(
    alpha: float,
    beta: float,
    gamma: float,
    c1: float,
    c2: float,
    *,
    literal_double_root: bool = False,
) -> LinearClosedForm:
    """General solution of u'' + alpha u' + beta u + gamma = 0.

    The variant follows the sign of alpha^2/4 - beta.  At the double root
    the exponent is -alpha/2; ``literal_double_root`` reproduces the literal
    exp(-x/2) form instead, which only solves the equation at alpha = 1.
    """
    alpha, beta, gamma = float(alpha), float(beta), float(gamma)
    disc = alpha * alpha / 4.0 - beta
    base = dict(alpha=alpha, beta=beta, gamma=gamma, c1=float(c1), c2=float(c2))
    if close(beta, alpha * alpha / 4.0, BETA_RTOL):
        lam = -0.5 if literal_double_root else -alpha / 2.0
        return DoubleRoot(lam=lam, **base)
    if disc > 0:
        r = math.sqrt(disc)
        return DistinctReal(lam1=-alpha / 2.0 + r, lam2=-alpha / 2.0 - r, **base)
    return ComplexPair(sigma=-alpha / 2.0, omega=math.sqrt(-disc), **base)


def solve_constant_ivp(alpha: float, beta: float, gamma: float, u0: float, du0: float, x0: float = 0.0) -> LinearClosedForm:
    """Closed form with u(x0) = u0, u'(x0) = du0."""
    probe1 = solve_constant(alpha, beta, 0.0, 1.0, 0.0)
    probe2 = solve_constant(alpha, beta, 0.0, 0.0, 1.0)
    h1, dh1, _ = probe1.homogeneous(x0)
    h2, dh2, _ = probe2.homogeneous(x0)
    p0, dp0, _ = solve_constant(alpha, beta, gamma, 0.0, 0.0).particular(x0)
    m = np.array([[h1, h2], [dh1, dh2]], dtype=float)
    c1, c2 = np.linalg.solve(m, [u0 - float(p0), du0 - float(dp0)])
    return solve_constant(alpha, beta, gamma, c1, c2)


class LinearDenseSolution:
    """Numeric solution of u'' + a(x) u' + b(x) u + g(x) = 0 with derivative queries."""

    def __init__(self, a, b, g, dense):
        self.a, self.b, self.g = a, b, g
        self.dense = dense

    @property
    def span(self):
        return self.dense.span

    def derivatives(self, x):
        if np.ndim(x):
            out = np.array([self.derivatives(float(v)) for v in np.ravel(x)])
            return out[:, 0], out[:, 1], out[:, 2]
        u, du = self.dense.precise(float(x))
        return u, du, -self.a(x) * du - self.b(x) * u - self.g(x)

    def __call__(self, x):
        return self.derivatives(x)[0]


class DoubleQuadratureSolution:
    """u'' = -g(x) solved by two cumulative quadratures (a = b = 0)."""

    def __init__(self, g, u0: float, du0: float, x0: float, tol: float):
        self.g = g
        self.x0 = x0
        self._du = CumulativeIntegral(lambda s: -g(s), x0, offset=du0, tol=tol)
        self._u = CumulativeIntegral(self._du, x0, offset=u0, tol=tol)

    def derivatives(self, x):
        if np.ndim(x):
            out = np.array([self.derivatives(float(v)) for v in np.ravel(x)])
            return out[:, 0], out[:, 1], out[:, 2]
        return self._u(x), self._du(x), -self.g(x)

    def __call__(self, x):
        return self.derivatives(x)[0]


def solve_variable(
    a: Param,
    b: Param,
    g: Param,
    u0: float,
    du0: float,
    span: tuple[float, float],
    tol: float = DEFAULT_INTEGRATE_TOL,
):
    """Solve u'' + a(x) u' + b(x) u + g(x) = 0 from u(span[0]) = u0, u'(span[0]) = du0.

    When a and b are identically zero the solution is a pure double
    quadrature of -g.  Otherwise the system is integrated with adaptive
    Runge-Kutta; the returned object answers value and derivative queries
    anywhere in ``span``.

    Raises:
        IntegrationError: when the step size underflows, with its location.
    """
    x0 = float(span[0])
    if not callable(a) and not callable(b) and a == 0 and b == 0:
        return DoubleQuadratureSolution(as_function(g), float(u0), float(du0), x0, min(tol, 1e-12))
    af, bf, gf = as_function(a), as_function(b), as_function(g)

    def rhs(x, s):
        return np.array([s[1], -af(x) * s[1] - bf(x) * s[0] - gf(x)])

    dense = integrate(rhs, [u0, du0], span, tol)
    return LinearDenseSolution(af, bf, gf, dense)
