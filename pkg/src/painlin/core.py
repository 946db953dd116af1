"""Problem types and family classification.

An :class:`OdeProblem` describes one instance of

    y'' + alpha f(y) y' + beta f(y) F(y) + gamma f(y) + delta y = 0,

with ``F`` the antiderivative of ``f`` (integration constant zero).  The
``delta`` term is only used by the power-law families with a shifted inner
equation.  :func:`classify` assigns the family that decides which solution
pathway is used.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

Param = Union[float, Callable[[float], float]]

BETA_RTOL = 1e-12


class PainlinError(Exception):
    """Base class for engine errors."""


class InvalidProblem(PainlinError, ValueError):
    """Problem fields violate a type invariant."""


class DomainBreakdown(PainlinError, ArithmeticError):
    """A transformation or closed form left its domain of validity."""


class PoleError(DomainBreakdown):
    """Evaluation requested inside the guard band of a pole."""


class IntegrationError(PainlinError, RuntimeError):
    """Numerical integration failed.

    Attributes:
        location: Independent-variable value where the failure happened.
    """

    def __init__(self, message: str, location: float | None = None):
        super().__init__(message if location is None else f"{message} (at x={location:.17g})")
        self.location = location


def is_map(p) -> bool:
    return callable(p)


def param_at(p: Param, x: float) -> float:
    """Evaluate a constant-or-map parameter at ``x``."""
    return float(p(x)) if callable(p) else float(p)


def as_function(p: Param) -> Callable[[float], float]:
    if callable(p):
        return p
    value = float(p)
    return lambda x: value


# -- function families ---------------------------------------------------------


@dataclass(frozen=True)
class Unit:
    """f(y) = 1."""

    def __call__(self, y, x=None):
        return np.ones_like(y, dtype=float) if np.ndim(y) else 1.0

    def derivative(self, y, x=None):
        return np.zeros_like(y, dtype=float) if np.ndim(y) else 0.0

    @property
    def domain(self) -> tuple[float, float]:
        return (-math.inf, math.inf)


@dataclass(frozen=True)
class PowerPlusConstant:
    """f(y) = b y**n + k.

    ``k`` may be a map of the independent variable (the x-dependent family);
    such families are evaluated with an explicit ``x``.  Non-integer ``n``
    restricts the working domain to y > 0.
    """

    b: float
    n: float
    k: Param = 0.0

    def __post_init__(self):
        if self.b == 0 and not callable(self.k) and self.k == 0:
            raise InvalidProblem("power family needs b != 0 or k != 0")
        if not math.isfinite(self.b) or not math.isfinite(self.n):
            raise InvalidProblem("power family coefficients must be finite")

    @property
    def variable_k(self) -> bool:
        return callable(self.k)

    def k_at(self, x: float | None) -> float:
        if callable(self.k):
            if x is None:
                raise InvalidProblem("k is a map of x; an x value is required")
            return float(self.k(x))
        return float(self.k)

    @property
    def is_constant_function(self) -> bool:
        return self.b == 0 or self.n == 0

    def __call__(self, y, x=None):
        return self.b * signed_power(y, self.n) + self.k_at(x)

    def derivative(self, y, x=None):
        if self.n == 0:
            return np.zeros_like(y, dtype=float) if np.ndim(y) else 0.0
        return self.b * self.n * signed_power(y, self.n - 1)

    @property
    def domain(self) -> tuple[float, float]:
        """Largest interval on y > 0 where f stays strictly positive.

        Only defined for constant ``k``.
        """
        if callable(self.k):
            return (0.0, math.inf)
        b, n, k = self.b, self.n, float(self.k)
        if b == 0 or n == 0:
            if b + k > 0 or (b == 0 and k > 0):
                return (0.0, math.inf)
            raise DomainBreakdown(f"f = {b}*y**{n} + {k} is not positive on y > 0")
        # f > 0  <=>  b t + k > 0 with t = y**n in (0, inf)
        if b > 0:
            if k >= 0:
                return (0.0, math.inf)
            t_edge = -k / b
            y_edge = t_edge ** (1.0 / n)
            return (y_edge, math.inf) if n > 0 else (0.0, y_edge)
        if k <= 0:
            raise DomainBreakdown(f"f = {b}*y**{n} + {k} is not positive on y > 0")
        t_edge = -k / b
        y_edge = t_edge ** (1.0 / n)
        return (0.0, y_edge) if n > 0 else (y_edge, math.inf)


@dataclass(frozen=True, eq=False)
class Generic:
    """Arbitrary evaluable f, strictly positive on ``domain``.

    Args:
        func: Vectorizable map y -> f(y).
        domain: Open interval on which f is continuous and positive.
        anchor: Point where the antiderivative vanishes. Defaults to the
            finite lower end of the domain, else the upper end, else 0.
        dfunc: Optional derivative of ``func``.
        primitive: Optional exact antiderivative of ``func`` (any additive
            constant).  When given it replaces adaptive quadrature.
    """

    func: Callable
    domain: tuple[float, float]
    anchor: float | None = None
    dfunc: Callable | None = None
    primitive: Callable | None = None

    def __post_init__(self):
        lo, hi = self.domain
        if not lo < hi:
            raise InvalidProblem(f"empty domain {self.domain}")
        if self.anchor is None:
            anchor = lo if math.isfinite(lo) else (hi if math.isfinite(hi) else 0.0)
            object.__setattr__(self, "anchor", float(anchor))
        _check_positive(self.func, lo, hi)

    @classmethod
    def from_table(cls, y, f, anchor: float | None = None) -> "Generic":
        """Monotone cubic (PCHIP) interpolant of tabulated (y, f) pairs.

        The interpolant is piecewise cubic, so its antiderivative is taken
        exactly, piece by piece, instead of by quadrature across the knots.
        """
        from scipy.interpolate import PchipInterpolator

        y = np.asarray(y, dtype=float)
        f = np.asarray(f, dtype=float)
        interp = PchipInterpolator(y, f, extrapolate=False)
        deriv, prim = interp.derivative(), interp.antiderivative()

        def scalar_or_array(p):
            return lambda v: p(v) if np.ndim(v) else float(p(v))

        return cls(
            scalar_or_array(interp),
            (float(y[0]), float(y[-1])),
            anchor=anchor,
            dfunc=scalar_or_array(deriv),
            primitive=scalar_or_array(prim),
        )

    def __call__(self, y, x=None):
        return self.func(y)

    def derivative(self, y, x=None):
        if self.dfunc is not None:
            return self.dfunc(y)
        h = 1e-6 * max(1.0, abs(float(y)))
        return (self.func(y + h) - self.func(y - h)) / (2 * h)


FunctionFamily = Union[Unit, PowerPlusConstant, Generic]


def _check_positive(func, lo: float, hi: float, samples: int = 513) -> None:
    # open interval: endpoints are not sampled
    s = np.linspace(0.0, 1.0, samples)[1:-1]
    if math.isfinite(lo) and math.isfinite(hi):
        ys = lo + (hi - lo) * s
    elif math.isfinite(lo):
        ys = lo + s / (1.0 - s)
    elif math.isfinite(hi):
        ys = hi - s / (1.0 - s)
    else:
        ys = np.tan(np.pi * (s - 0.5))
    vals = np.array([float(func(v)) for v in ys])
    bad = ~(np.isfinite(vals) & (vals > 0))
    if np.any(bad):
        raise InvalidProblem(
            f"generic f must be positive on its domain; f({ys[bad][0]:.6g}) = {vals[bad][0]:.6g}"
        )


def signed_power(y, n: float):
    """y**n on the real branch.

    Integer exponents accept any sign; non-integer exponents need y > 0 and
    return nan otherwise.
    """
    if float(n).is_integer():
        return np.power(y, int(n)) if np.ndim(y) else float(y) ** int(n)
    if np.ndim(y):
        y = np.asarray(y, dtype=float)
        out = np.full_like(y, np.nan)
        pos = y > 0
        out[pos] = y[pos] ** n
        return out
    return float(y) ** n if y > 0 else math.nan


def real_root(v, n: float):
    """Real t with t**n = v.

    Odd integer exponents keep the sign of ``v``; every other exponent takes
    the positive branch and yields nan for v <= 0.
    """
    if float(n).is_integer() and int(n) % 2 != 0:
        return np.sign(v) * np.abs(v) ** (1.0 / n)
    if np.ndim(v):
        v = np.asarray(v, dtype=float)
        out = np.full_like(v, np.nan)
        pos = v > 0
        out[pos] = v[pos] ** (1.0 / n)
        return out
    return float(v) ** (1.0 / n) if v > 0 else math.nan


# -- problem ------------------------------------------------------------------


@dataclass(frozen=True)
class OdeProblem:
    f: FunctionFamily
    alpha: Param
    beta: Param
    gamma: Param = 0.0
    delta: Param = 0.0

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "delta"):
            value = getattr(self, name)
            if not callable(value):
                value = float(value)
                if not math.isfinite(value):
                    raise InvalidProblem(f"{name} must be finite")
                object.__setattr__(self, name, value)
        if _nonzero(self.delta) and not isinstance(self.f, PowerPlusConstant):
            raise InvalidProblem("delta is only meaningful with a power family f")
        if isinstance(self.f, Generic):
            lo, hi = self.f.domain
            _check_positive(self.f.func, lo, hi)

    @property
    def is_variable(self) -> bool:
        """True when any parameter (or the offset k) is a map of x."""
        params = (self.alpha, self.beta, self.gamma, self.delta)
        k_map = isinstance(self.f, PowerPlusConstant) and self.f.variable_k
        return k_map or any(callable(p) for p in params)

    def at(self, x: float) -> tuple[float, float, float, float]:
        """(alpha, beta, gamma, delta) evaluated at x."""
        return (
            param_at(self.alpha, x),
            param_at(self.beta, x),
            param_at(self.gamma, x),
            param_at(self.delta, x),
        )


def _nonzero(p: Param) -> bool:
    return callable(p) or p != 0


# -- classification -----------------------------------------------------------


class FamilyClass(enum.Enum):
    ALREADY_LINEAR = "AlreadyLinear"
    PAINLEVE_INCE = "PainleveInce"
    CASE_A = "CaseA"
    CASE_B = "CaseB"
    CASE_C = "CaseC"
    SHEAR_FREE = "ShearFree"
    GENERIC_LINEARIZABLE = "GenericLinearizable"
    VARIABLE_PARAMS = "VariableParams"

    def __str__(self) -> str:
        return self.value


class Regime(enum.Enum):
    STRONG_DAMPED = "StrongDamped"
    CRITICALLY_DAMPED = "CriticallyDamped"
    WEAK_DAMPED = "WeakDamped"
    GROWING = "Growing"

    def __str__(self) -> str:
        return self.value


def close(a: float, b: float, rtol: float = BETA_RTOL) -> bool:
    """Relative comparison; exact when both sides vanish."""
    scale = max(abs(a), abs(b))
    return abs(a - b) <= rtol * scale


def power_beta(alpha: float, n: float) -> float:
    """beta = alpha^2 (n+1)/(n+2)^2, the constraint of the power families."""
    return alpha * alpha * (n + 1.0) / (n + 2.0) ** 2


def _is_power(f, b=None, n=None, k=None) -> bool:
    if not isinstance(f, PowerPlusConstant):
        return False
    if b is not None and f.b != b:
        return False
    if n is not None and f.n != n:
        return False
    if k is not None and (f.variable_k or f.k != k):
        return False
    return True


def _is_zero(p: Param) -> bool:
    return not callable(p) and p == 0


def _power_shape(problem: OdeProblem) -> bool:
    """alpha, beta constant and satisfying the power-family constraint."""
    f = problem.f
    if not isinstance(f, PowerPlusConstant) or f.b == 0 or f.n in (0.0, -2.0):
        return False
    if callable(problem.alpha) or callable(problem.beta) or problem.alpha == 0:
        return False
    alpha, beta, n = problem.alpha, problem.beta, f.n
    if n == -1.0:
        # beta = 0 and the cubic-order term collapses into gamma f with gamma = alpha^2 b
        return beta == 0 and not callable(problem.gamma) and close(problem.gamma, alpha * alpha * f.b)
    return close(beta, power_beta(alpha, n)) and _is_zero(problem.gamma)


def classify(problem: OdeProblem) -> FamilyClass:
    """Most specific solvable family for ``problem``."""
    f = problem.f
    if isinstance(f, Generic):
        lo, hi = f.domain
        _check_positive(f.func, lo, hi)

    if (
        _is_power(f, b=1.0, n=0.5, k=0.0)
        and _is_zero(problem.alpha)
        and _is_zero(problem.gamma)
        and _is_zero(problem.delta)
    ):
        return FamilyClass.SHEAR_FREE

    if isinstance(f, Unit) or (isinstance(f, PowerPlusConstant) and f.is_constant_function and not f.variable_k):
        return FamilyClass.ALREADY_LINEAR

    if problem.is_variable:
        if _power_shape(problem) and (f.variable_k or callable(problem.delta)):
            return FamilyClass.CASE_C
        return FamilyClass.VARIABLE_PARAMS

    if (
        _is_power(f, b=1.0, n=1.0, k=0.0)
        and problem.alpha != 0
        and problem.delta == 0
        and close(problem.beta, 2.0 * problem.alpha**2 / 9.0)
    ):
        return FamilyClass.PAINLEVE_INCE

    if _power_shape(problem):
        return FamilyClass.CASE_A if problem.delta == 0 else FamilyClass.CASE_B

    return FamilyClass.GENERIC_LINEARIZABLE


def dual_exponent(n: float) -> tuple[float, float]:
    """Exponent pair (n, -n/(n+1)) linked by the k-independent transformation."""
    if n == -1:
        raise InvalidProblem("dual exponent undefined at n = -1")
    m = -n / (n + 1.0)
    return (float(n), m + 0.0)
