"""Physical scenarios mapped onto the equation class.

* Tsallis statistics: the distribution ``f_d`` with ``y = f_d'/f_d``.
* Bianchi I scalar field: ``G G'' + (c-1) G'^2 - c2 G' + c1 = 0`` with
  ``G = y^(1/c)``.
* Viscous fluid: ``f = y^(-1/r)`` with user-given alpha, beta.
* Shear-free perfect fluid: ``y'' = F(x) y^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .closed_forms import shear_free_problem
from .core import InvalidProblem, OdeProblem, PowerPlusConstant
from .numeric import DEFAULT_QUAD_TOL, CumulativeIntegral


@dataclass(frozen=True)
class Tsallis:
    q: float


@dataclass(frozen=True)
class BianchiScalar:
    c: float
    c1: float
    c2: float


@dataclass(frozen=True)
class ViscousFluid:
    r: float
    alpha: float
    beta: float


@dataclass(frozen=True)
class ShearFreeFluid:
    F: Union[float, Callable[[float], float]]


PhysicsScenario = Union[Tsallis, BianchiScalar, ViscousFluid, ShearFreeFluid]


def from_tsallis(q: float) -> OdeProblem:
    """f = y, alpha = 2q - 1, beta = q(q-1)/2, gamma = 0."""
    q = float(q)
    return OdeProblem(PowerPlusConstant(1.0, 1.0, 0.0), 2.0 * q - 1.0, 0.5 * q * (q - 1.0), 0.0)


def from_bianchi(c: float, c1: float, c2: float) -> OdeProblem:
    """Problem satisfied by y = G^c.

    Substituting ``G = y^(1/c)`` cancels the ``y'^2`` terms and leaves
    ``y'' - c2 y^(-1/c) y' + c c1 y^(1-2/c) = 0``.  For c != 1 the last term
    is ``beta f F`` with ``beta = c1 (c-1)``.  At c = 1 the antiderivative is
    logarithmic, so the same term appears as ``gamma f`` with ``gamma = c1``.
    """
    c, c1, c2 = float(c), float(c1), float(c2)
    if c == 0:
        raise InvalidProblem("c must be nonzero")
    f = PowerPlusConstant(1.0, -1.0 / c, 0.0)
    if c == 1:
        return OdeProblem(f, -c2, 0.0, c1)
    return OdeProblem(f, -c2, c1 * (c - 1.0), 0.0)


def bianchi_rhs(c: float, c1: float, c2: float):
    """First-order system for (G, G') of the Bianchi I equation."""

    def rhs(x, s):
        G, dG = s
        return np.array([dG, (c2 * dG - (c - 1.0) * dG * dG - c1) / G])

    return rhs


def from_viscous(r: float, alpha: float, beta: float) -> OdeProblem:
    """f = y^(-1/r), gamma = 0, alpha and beta passed through."""
    r = float(r)
    if r == 0:
        raise InvalidProblem("r must be nonzero")
    return OdeProblem(PowerPlusConstant(1.0, -1.0 / r, 0.0), alpha, beta, 0.0)


def from_scenario(scenario: PhysicsScenario) -> OdeProblem:
    if isinstance(scenario, Tsallis):
        return from_tsallis(scenario.q)
    if isinstance(scenario, BianchiScalar):
        return from_bianchi(scenario.c, scenario.c1, scenario.c2)
    if isinstance(scenario, ViscousFluid):
        return from_viscous(scenario.r, scenario.alpha, scenario.beta)
    if isinstance(scenario, ShearFreeFluid):
        return shear_free_problem(scenario.F)
    raise InvalidProblem(f"unknown scenario {scenario!r}")


def tsallis_distribution(y_solution: Callable[[float], float], x0: float, span, points=None,
                         tol: float = DEFAULT_QUAD_TOL):
    """Normalized density f_d with f_d'/f_d = y.

    ``f_d(x) = N exp(int_{x0}^x y)``, with N chosen so f_d integrates to 1
    over ``span``.

    Returns:
        (xs, values, density) where ``density`` evaluates f_d anywhere in span.

    Raises:
        ArithmeticError: the normalization integral is not finite and positive.
    """
    lo, hi = float(span[0]), float(span[1])
    if not hi > lo:
        raise InvalidProblem("normalization span must be increasing")
    log_f = CumulativeIntegral(lambda t: float(y_solution(t)), x0, chunk=(hi - lo) / 8, tol=tol)
    norm = CumulativeIntegral(lambda t: math.exp(log_f(t)), lo, chunk=(hi - lo) / 8, tol=tol)(hi)
    if not (math.isfinite(norm) and norm > 0):
        raise ArithmeticError("normalization integral diverges on the span")

    def density(x):
        return math.exp(log_f(x)) / norm

    xs = np.linspace(lo, hi, 201) if points is None else np.asarray(points, dtype=float)
    return xs, np.array([density(v) for v in xs]), density
