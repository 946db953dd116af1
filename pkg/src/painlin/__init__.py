"""Classify, linearize and solve y'' + alpha f y' + beta f F + gamma f = 0."""

from .closed_forms import (
    CaseASolution,
    PainleveInceSolution,
    case_a,
    case_b,
    case_c,
    dual_partner,
    painleve_ince,
    shear_free,
    solve_initial,
)
from .core import (
    DomainBreakdown,
    FamilyClass,
    Generic,
    IntegrationError,
    InvalidProblem,
    OdeProblem,
    PoleError,
    PowerPlusConstant,
    Regime,
    Unit,
    classify,
    dual_exponent,
)
from .linear_solver import classify_damping, solve_constant, solve_variable
from .linearize import LinearProblem, ParametricCurve, TransformTrace, antiderivative, forward_map, linearize, pullback
from .physics import from_bianchi, from_tsallis, from_viscous, tsallis_distribution
from .verify import cross_relation, oracle_compare, residual, roundtrip

__all__ = [
    "CaseASolution", "PainleveInceSolution", "case_a", "case_b", "case_c", "dual_partner",
    "painleve_ince", "shear_free", "solve_initial",
    "DomainBreakdown", "FamilyClass", "Generic", "IntegrationError", "InvalidProblem", "OdeProblem",
    "PoleError", "PowerPlusConstant", "Regime", "Unit", "classify", "dual_exponent",
    "classify_damping", "solve_constant", "solve_variable",
    "LinearProblem", "ParametricCurve", "TransformTrace", "antiderivative", "forward_map", "linearize", "pullback",
    "from_bianchi", "from_tsallis", "from_viscous", "tsallis_distribution",
    "cross_relation", "oracle_compare", "residual", "roundtrip",
]
