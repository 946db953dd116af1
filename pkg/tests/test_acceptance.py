"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line."""

import math
from fractions import Fraction

import numpy as np

from painlin.closed_forms import (
    case_a, case_b, case_c, dual_partner, painleve_ince, shear_free, shear_free_problem, solve_initial,
)
from painlin.core import Generic, OdeProblem, PowerPlusConstant, Regime, Unit
from painlin.linear_solver import UndampedBoundary, classify_damping, solve_constant
from painlin.numeric import integrate
from painlin.physics import bianchi_rhs, from_bianchi, from_tsallis, tsallis_distribution
from painlin.verify import cross_relation, fd_derivatives, oracle_compare, oracle_solve, residual, roundtrip

UNIT = (0.0, 1.0)


def draw_painleve_ince(rng):
    """(alpha, gamma, c1, c2, c3) with w free of zeros near the unit span."""
    while True:
        alpha = rng.uniform(0.5, 5)
        gamma = 0.0 if rng.random() < 0.3 else rng.uniform(-4, 4)
        c = rng.uniform(-2, 2, 3)
        sol = painleve_ince(alpha, gamma, *c)
        w = sol.generator(np.linspace(-0.1, 1.1, 1201))[0]
        if np.min(np.abs(w)) > 0.05 * np.max(np.abs(w)) and np.all(np.sign(w) == np.sign(w[0])):
            return sol


def test_criterion_1_painleve_ince_exactness(criterion):
    rng = np.random.default_rng(20240601)
    xs = np.linspace(0.0, 1.0, 200)
    worst_res, worst_dev, literal_ok, zero_draws = 0.0, 0.0, True, 0
    for _ in range(50):
        sol = draw_painleve_ince(rng)
        worst_res = max(worst_res, residual(sol.problem(), sol, xs))
        worst_dev = max(worst_dev, oracle_compare(sol.problem(), sol, 0.0, UNIT, 1e-10, points=xs))
        if sol.gamma == 0:
            zero_draws += 1
            literal = 3 / sol.alpha * (2 * sol.c1 * xs + sol.c2) / (sol.c1 * xs**2 + sol.c2 * xs + sol.c3)
            literal_ok &= bool(np.array_equal(sol(xs), literal))
    ok = worst_res < 1e-8 and worst_dev < 1e-6 and literal_ok and zero_draws > 0
    criterion(1, ok, f"max residual {worst_res:.2e}, max oracle deviation {worst_dev:.2e}, "
                     f"{zero_draws} gamma=0 draws identical to the quadratic formula: {literal_ok}")
    assert ok


def test_criterion_2_literal_generator_sign(criterion):
    sol = painleve_ince(3, 1, 1, 2, 3, literal=True)
    xs = np.linspace(0.0, 1.0, 200)
    original = residual(sol.problem(), sol, xs)
    flipped = residual(OdeProblem(PowerPlusConstant(1, 1, 0), 3, 2, -1), sol, xs)
    ok = original > 1e-2 and flipped < 1e-8
    criterion(2, ok, f"literal form: residual {original:.3f} for gamma=+1, {flipped:.2e} for gamma=-1")
    assert original > 1e-2
    assert flipped < 1e-8


def test_criterion_3_double_root_exponent(criterion):
    xs = np.linspace(-2.0, 3.0, 101)
    results = {}
    for alpha in (0.5, 1.0, 2.0, 4.0):
        problem = OdeProblem(Unit(), alpha, alpha * alpha / 4, 0)
        fixed = residual(problem, solve_constant(alpha, alpha * alpha / 4, 0, 1.0, 1.0), xs)
        literal = residual(problem, solve_constant(alpha, alpha * alpha / 4, 0, 1.0, 1.0, literal_double_root=True), xs)
        results[alpha] = (fixed, literal)
    ok = all(r[0] < 1e-14 for r in results.values())
    ok &= all((r[1] < 1e-14) == (a == 1.0) for a, r in results.items())
    detail = ", ".join(f"a={a}: {r[0]:.1e}/{r[1]:.1e}" for a, r in results.items())
    criterion(3, ok, f"residual exp(-a x/2) / exp(-x/2): {detail}")
    assert ok


CASE_A_GRID = [(1, 1, 0, 3, 1.0), (2, 1, 0, 4, 2 / 3), (0.5, 1, 1, 2, 1.0), (-1, 1, 1, 2, -3.0)]


def test_criterion_4_case_a(criterion):
    xs = np.linspace(0.0, 1.0, 200)
    rows, ok = [], True
    for n, b, k, alpha, c3 in CASE_A_GRID:
        sol = case_a(b, n, k, alpha, 1.0, 0.5, c3, UNIT)
        p = sol.problem()
        res = residual(p, sol, xs)
        dev = oracle_compare(p, sol, 0.0, UNIT, 1e-11, points=xs)
        row_ok = sol.poles() == [] and res < 1e-7 and dev < 1e-6
        if n == -1:
            row_ok &= p.beta == 0 and p.gamma == alpha**2 * b
        ok &= row_ok
        rows.append(f"n={n}: {res:.1e}/{dev:.1e}")
    criterion(4, ok, "residual/oracle " + ", ".join(rows))
    assert ok


def test_criterion_5_case_b_and_c(criterion):
    xs = np.linspace(0.0, 1.0, 50)
    a = case_a(1, 2, 1, 4, 1.0, 0.5, 1.0, UNIT)
    b = case_b(1, 2, 1, 4, 0.0, 1.0, 0.5, 1.0, UNIT)
    identical = bool(np.array_equal(a.derivatives(xs), b.derivatives(xs)))
    c = case_c(1, 1, 3, lambda x: x, 0.0, (1.0, 0.5), 1.0, UNIT, 1e-11)
    res = residual(c.problem(), c, xs)
    res_fd = residual(c.problem(), c, xs[2:-2], analytic=False)
    ok = identical and res < 1e-6 and res_fd < 1e-6
    criterion(5, ok, f"delta=0 identical to case a: {identical}; k(x)=x residual {res:.1e} (finite differences {res_fd:.1e})")
    assert ok


def test_criterion_6_shear_free(criterion):
    worst = 0.0
    for F0, x_offset in ((1.0, 0.0), (2.5, -1.0), (0.3, 2.0)):
        s0 = 0.5
        curve = shear_free(F0, 0.0, 0.0, x_offset, (s0, 2.0), literal=True)
        # pole location from x(s) = x_offset + int_s0^s 3 (27 F0 t^2 / 2)^(-2/3) dt
        x0 = x_offset + 9.0 * (13.5 * F0) ** (-2.0 / 3.0) * s0 ** (-1.0 / 3.0)
        worst = max(worst, float(np.max(np.abs(curve.y - 6.0 / (F0 * (curve.x - x0) ** 2)))))
    curve = shear_free(lambda x: x, 0.0, 1.0, 0.0, (1.0, 2.0))
    xs = np.linspace(curve.span[0], curve.span[1], 60)[2:-2]
    fd = residual(shear_free_problem(lambda x: x), curve, xs, analytic=False)
    direct = max(abs(d2 - x * y * y) for x, (y, _, d2) in ((x, fd_derivatives(curve, x)) for x in xs))
    ok = worst < 1e-8 and fd < 1e-6 and direct < 1e-6
    criterion(6, ok, f"constant F max deviation {worst:.1e}; F=x finite-difference residual {fd:.1e} "
                     f"(unnormalized {direct:.1e})")
    assert ok


def table_family():
    ys = np.linspace(-2.0, 3.0, 501)
    return Generic.from_table(ys, 1 + ys**2, anchor=0.0)


ROUNDTRIP_CASES = [
    ("y", OdeProblem(PowerPlusConstant(1, 1, 0), 3, 2, 0), 1.0, 0.2),
    ("y^(1/2)", OdeProblem(PowerPlusConstant(1, 0.5, 0), 1, 6 / 25, 0), 1.0, 0.1),
    ("y^2+1", OdeProblem(PowerPlusConstant(1, 2, 1), 4, 3, 0), 0.8, -0.2),
    ("table", OdeProblem(table_family(), 1, 0.5, 0), 0.5, 0.1),
]


def test_criterion_7_roundtrip(criterion):
    # nested grids: every coarse grid is a subsample of the finest one
    strides = (4, 2, 1)
    ok, rows = True, []
    for name, problem, y0, dy0 in ROUNDTRIP_CASES:
        oracle = oracle_solve(problem, 0.0, y0, dy0, UNIT, 1e-12)
        x = np.linspace(0.0, 1.0, 1001)
        y = np.array([oracle(v) for v in x])
        errs = [roundtrip(problem, x[::k], y[::k], x0=0.0) for k in strides]
        orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
        case_ok = errs[-1] < 1e-5 and min(orders) > 1.8
        ok &= case_ok
        rows.append(f"{name}: {errs[-1]:.1e} order {min(orders):.2f}")
    criterion(7, ok, "; ".join(rows))
    assert ok


def test_criterion_8_cross_relation(criterion):
    sol = case_a(1, 1, 1, 2, 1.0, 0.5, 1.0, UNIT)
    partner = dual_partner(sol, -1.0, 2.0)
    gap = cross_relation((sol, partner))
    ok = partner.n == -0.5 and gap < 1e-6
    criterion(8, ok, f"n=1 with n_bar={partner.n}: max relative gap {gap:.1e}")
    assert ok


def test_criterion_9_damping_lattice(criterion):
    checked, ok = 0, True
    for alpha in (-3.0, -1.0, -0.5, 0.5, 1.0, 2.0, 3.0):
        crit = alpha * alpha / 4
        for offset, named in ((-0.25, Regime.STRONG_DAMPED), (0.0, Regime.CRITICALLY_DAMPED), (0.25, Regime.WEAK_DAMPED)):
            expected = Regime.GROWING if alpha < 0 else named
            ok &= classify_damping(alpha, crit + offset) is expected
            checked += 1
    try:
        classify_damping(0.0, 1.0)
        ok = False
    except UndampedBoundary:
        pass
    criterion(9, ok, f"{checked} lattice points plus the alpha=0 boundary")
    assert ok


def bianchi_residual(c, c1, c2, G0, dG0):
    rhs = bianchi_rhs(c, c1, c2)
    dense = integrate(rhs, [G0, dG0], UNIT, 1e-12)

    class Trajectory:
        def derivatives(self, x):
            G, dG = dense.precise(float(x))
            d2G = rhs(x, np.array([G, dG]))[1]
            return (G**c, c * G ** (c - 1) * dG,
                    c * (c - 1) * G ** (c - 2) * dG * dG + c * G ** (c - 1) * d2G)

        def __call__(self, x):
            return self.derivatives(x)[0]

    return residual(from_bianchi(c, c1, c2), Trajectory(), np.linspace(0.0, 1.0, 41))


def test_criterion_10_physics(criterion):
    exact = True
    for q in (Fraction(-1), Fraction(1, 2), Fraction(2), Fraction(7, 4)):
        p = from_tsallis(float(q))
        exact &= p.alpha == float(2 * q - 1) and p.beta == float(q * (q - 1) / 2) and p.gamma == 0
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(20):
        c = rng.choice([-1, 1]) * rng.uniform(0.5, 3)
        worst = max(worst, bianchi_residual(c, rng.uniform(-1, 1), rng.uniform(-1, 1),
                                            rng.uniform(1, 2), rng.uniform(-0.3, 0.3)))
    sol = solve_initial(from_tsallis(-1), 0.0, 1.0, 0.5, 1.0)
    xs, values, density = tsallis_distribution(sol, 0.0, UNIT, points=np.linspace(0.05, 0.95, 10))
    nodes, weights = np.polynomial.legendre.leggauss(40)
    total = 0.5 * sum(w * density(0.5 + 0.5 * t) for t, w in zip(nodes, weights))
    relation = max(abs(df / f - float(sol(x))) for x in xs for f, df, _ in [fd_derivatives(density, x, h=1e-3)])
    ok = exact and worst < 1e-6 and abs(total - 1) < 1e-8 and relation < 1e-6 and bool(np.all(values > 0))
    criterion(10, ok, f"tsallis exact: {exact}; bianchi worst residual {worst:.1e} over 20 draws; "
                      f"normalization {abs(total - 1):.1e}; f'/f - y {relation:.1e}")
    assert ok
