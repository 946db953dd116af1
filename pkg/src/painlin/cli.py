"""Command-line front end.

Subcommands::

    painlin classify --problem P.json
    painlin solve --problem P.json --span A B [--points N] --out curve.csv
    painlin verify --problem P.json --solution closed|numeric --report rep.json
    painlin sample --solution S.json --span A B --out curve.csv
    painlin physics-map {tsallis,bianchi,viscous,shear-free} ... --out P.json

Exit status: 0 success, 1 domain breakdown or failed check, 2 invalid input.
The environment variable ``PAINLIN_TOL`` overrides the integration tolerance.
"""

from __future__ import annotations

import argparse
import ast
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from .closed_forms import (
    POLE_GUARD,
    case_b,
    case_c,
    painleve_ince,
    shear_free,
    shear_free_problem,
    solve_initial,
    _parameter_extent,
)
from .core import (
    DomainBreakdown,
    FamilyClass,
    Generic,
    IntegrationError,
    InvalidProblem,
    OdeProblem,
    PowerPlusConstant,
    Unit,
    classify,
    power_beta,
)
from .linear_solver import solve_constant, solve_variable
from .linearize import linearize, pullback
from .numeric import DEFAULT_INTEGRATE_TOL
from .physics import from_bianchi, from_tsallis, from_viscous
from .verify import oracle_compare, oracle_solve, residual, residual_values

SCHEMA_VERSION = 1
DEFAULT_MAX_RESIDUAL = 1e-8
# finite-difference derivatives of a numeric trajectory carry more noise
DEFAULT_MAX_RESIDUAL_NUMERIC = 1e-6
EXIT_OK, EXIT_BREAKDOWN, EXIT_INVALID = 0, 1, 2


class InputError(Exception):
    """Malformed input, reported with a file and line anchor."""

    def __init__(self, message: str, path: str = "<input>", line: int | None = None):
        anchor = f"{path}:{line}" if line is not None else path
        super().__init__(f"{anchor}: {message}")


# -- expressions ----------------------------------------------------------------

_FUNCS = {
    "sin": np.sin, "cos": np.cos, "tan": np.tan, "exp": np.exp, "log": np.log,
    "sqrt": np.sqrt, "sinh": np.sinh, "cosh": np.cosh, "tanh": np.tanh, "abs": np.abs,
    "arctan": np.arctan,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_NODES = (
    ast.Expression, ast.BinOp, ast.UnaryOp, ast.Call, ast.Name, ast.Constant, ast.Load,
    ast.Add, ast.Sub, ast.Mult, ast.Div, ast.Pow, ast.USub, ast.UAdd,
)


def compile_expr(text: str, var: str = "x") -> Callable[[float], float]:
    """Function of one variable from an arithmetic expression.

    Only numbers, ``var``, pi, e, the four operations, ``**`` and a fixed set
    of elementary functions are accepted.
    """
    try:
        tree = ast.parse(str(text), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse expression {text!r}: {exc.msg}") from None
    for node in ast.walk(tree):
        if not isinstance(node, _NODES):
            raise ValueError(f"unsupported syntax {type(node).__name__} in {text!r}")
        if isinstance(node, ast.Constant) and not isinstance(node.value, (int, float)):
            raise ValueError(f"only numeric constants are allowed in {text!r}")
        if isinstance(node, ast.Name) and node.id not in _FUNCS and node.id not in _CONSTS and node.id != var:
            raise ValueError(f"unknown name {node.id!r} in {text!r}")
        if isinstance(node, ast.Call) and not (isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords):
            raise ValueError(f"unsupported call in {text!r}")
    code = compile(tree, "<expr>", "eval")
    env = {"__builtins__": {}, **_FUNCS, **_CONSTS}

    def fn(v):
        out = eval(code, env, {var: v})
        return float(out) if np.ndim(out) == 0 else np.asarray(out, dtype=float)

    fn.source = str(text)
    return fn


# -- problem documents -----------------------------------------------------------


@dataclass
class Document:
    data: dict
    text: str
    path: str

    def line_of(self, key: str) -> int | None:
        needle = f'"{key}"'
        for i, line in enumerate(self.text.splitlines(), start=1):
            if needle in line:
                return i
        return None

    def error(self, message: str, key: str | None = None) -> InputError:
        return InputError(message, self.path, self.line_of(key) if key else None)


def load_document(path: str) -> Document:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read file: {exc.strerror}", path) from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc.msg} (column {exc.colno})", path, exc.lineno) from None
    if not isinstance(data, dict):
        raise InputError("top level must be a JSON object", path, 1)
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise InputError(f"unsupported schema_version {version!r}", path, _line(text, "schema_version"))
    return Document(data, text, path)


def _line(text, key):
    return Document({}, text, "").line_of(key)


def _number(doc: Document, container: dict, key: str, default=None) -> float:
    if key not in container:
        if default is None:
            raise doc.error(f"missing field {key!r}", key)
        return default
    value = container[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise doc.error(f"field {key!r} must be a finite number", key)
    return float(value)


def _param(doc: Document, key: str, default: float = 0.0):
    variable = doc.data.get("variable", {}) or {}
    expr = variable.get(f"{key}_expr")
    if expr is not None:
        try:
            return compile_expr(expr)
        except ValueError as exc:
            raise doc.error(str(exc), f"{key}_expr") from None
    return _number(doc, doc.data, key, default)


def problem_from_document(doc: Document) -> OdeProblem:
    """Build an :class:`OdeProblem` from a parsed problem document."""
    data = doc.data
    variable = data.get("variable", {}) or {}
    if not isinstance(variable, dict):
        raise doc.error("field 'variable' must be an object", "variable")
    family = data.get("family")
    try:
        if "F_expr" in variable or "F" in data:
            if "F_expr" in variable:
                try:
                    F = compile_expr(variable["F_expr"])
                except ValueError as exc:
                    raise doc.error(str(exc), "F_expr") from None
            else:
                F = _number(doc, data, "F")
            return shear_free_problem(F)
        if family == "unit":
            f = Unit()
        elif family == "power":
            k = _param(doc, "k")
            f = PowerPlusConstant(_number(doc, data, "b"), _number(doc, data, "n"), k)
        elif family == "generic-table":
            table = variable.get("table", data.get("table"))
            f = _table_family(doc, table)
        else:
            raise doc.error(f"field 'family' must be one of unit, power, generic-table (got {family!r})", "family")
        return OdeProblem(
            f,
            _param(doc, "alpha"),
            _param(doc, "beta"),
            _param(doc, "gamma"),
            _param(doc, "delta"),
        )
    except InvalidProblem as exc:
        raise doc.error(str(exc), "family") from None
    except DomainBreakdown as exc:
        raise doc.error(str(exc), "family") from None


def _table_family(doc: Document, table) -> Generic:
    if not isinstance(table, list) or len(table) < 2:
        raise doc.error("field 'table' must list at least two [y, f] pairs", "table")
    try:
        arr = np.array(table, dtype=float)
    except (TypeError, ValueError):
        raise doc.error("field 'table' must contain numeric [y, f] pairs", "table") from None
    if arr.ndim != 2 or arr.shape[1] != 2 or not np.all(np.isfinite(arr)):
        raise doc.error("field 'table' must contain numeric [y, f] pairs", "table")
    if not np.all(np.diff(arr[:, 0]) > 0):
        raise doc.error("table y values must be strictly increasing", "table")
    anchor = doc.data.get("anchor")
    return Generic.from_table(arr[:, 0], arr[:, 1], anchor=None if anchor is None else float(anchor))


# -- solution construction --------------------------------------------------------


def _tol() -> float:
    raw = os.environ.get("PAINLIN_TOL")
    if raw is None:
        return DEFAULT_INTEGRATE_TOL
    try:
        value = float(raw)
    except ValueError:
        raise InputError(f"PAINLIN_TOL must be a number, got {raw!r}", "environment") from None
    if not 1e-14 <= value <= 1e-2:
        raise InputError("PAINLIN_TOL must lie in [1e-14, 1e-2]", "environment")
    return value


def build_solution(doc: Document, problem: OdeProblem, span: tuple[float, float], tol: float):
    """Solution described by the document's ``constants`` or ``initial`` block."""
    data = doc.data
    cls = classify(problem)
    if "initial" in data:
        init = data["initial"]
        if not isinstance(init, dict):
            raise doc.error("field 'initial' must be an object", "initial")
        x0 = _number(doc, init, "x", span[0])
        y0 = _number(doc, init, "y")
        ydot0 = _number(doc, init, "ydot")
        if cls is FamilyClass.SHEAR_FREE:
            raise doc.error("shear-free problems take 'constants' (c1, c2, x_offset)", "initial")
        return solve_initial(problem, x0, y0, ydot0, span[1], tol)
    consts = data.get("constants")
    if not isinstance(consts, dict):
        raise doc.error("need a 'constants' or 'initial' object", None)
    c = lambda key, default=None: _number(doc, consts, key, default)
    f = problem.f
    if cls is FamilyClass.PAINLEVE_INCE:
        return painleve_ince(problem.alpha, problem.gamma, c("c1"), c("c2"), c("c3"))
    if cls in (FamilyClass.CASE_A, FamilyClass.CASE_B):
        return case_b(f.b, f.n, f.k, problem.alpha, problem.delta, c("c1"), c("c2"), c("c3"), span)
    if cls is FamilyClass.CASE_C:
        return case_c(f.b, f.n, problem.alpha, f.k, problem.delta, (c("c1"), c("c2")), c("c3"), span, tol)
    if cls is FamilyClass.SHEAR_FREE:
        F = lambda x: -2.0 * problem.beta(x) / 3.0
        literal = bool(consts.get("literal", False))
        return shear_free(F, c("c1"), c("c2"), c("x_offset", 0.0), span, literal=literal, tol=tol)
    if cls is FamilyClass.ALREADY_LINEAR:
        return _linear_in_x(problem, c("c1"), c("c2"), span, tol)
    lp, trace = linearize(problem, x0=span[0])
    if not lp.is_constant:
        raise doc.error("x-dependent coefficients need an 'initial' block", "constants")
    linear = solve_constant(lp.a, lp.b, lp.g, c("c1"), c("c2"))
    return _parameter_extent(lambda s: pullback(linear, f, trace, (0.0, s)), 1.0, span[1])


def _linear_in_x(problem: OdeProblem, c1, c2, span, tol):
    """Constant f = c makes the equation linear in y and x.

    ``y'' + alpha c y' + (beta c^2 + delta) y + gamma c = 0``.  With constant
    parameters ``c1, c2`` are the closed-form constants; otherwise they are
    y and y' at the span start.
    """
    f = problem.f
    c = 1.0 if isinstance(f, Unit) else float(f.b + f.k) if f.n == 0 else float(f.k)
    if not problem.is_variable:
        a, b, g, d = problem.at(span[0])
        return solve_constant(a * c, b * c * c + d, g * c, c1, c2)
    af = lambda x: problem.at(x)[0] * c
    bf = lambda x: problem.at(x)[1] * c * c + problem.at(x)[3]
    gf = lambda x: problem.at(x)[2] * c
    return solve_variable(af, bf, gf, c1, c2, span, tol)


def _grid(solution, span, points):
    xs = np.linspace(span[0], span[1], points)
    poles = getattr(solution, "poles", None)
    if callable(poles):
        found = poles(span)
    else:
        found = list(poles or [])
    keep = np.ones(xs.size, dtype=bool)
    for p in found:
        keep &= np.abs(xs - p) >= POLE_GUARD
    return xs[keep]


def _curve_rows(problem, solution, xs):
    rows = []
    res = residual_values(problem, solution, xs)
    for x, r in zip(xs, res):
        y, dy, _ = solution.derivatives(float(x))
        rows.append((float(x), float(y), float(dy), float(r)))
    return rows


def _write_csv(path, rows):
    lines = ["x,y,ydot,residual"]
    lines += [",".join(f"{v:.17g}" for v in row) for row in rows]
    _write_text(path, "\n".join(lines) + "\n")


def _write_text(path, text):
    if path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)


def _dump_json(obj, indent=0) -> str:
    """JSON with sorted keys and floats at 17 significant digits."""
    pad = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_dump_json(obj[k], indent + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + "  " * indent + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_dump_json(v, indent + 1) for v in obj) + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return f"{v:.17g}" if math.isfinite(v) else json.dumps(str(v))
    return json.dumps(str(obj))


def _span(doc: Document, args_span):
    if args_span is not None:
        lo, hi = args_span
    elif "span" in doc.data:
        sp = doc.data["span"]
        if not (isinstance(sp, list) and len(sp) == 2):
            raise doc.error("field 'span' must be [start, end]", "span")
        lo, hi = (_number(doc, {"span": v}, "span") for v in sp)
    else:
        lo, hi = 0.0, 1.0
    if not hi > lo:
        raise InputError("span end must exceed span start", doc.path)
    return float(lo), float(hi)


# -- subcommands ------------------------------------------------------------------


def _matched_constraints(problem: OdeProblem, cls: FamilyClass) -> list[str]:
    if cls is FamilyClass.PAINLEVE_INCE:
        return [f"beta = 2 alpha^2 / 9 = {2 * problem.alpha**2 / 9:.17g}"]
    if cls in (FamilyClass.CASE_A, FamilyClass.CASE_B):
        n = problem.f.n
        if n == -1:
            return [f"beta = 0, gamma = alpha^2 b = {problem.alpha**2 * problem.f.b:.17g}"]
        out = [f"beta = alpha^2 (n+1)/(n+2)^2 = {power_beta(problem.alpha, n):.17g}"]
        if cls is FamilyClass.CASE_B:
            out.append(f"delta = {problem.delta:.17g}")
        return out
    if cls is FamilyClass.CASE_C:
        return ["power family with x-dependent k or delta"]
    if cls is FamilyClass.SHEAR_FREE:
        return ["alpha = 0, gamma = 0, f = y^(1/2), beta = -3 F(x) / 2"]
    if cls is FamilyClass.ALREADY_LINEAR:
        return ["f is constant"]
    if cls is FamilyClass.VARIABLE_PARAMS:
        return ["x-dependent alpha, beta or gamma"]
    return ["no family constraint matched; solved by linearization"]


def cmd_classify(args) -> int:
    doc = load_document(args.problem)
    problem = problem_from_document(doc)
    cls = classify(problem)
    lines = [str(cls)] + [f"  {c}" for c in _matched_constraints(problem, cls)]
    sys.stdout.write("\n".join(lines) + "\n")
    return EXIT_OK


def cmd_solve(args) -> int:
    doc = load_document(args.problem)
    problem = problem_from_document(doc)
    span = _span(doc, args.span)
    tol = _tol()
    solution = build_solution(doc, problem, span, tol)
    if classify(problem) is FamilyClass.SHEAR_FREE:
        xs = solution.x
    else:
        xs = _grid(solution, span, args.points)
    rows = _curve_rows(problem, solution, xs)
    worst = max(r[3] for r in rows)
    if worst > args.max_residual and not args.force:
        sys.stderr.write(
            f"painlin: residual {worst:.3g} exceeds bound {args.max_residual:.3g}; no output written (use --force)\n"
        )
        return EXIT_BREAKDOWN
    _write_csv(args.out, rows)
    if args.descriptor:
        _write_text(args.descriptor, _dump_json({**doc.data, "span": list(span)}) + "\n")
    return EXIT_OK


def cmd_verify(args) -> int:
    doc = load_document(args.problem)
    problem = problem_from_document(doc)
    span = _span(doc, args.span)
    tol = _tol()
    cls = classify(problem)
    report: dict[str, Any] = {"schema_version": SCHEMA_VERSION, "class": str(cls), "solution": args.solution,
                              "span": list(span)}
    if args.solution == "closed":
        solution = build_solution(doc, problem, span, tol)
        xs = solution.x if cls is FamilyClass.SHEAR_FREE else _grid(solution, span, args.points)
        report["points"] = int(xs.size)
        report["max_residual"] = residual(problem, solution, xs)
        x0 = float(xs[0])
        segment = _pole_free_segment(solution, (x0, float(xs[-1])))
        report["oracle_deviation"] = oracle_compare(problem, solution, x0, segment, tol)
    else:
        init = doc.data.get("initial")
        if not isinstance(init, dict):
            raise doc.error("numeric verification needs an 'initial' object", "initial")
        x0 = _number(doc, init, "x", span[0])
        oracle = oracle_solve(problem, x0, _number(doc, init, "y"), _number(doc, init, "ydot"), span, tol)
        xs = np.linspace(span[0], span[1], args.points)
        report["points"] = int(xs.size)
        report["max_residual"] = residual(problem, oracle, xs[2:-2], analytic=False)
    bound = args.max_residual
    if bound is None:
        bound = DEFAULT_MAX_RESIDUAL if args.solution == "closed" else DEFAULT_MAX_RESIDUAL_NUMERIC
    ok = report["max_residual"] <= bound
    report["passed"] = bool(ok)
    _write_text(args.report, _dump_json(report) + "\n")
    return EXIT_OK if ok else EXIT_BREAKDOWN


def _pole_free_segment(solution, span):
    poles = getattr(solution, "poles", None)
    found = poles(span) if callable(poles) else list(poles or [])
    hi = min([p - POLE_GUARD for p in found if p > span[0]] + [span[1]])
    return (span[0], hi)


def cmd_sample(args) -> int:
    doc = load_document(args.solution)
    problem = problem_from_document(doc)
    built_on = _span(doc, None) if "span" in doc.data else _span(doc, args.span)
    span = _span(doc, args.span)
    solution = build_solution(doc, problem, built_on, _tol())
    xs = solution.x if classify(problem) is FamilyClass.SHEAR_FREE else _grid(solution, span, args.points)
    _write_csv(args.out, _curve_rows(problem, solution, xs))
    return EXIT_OK


def cmd_physics_map(args) -> int:
    if args.scenario == "tsallis":
        problem, physics = from_tsallis(args.q), {"scenario": "tsallis", "q": args.q}
    elif args.scenario == "bianchi":
        problem, physics = from_bianchi(args.c, args.c1, args.c2), {"scenario": "bianchi", "c": args.c, "c1": args.c1, "c2": args.c2}
    elif args.scenario == "viscous":
        problem, physics = from_viscous(args.r, args.alpha, args.beta), {"scenario": "viscous", "r": args.r}
    else:
        doc = {"schema_version": SCHEMA_VERSION, "family": "power", "b": 1.0, "n": 0.5, "k": 0.0,
               "alpha": 0.0, "gamma": 0.0, "variable": {"F_expr": args.F_expr},
               "physics": {"scenario": "shear-free", "F_expr": args.F_expr}}
        compile_expr(args.F_expr)
        _write_text(args.out, _dump_json(doc) + "\n")
        return EXIT_OK
    f = problem.f
    doc = {
        "schema_version": SCHEMA_VERSION,
        "family": "power",
        "b": f.b, "n": f.n, "k": float(f.k),
        "alpha": problem.alpha, "beta": problem.beta, "gamma": problem.gamma, "delta": problem.delta,
        "physics": physics,
    }
    _write_text(args.out, _dump_json(doc) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="painlin", description="Classify, solve and verify nonlinear ODE problems.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", help="print the solvable family of a problem")
    p.add_argument("--problem", required=True)
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("solve", help="solve a problem and write curve samples as CSV")
    p.add_argument("--problem", required=True)
    p.add_argument("--span", nargs=2, type=float, metavar=("START", "END"))
    p.add_argument("--points", type=int, default=301)
    p.add_argument("--out", default="-")
    p.add_argument("--max-residual", type=float, default=DEFAULT_MAX_RESIDUAL)
    p.add_argument("--force", action="store_true", help="write output even if the residual check fails")
    p.add_argument("--descriptor", help="also write a solution descriptor for 'sample'")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="residual and oracle report for a problem")
    p.add_argument("--problem", required=True)
    p.add_argument("--solution", choices=("closed", "numeric"), default="closed")
    p.add_argument("--span", nargs=2, type=float, metavar=("START", "END"))
    p.add_argument("--points", type=int, default=201)
    p.add_argument("--max-residual", type=float, default=None)
    p.add_argument("--report", default="-")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sample", help="evaluate a solution descriptor on a grid")
    p.add_argument("--solution", required=True)
    p.add_argument("--span", nargs=2, type=float, metavar=("START", "END"))
    p.add_argument("--points", type=int, default=301)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("physics-map", help="write the problem file of a physical scenario")
    p.add_argument("scenario", choices=("tsallis", "bianchi", "viscous", "shear-free"))
    p.add_argument("--q", type=float)
    p.add_argument("--c", type=float)
    p.add_argument("--c1", type=float, default=0.0)
    p.add_argument("--c2", type=float, default=0.0)
    p.add_argument("--r", type=float)
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--F-expr", dest="F_expr", default="x")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_physics_map)
    return parser


_REQUIRED = {"tsallis": ("q",), "bianchi": ("c",), "viscous": ("r",), "shear-free": ()}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INVALID if exc.code else EXIT_OK
    if args.command == "physics-map":
        missing = [k for k in _REQUIRED[args.scenario] if getattr(args, k) is None]
        if missing:
            sys.stderr.write(f"painlin: error: {args.scenario} needs --{missing[0]}\n")
            return EXIT_INVALID
    try:
        return args.func(args)
    except InputError as exc:
        sys.stderr.write(f"painlin: error: {exc}\n")
        return EXIT_INVALID
    except (InvalidProblem, ValueError) as exc:
        sys.stderr.write(f"painlin: error: {exc}\n")
        return EXIT_INVALID
    except (DomainBreakdown, IntegrationError, ArithmeticError) as exc:
        sys.stderr.write(f"painlin: breakdown: {exc}\n")
        return EXIT_BREAKDOWN


if __name__ == "__main__":
    sys.exit(main())
