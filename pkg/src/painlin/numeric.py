"""Numerical kernels shared by every solution pathway.

* :func:`integrate` -- adaptive Dormand-Prince 5(4) stepping with cubic
  Hermite dense output.
* :func:`adaptive_simpson` / :func:`cumulative_quadrature` -- adaptive
  Simpson quadrature, panel by panel.
* :class:`CumulativeIntegral` -- an antiderivative that can be queried at any
  point; smooth in its upper limit, which keeps finite differences of it clean.
* :func:`invert_monotone` -- bracketed inversion of an increasing map.
"""

from __future__ import annotations

import bisect as _bisect
import math
import threading
from typing import Callable, Sequence

import numpy as np

from .core import DomainBreakdown, IntegrationError

DEFAULT_INTEGRATE_TOL = 1e-10
DEFAULT_QUAD_TOL = 1e-12
DEFAULT_INVERT_TOL = 1e-12

EPS = np.finfo(float).eps

# Dormand-Prince 5(4); the 5th order solution is propagated (FSAL).
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4
# quartic correction of the DP continuous extension beyond the cubic Hermite
# interpolant; its midpoint weight bounds the Hermite interpolation error
_D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799, -10690763975 / 1880347072,
    701980252875 / 199316789632, -1453857185 / 822651844, 69997945 / 29380423,
])


def _dp_step(rhs, t, y, f0, h, dense_error=False):
    """One Dormand-Prince step. Returns (y_new, f_new, error_estimate).

    With ``dense_error`` the error estimate is widened by the midpoint error
    of cubic Hermite interpolation across the step.
    """
    k = np.empty((7, y.size))
    k[0] = f0
    for i in range(1, 7):
        yi = y + h * (_A[i] @ k[:i])
        k[i] = rhs(t + _C[i] * h, yi)
    y_new = y + h * (_B5[:6] @ k[:6])
    # k[6] was evaluated at y_new (FSAL)
    err = h * (_E @ k)
    if dense_error:
        herm = h * (_D @ k) / 16.0
        err = np.where(np.abs(herm) > np.abs(err), herm, err)
    return y_new, k[6], err


class _CheckedRhs:
    def __init__(self, rhs):
        self.rhs = rhs

    def __call__(self, t, y):
        out = np.asarray(self.rhs(t, y), dtype=float)
        if not np.all(np.isfinite(out)):
            raise IntegrationError("non-finite derivative", t)
        return out


class DenseSolution:
    """Accepted step mesh plus cubic Hermite interpolation.

    Calling the object interpolates; :meth:`precise` re-integrates from the
    nearest mesh node with a fixed number of sub-steps, giving values that are
    accurate to well below the step tolerance and smooth inside each cell.
    """

    RESTEP_SUBSTEPS = 4

    def __init__(self, t, y, f, rhs, tol):
        self.t = np.asarray(t, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.f = np.asarray(f, dtype=float)
        self.rhs = rhs
        self.tol = tol
        self._sign = 1.0 if self.t[-1] >= self.t[0] else -1.0
        self._u = self._sign * self.t  # increasing copy for searching
        self._precise_nodes = None
        self._lock = threading.Lock()

    @property
    def span(self) -> tuple[float, float]:
        return (float(self.t[0]), float(self.t[-1]))

    @property
    def dim(self) -> int:
        return self.y.shape[1]

    def _cell(self, tq):
        u = self._sign * np.asarray(tq, dtype=float)
        lo, hi = self._u[0], self._u[-1]
        slack = 1e-12 * max(1.0, abs(lo), abs(hi))
        if np.any(u < lo - slack) or np.any(u > hi + slack):
            raise ValueError(f"query outside integration span {self.span}")
        idx = np.searchsorted(self._u, u, side="right") - 1
        return np.clip(idx, 0, len(self.t) - 2)

    def __call__(self, tq):
        """State(s) at ``tq`` by cubic Hermite interpolation."""
        scalar = np.ndim(tq) == 0
        tq = np.atleast_1d(np.asarray(tq, dtype=float))
        i = self._cell(tq)
        h = self.t[i + 1] - self.t[i]
        s = ((tq - self.t[i]) / h)[:, None]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        hh = h[:, None]
        out = h00 * self.y[i] + h10 * hh * self.f[i] + h01 * self.y[i + 1] + h11 * hh * self.f[i + 1]
        return out[0] if scalar else out

    def derivative(self, tq):
        """Time derivative of the Hermite interpolant."""
        scalar = np.ndim(tq) == 0
        tq = np.atleast_1d(np.asarray(tq, dtype=float))
        i = self._cell(tq)
        h = (self.t[i + 1] - self.t[i])[:, None]
        s = ((tq - self.t[i]) / h[:, 0])[:, None]
        d00 = 6 * s**2 - 6 * s
        d10 = 3 * s**2 - 4 * s + 1
        d01 = -6 * s**2 + 6 * s
        d11 = 3 * s**2 - 2 * s
        out = (d00 * self.y[i] + d01 * self.y[i + 1]) / h + d10 * self.f[i] + d11 * self.f[i + 1]
        return out[0] if scalar else out

    def _restep(self, t0, y0, t1):
        m = self.RESTEP_SUBSTEPS
        h = (t1 - t0) / m
        y = y0
        t = t0
        for _ in range(m):
            y, _, _ = _dp_step(self.rhs, t, y, self.rhs(t, y), h)
            t += h
        return y

    def _nodes(self):
        with self._lock:
            if self._precise_nodes is None:
                nodes = np.empty_like(self.y)
                nodes[0] = self.y[0]
                for i in range(len(self.t) - 1):
                    nodes[i + 1] = self._restep(self.t[i], nodes[i], self.t[i + 1])
                self._precise_nodes = nodes
            return self._precise_nodes

    def precise(self, tq: float) -> np.ndarray:
        """State at scalar ``tq`` by sub-stepped re-integration from the left node."""
        nodes = self._nodes()
        i = int(self._cell(np.array([tq]))[0])
        if tq == self.t[i]:
            return nodes[i].copy()
        return self._restep(self.t[i], nodes[i], float(tq))


def integrate(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0,
    span: tuple[float, float],
    tol: float = DEFAULT_INTEGRATE_TOL,
    *,
    first_step: float | None = None,
    fixed_step: float | None = None,
    max_step: float | None = None,
    max_steps: int = 500_000,
) -> DenseSolution:
    """Integrate y' = rhs(t, y) over ``span``.

    Each accepted step keeps both the local error and the midpoint error of
    its Hermite interpolant within ``tol * max(1, |y_i|)``.  ``span`` may run
    backwards.
    ``fixed_step`` disables step control (used for order checks).

    Raises:
        IntegrationError: on step-size underflow or a non-finite derivative.
    """
    if not 1e-14 <= tol <= 1e-2:
        raise ValueError(f"tol must lie in [1e-14, 1e-2], got {tol}")
    t0, t1 = float(span[0]), float(span[1])
    if t0 == t1:
        raise ValueError("empty integration span")
    direction = 1.0 if t1 > t0 else -1.0
    length = abs(t1 - t0)
    rhs = _CheckedRhs(rhs)
    y = np.atleast_1d(np.asarray(y0, dtype=float)).copy()
    f = rhs(t0, y)
    ts, ys, fs = [t0], [y.copy()], [f.copy()]
    hmax = length if max_step is None else min(length, abs(max_step))

    if fixed_step is not None:
        n = max(1, int(round(length / abs(fixed_step))))
        h = direction * length / n
        t = t0
        for i in range(n):
            y, f, _ = _dp_step(rhs, t, y, f, h)
            t = t0 + (i + 1) * h
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
        ts[-1] = t1
        return DenseSolution(ts, ys, fs, rhs, tol)

    if first_step is None:
        scale = tol * np.maximum(1.0, np.abs(y))
        d0 = np.max(np.abs(y) / scale)
        d1 = np.max(np.abs(f) / scale)
        h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
        h = min(h, hmax)
    else:
        h = min(abs(first_step), hmax)

    t = t0
    steps = 0
    while direction * (t1 - t) > 0:
        if steps >= max_steps:
            raise IntegrationError("maximum number of steps exceeded", t)
        hmin = 16 * EPS * max(1.0, abs(t))
        if h < hmin:
            raise IntegrationError("step size underflow (stiff or singular problem)", t)
        last = h >= abs(t1 - t)
        if last:
            h = abs(t1 - t)
        y_new, f_new, err = _dp_step(rhs, t, y, f, direction * h, dense_error=True)
        scale = tol * np.maximum(1.0, np.maximum(np.abs(y), np.abs(y_new)))
        err_norm = float(np.max(np.abs(err) / scale))
        if not math.isfinite(err_norm):
            h *= 0.2
            continue
        if err_norm <= 1.0:
            t = t1 if last else t + direction * h
            y, f = y_new, f_new
            ts.append(t)
            ys.append(y.copy())
            fs.append(f.copy())
            steps += 1
            factor = 5.0 if err_norm == 0 else min(5.0, 0.9 * err_norm ** -0.2)
            h = min(hmax, h * factor)
        else:
            h *= max(0.2, 0.9 * err_norm ** -0.2)
    return DenseSolution(ts, ys, fs, rhs, tol)


# -- quadrature -------------------------------------------------------------


def _finite(value, x):
    value = float(value)
    if not math.isfinite(value):
        raise DomainBreakdown(f"integrand is not finite at x={x:.17g}")
    return value


def adaptive_simpson(
    g: Callable[[float], float],
    a: float,
    b: float,
    tol: float = DEFAULT_QUAD_TOL,
    max_depth: int = 60,
) -> float:
    """Adaptive Simpson integral of ``g`` over [a, b] to absolute ``tol``."""
    if a == b:
        return 0.0
    sign = 1.0
    if a > b:
        a, b, sign = b, a, -1.0

    def ev(x):
        return _finite(g(x), x)

    fa, fb, fm = ev(a), ev(b), ev(0.5 * (a + b))
    whole = (b - a) / 6.0 * (fa + 4 * fm + fb)
    total = 0.0
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    while stack:
        lo, hi, flo, fmid, fhi, s, eps, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        fl, fr = ev(0.5 * (lo + mid)), ev(0.5 * (mid + hi))
        left = (mid - lo) / 6.0 * (flo + 4 * fl + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * fr + fhi)
        delta = left + right - s
        if abs(delta) <= 15 * eps or depth >= max_depth or mid in (lo, hi):
            if depth >= max_depth and abs(delta) > 15 * eps:
                raise DomainBreakdown(f"quadrature did not converge near x={mid:.17g}")
            total += left + right + delta / 15.0
        else:
            stack.append((lo, mid, flo, fl, fmid, left, 0.5 * eps, depth + 1))
            stack.append((mid, hi, fmid, fr, fhi, right, 0.5 * eps, depth + 1))
    return sign * total


def cumulative_quadrature(
    g: Callable[[float], float],
    a: float,
    grid: Sequence[float],
    tol: float = DEFAULT_QUAD_TOL,
) -> np.ndarray:
    """Values of the integral of ``g`` from ``a`` to each point of ``grid``.

    ``grid`` must be ordered (either direction).  Each panel between
    consecutive points is integrated by adaptive Simpson to ``tol``.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d sequence")
    d = np.diff(grid)
    if grid.size > 1 and not (np.all(d > 0) or np.all(d < 0)):
        raise ValueError("grid must be strictly monotone")
    out = np.empty_like(grid)
    acc = adaptive_simpson(g, a, grid[0], tol)
    out[0] = acc
    for i in range(1, grid.size):
        acc += adaptive_simpson(g, grid[i - 1], grid[i], tol)
        out[i] = acc
    return out


_GL_X, _GL_W = np.polynomial.legendre.leggauss(10)


def _vectorize(g):
    def gv(xs):
        try:
            out = np.asarray(g(xs), dtype=float)
            if out.shape == xs.shape:
                return out
        except (TypeError, ValueError):
            pass
        return np.array([float(g(x)) for x in xs])

    return gv


class CumulativeIntegral:
    """G(x) = offset + integral of g from ``anchor`` to x, queryable anywhere.

    Cells are built lazily outward from the anchor, in chunks, and subdivided
    until a 10-point Gauss-Legendre rule agrees with its two halves to
    ``tol``.  A query adds the partial Gauss rule over its own cell, so G is
    continuous at cell boundaries and analytic inside each cell.
    """

    def __init__(
        self,
        g: Callable,
        anchor: float,
        *,
        offset: float = 0.0,
        domain: tuple[float, float] = (-math.inf, math.inf),
        chunk: float = 1.0,
        tol: float = DEFAULT_QUAD_TOL,
        max_depth: int = 40,
    ):
        self.g = _vectorize(g)
        self.anchor = float(anchor)
        self.offset = float(offset)
        self.domain = domain
        self.chunk = float(chunk)
        self.tol = tol
        self.max_depth = max_depth
        # cells are [edges[i], edges[i+1]] with values[i] = G(edges[i])
        self._edges = [self.anchor]
        self._values = [self.offset]
        self._lock = threading.Lock()

    def _gl(self, a, b):
        half = 0.5 * (b - a)
        xs = 0.5 * (a + b) + half * _GL_X
        vals = self.g(xs)
        if not np.all(np.isfinite(vals)):
            bad = xs[~np.isfinite(vals)][0]
            raise DomainBreakdown(f"integrand is not finite at x={bad:.17g}")
        return half * float(_GL_W @ vals)

    def _cells(self, a, b, depth=0):
        whole = self._gl(a, b)
        mid = 0.5 * (a + b)
        halves = self._gl(a, mid) + self._gl(mid, b)
        if abs(whole - halves) <= self.tol * max(1.0, abs(halves)):
            return [(b, whole)]
        if depth >= self.max_depth:
            raise DomainBreakdown(f"quadrature did not converge near x={mid:.17g}")
        return self._cells(a, mid, depth + 1) + self._cells(mid, b, depth + 1)

    def _extend_to(self, x):
        lo, hi = self.domain
        if not lo <= x <= hi:
            raise DomainBreakdown(f"x={x:.17g} outside integration domain {self.domain}")
        while x > self._edges[-1]:
            a = self._edges[-1]
            b = min(a + self.chunk, hi)
            for edge, inc in self._cells(a, b):
                self._values.append(self._values[-1] + inc)
                self._edges.append(edge)
            if b == hi:
                break
        while x < self._edges[0]:
            b = self._edges[0]
            a = max(b - self.chunk, lo)
            cells = self._cells(a, b)
            # rebuild leftward: the cell list runs a -> b
            starts = [a] + [edge for edge, _ in cells[:-1]]
            incs = [inc for _, inc in cells]
            new_edges, new_values = [], []
            value = self._values[0]
            for start, inc in zip(reversed(starts), reversed(incs)):
                value -= inc
                new_edges.append(start)
                new_values.append(value)
            self._edges[:0] = new_edges[::-1]
            self._values[:0] = new_values[::-1]
            if a == lo:
                break

    def __call__(self, x):
        if np.ndim(x):
            return np.array([self(float(v)) for v in np.ravel(x)]).reshape(np.shape(x))
        x = float(x)
        with self._lock:
            if x > self._edges[-1] or x < self._edges[0]:
                self._extend_to(x)
            i = _bisect.bisect_right(self._edges, x) - 1
            i = min(max(i, 0), len(self._edges) - 1)
            start, base = self._edges[i], self._values[i]
        if x == start:
            return base
        return base + self._gl(start, x)

    def integrand(self, x):
        return float(self.g(np.array([float(x)]))[0])


# -- root finding -------------------------------------------------------------


def invert_monotone(
    F: Callable[[float], float],
    target: float,
    bracket: tuple[float, float],
    tol: float = DEFAULT_INVERT_TOL,
    *,
    derivative: Callable[[float], float] | None = None,
    guess: float | None = None,
    maxiter: int = 200,
) -> float:
    """Solve F(y) = target for increasing F on ``bracket``.

    Safeguarded Newton (when ``derivative`` is given) or Illinois secant
    steps, falling back to bisection whenever a step leaves the bracket or
    stalls.  ``tol = 0`` iterates to machine precision.

    Raises:
        DomainBreakdown: ``target`` is outside [F(lo), F(hi)].
    """
    a, b = float(bracket[0]), float(bracket[1])
    if a > b:
        a, b = b, a
    fa, fb = F(a) - target, F(b) - target
    if fa > 0:
        if abs(fa) <= tol:
            return a
        raise DomainBreakdown(f"target {target:.17g} below bracket image F({a:.17g})")
    if fb < 0:
        if abs(fb) <= tol:
            return b
        raise DomainBreakdown(f"target {target:.17g} above bracket image F({b:.17g})")
    if fa == 0:
        return a
    if fb == 0:
        return b

    x = guess if guess is not None and a < guess < b else None
    fx = F(x) - target if x is not None else None
    side = 0
    for _ in range(maxiter):
        if fx is not None and abs(fx) <= tol and (tol > 0 or fx == 0):
            return x
        width = b - a
        if width <= 2 * EPS * max(abs(a), abs(b), 1e-300):
            return x if x is not None and abs(fx) <= min(abs(fa), abs(fb)) else (a if -fa < fb else b)
        cand = None
        if derivative is not None and x is not None:
            d = derivative(x)
            if d > 0 and math.isfinite(d):
                cand = x - fx / d
                if x is not None and abs(cand - x) <= 2 * EPS * abs(x) and tol == 0:
                    return x
        if cand is None or not a < cand < b:
            cand = a - fa * (b - a) / (fb - fa)
        if not a < cand < b:
            cand = 0.5 * (a + b)
        fc = F(cand) - target
        if fc < 0:
            a, fa = cand, fc
            if side == -1:
                fb *= 0.5
            side = -1
        elif fc > 0:
            b, fb = cand, fc
            if side == 1:
                fa *= 0.5
            side = 1
        else:
            return cand
        # stalled secant: force a bisection step
        if b - a > 0.5 * width and derivative is None:
            m = 0.5 * (a + b)
            fm = F(m) - target
            if fm < 0:
                a, fa = m, fm
            elif fm > 0:
                b, fb = m, fm
            else:
                return m
        x, fx = cand, fc
    return x


def bisect_root(g: Callable[[float], float], a: float, b: float, xtol: float = 0.0) -> float:
    """Root of ``g`` in [a, b] given a sign change, by bisection."""
    ga, gb = g(a), g(b)
    if ga == 0:
        return a
    if gb == 0:
        return b
    if ga * gb > 0:
        raise ValueError("no sign change in bracket")
    for _ in range(200):
        m = 0.5 * (a + b)
        if m in (a, b) or b - a <= xtol:
            return m
        gm = g(m)
        if gm == 0:
            return m
        if (gm > 0) == (ga > 0):
            a, ga = m, gm
        else:
            b = m
    return 0.5 * (a + b)


def sign_change_roots(g: Callable[[float], float], a: float, b: float, samples: int = 2001,
                      scan: Callable | None = None) -> list[float]:
    """Zeros of ``g`` on [a, b] detected by sign changes on a uniform scan.

    ``scan`` is an optional cheap vectorized approximation of ``g`` used
    only for detection; roots are always refined on ``g`` itself.
    """
    xs = np.linspace(a, b, samples)
    vals = np.asarray(scan(xs), dtype=float) if scan is not None else np.array([g(x) for x in xs])
    roots = []
    for i in range(samples - 1):
        v0, v1 = vals[i], vals[i + 1]
        if v0 == 0:
            roots.append(float(xs[i]))
        elif v0 * v1 < 0:
            roots.append(bisect_root(g, float(xs[i]), float(xs[i + 1])))
    if vals[-1] == 0:
        roots.append(float(xs[-1]))
    return roots
