"""Scalar numerical kernels shared by the scheme solvers.

Contents:
  * the exponential integral E1 (real positive argument), plus a
    log-argument variant for thresholds far below the float range;
  * bracketed root finding for monotone functions of a positive unknown;
  * globally adaptive Simpson quadrature for integrals over [a, inf).

Everything here is a pure function of its inputs.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass
from typing import Callable

EULER_GAMMA = 0.57721566490153286060651209008240243

# Below this log-argument the series tail x - x**2/4 + ... is under one ulp of E1.
_E1_LOG_SMALL = -40.0
_LN2 = math.log(2.0)


class NumericsError(ArithmeticError):
    """Base class for numerical failures (solver non-convergence etc.)."""


class BracketError(NumericsError):
    """Could not bracket the target value within the expansion budget."""


class NonMonotoneError(NumericsError):
    """Function values contradict the declared monotonicity."""


class QuadratureError(NumericsError):
    """Adaptive quadrature did not reach the requested tolerance."""


@dataclass(frozen=True)
class Tolerance:
    """Stopping rules for the iterative kernels.

    Attributes:
        rel: relative tolerance (on the residual for root finding, on the
            integral for quadrature).
        abs: absolute tolerance; for root finding this is the bracket width
            in log-argument space.
        max_iter: bracket doublings for root finding, panel budget for
            quadrature.
    """

    rel: float = 1e-12
    abs: float = 0.0
    max_iter: int = 200

    def __post_init__(self):
        if not (self.rel > 0):
            raise ValueError(f"rel must be > 0, got {self.rel}")
        if not (self.abs >= 0):
            raise ValueError(f"abs must be >= 0, got {self.abs}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter}")


ROOT_TOL = Tolerance(rel=1e-13, abs=0.0, max_iter=200)
QUAD_TOL = Tolerance(rel=1e-10, abs=0.0, max_iter=20000)


# ---------------------------------------------------------------------------
# Exponential integral
# ---------------------------------------------------------------------------

def _e1_series(x: float, log_x: float) -> float:
    # E1(x) = -gamma - ln x + sum_{k>=1} (-1)^(k+1) x^k / (k k!)
    term = x
    acc = x
    k = 1
    while True:
        k += 1
        term *= -x / k
        inc = term / k
        acc += inc
        if abs(inc) <= 1e-17 * abs(acc) or k > 200:
            break
    return -EULER_GAMMA - log_x + acc


def _e1_continued_fraction(x: float) -> float:
    # Modified Lentz evaluation of e^x E1(x) = 1/(x+1- 1/(x+3- 4/(x+5- ...)))
    tiny = 1e-300
    b = x + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, 10000):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) <= 1e-16:
            break
    return h * math.exp(-x)


def exp_integral_e1(x: float) -> float:
    """Exponential integral ``E1(x) = int_x^inf exp(-t)/t dt`` for real x > 0.

    Uses the convergent power series below 1 and a continued fraction above.
    Relative error is at the 1e-15 level on both branches. Returns 0.0 once
    the result underflows (x above roughly 740).
    """
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise ValueError(f"E1 requires a finite positive argument, got {x!r}")
    if x < 1.0:
        return _e1_series(x, math.log(x))
    return _e1_continued_fraction(x)


def exp_integral_e1_log(log_x: float) -> float:
    """E1 evaluated at ``exp(log_x)``.

    Thresholds such as ``T / q`` drop far below the smallest double when
    ``q`` is of order ``exp(P/T)``; this keeps the logarithmic leading term
    exact in that regime.
    """
    log_x = float(log_x)
    if math.isnan(log_x) or log_x == math.inf:
        raise ValueError(f"invalid log-argument {log_x!r}")
    if log_x == -math.inf:
        return math.inf
    if log_x < _E1_LOG_SMALL:
        return -EULER_GAMMA - log_x + math.exp(log_x)
    x = math.exp(log_x)
    if x < 1.0:
        return _e1_series(x, log_x)
    if x == math.inf:
        return 0.0
    return _e1_continued_fraction(x)


def log1mexp(log_x: float) -> float:
    """``ln(1 - exp(-x))`` for ``x = exp(log_x) >= 0``, accurate for tiny x."""
    if log_x == -math.inf:
        return -math.inf
    if log_x < _E1_LOG_SMALL:
        # 1 - e^{-x} = x (1 - x/2 + ...)
        return log_x - 0.5 * math.exp(log_x)
    x = math.exp(log_x)
    if x < _LN2:
        return math.log(-math.expm1(-x))
    return math.log1p(-math.exp(-x))


def logsumexp(values) -> float:
    """Stable ``ln(sum(exp(v)))``; empty or all -inf input gives -inf."""
    vals = [v for v in values if v != -math.inf]
    if not vals:
        return -math.inf
    m = max(vals)
    if m == math.inf:
        return math.inf
    return m + math.log(math.fsum(math.exp(v - m) for v in vals))


# ---------------------------------------------------------------------------
# Root finding
# ---------------------------------------------------------------------------

def find_log_root_monotone(
    h: Callable[[float], float],
    log_seed: float,
    increasing: bool,
    target: float,
    tol: Tolerance = ROOT_TOL,
) -> float:
    """Solve ``h(y) = target`` for y = ln x, h monotone in y.

    The bracket grows outward from ``log_seed`` with a step that doubles on
    each expansion (ln 2 first, i.e. x doubles), so both x ~ 1 and
    x ~ exp(2000) are reached within a few dozen evaluations. Bisection in y
    then runs until the residual meets ``tol.rel``, the bracket width meets
    ``tol.abs``, or the bracket collapses to adjacent doubles.
    """
    sign = 1.0 if increasing else -1.0
    scale = abs(target)
    residual_ok = tol.rel * scale

    def g(y):
        v = h(y)
        if math.isnan(v):
            raise NonMonotoneError(f"function returned NaN at log-argument {y!r}")
        return sign * (v - target)

    y0 = float(log_seed)
    g0 = g(y0)
    if g0 == 0.0 or abs(g0) <= residual_ok and g0 != math.inf:
        return y0

    # g increasing in y by construction; move right if g0 < 0, else left.
    direction = 1.0 if g0 < 0 else -1.0
    step = _LN2
    y_prev, g_prev = y0, g0
    for _ in range(int(tol.max_iter)):
        y_new = y_prev + direction * step
        g_new = g(y_new)
        if direction * (g_new - g_prev) < 0:
            raise NonMonotoneError(
                f"values out of order between log-arguments {y_prev!r} and {y_new!r}"
            )
        if (g_new >= 0) if direction > 0 else (g_new <= 0):
            lo, hi = (y_prev, y_new) if direction > 0 else (y_new, y_prev)
            g_lo, g_hi = (g_prev, g_new) if direction > 0 else (g_new, g_prev)
            break
        y_prev, g_prev = y_new, g_new
        step *= 2.0
    else:
        raise BracketError(
            f"target {target!r} not bracketed after {tol.max_iter} expansions from {log_seed!r}"
        )

    if g_lo > 0 or g_hi < 0:
        raise NonMonotoneError("bracket endpoint values out of order")
    if g_lo == 0.0:
        return lo
    if g_hi == 0.0:
        return hi

    while True:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        gm = g(mid)
        if abs(gm) <= residual_ok:
            return mid
        if gm < 0:
            lo = mid
        else:
            hi = mid
        if tol.abs > 0 and hi - lo <= tol.abs:
            break
    # Adjacent doubles: prefer the endpoint with the smaller residual.
    return lo if abs(g(lo)) <= abs(g(hi)) else hi


def find_root_monotone(
    f: Callable[[float], float],
    bracket_seed: float,
    increasing: bool,
    target: float,
    tol: Tolerance = ROOT_TOL,
) -> float:
    """Solve ``f(x) = target`` for x > 0 where f is strictly monotone.

    Example:
        >>> round(find_root_monotone(lambda x: x, 1.0, True, 3.0), 12)
        3.0
    """
    if not (bracket_seed > 0 and math.isfinite(bracket_seed)):
        raise ValueError(f"bracket_seed must be positive and finite, got {bracket_seed!r}")

    def h(y):
        try:
            x = math.exp(y)
        except OverflowError:
            x = math.inf
        if x == 0.0 or x == math.inf:
            raise BracketError(f"bracket left the float range at log-argument {y!r}")
        return f(x)

    return math.exp(find_log_root_monotone(h, math.log(bracket_seed), increasing, target, tol))


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def _adaptive_simpson(h, a, b, tol: Tolerance, n_init=8):
    """Globally adaptive Simpson on [a, b]; the panel with the largest error
    estimate is bisected first."""
    heap = []
    total = 0.0
    err_total = 0.0
    xs = [a + (b - a) * i / (2 * n_init) for i in range(2 * n_init + 1)]
    xs[-1] = b
    fs = [h(x) for x in xs]
    for i in range(n_init):
        x0, x2 = xs[2 * i], xs[2 * i + 2]
        f0, f1, f2 = fs[2 * i], fs[2 * i + 1], fs[2 * i + 2]
        panel = _make_panel(h, x0, x2, f0, f1, f2)
        heapq.heappush(heap, panel)
        total += panel[2]
        err_total += -panel[0]

    n_panels = n_init
    while True:
        if err_total <= max(tol.abs, tol.rel * abs(total)):
            # re-sum exactly before the final decision
            total = math.fsum(p[2] for p in heap)
            err_total = math.fsum(-p[0] for p in heap)
            if err_total <= max(tol.abs, tol.rel * abs(total)):
                return total
        if n_panels >= tol.max_iter:
            raise QuadratureError(
                f"no convergence on [{a!r}, {b!r}] after {n_panels} panels "
                f"(error estimate {err_total:.3g}, value {total:.6g})"
            )
        neg_err, _, value, x0, x2, f0, f1, f2, fl, fr = heapq.heappop(heap)
        total -= value
        err_total += neg_err
        xm = 0.5 * (x0 + x2)
        left = _make_panel(h, x0, xm, f0, fl, f1)
        right = _make_panel(h, xm, x2, f1, fr, f2)
        for panel in (left, right):
            heapq.heappush(heap, panel)
            total += panel[2]
            err_total += -panel[0]
        n_panels += 1


def _make_panel(h, x0, x2, f0, f1, f2):
    xm = 0.5 * (x0 + x2)
    fl = h(0.5 * (x0 + xm))
    fr = h(0.5 * (xm + x2))
    w = x2 - x0
    coarse = w * (f0 + 4.0 * f1 + f2) / 6.0
    fine = w * (f0 + 4.0 * fl + 2.0 * f1 + 4.0 * fr + f2) / 12.0
    diff = fine - coarse
    err = abs(diff)
    value = fine + diff / 15.0
    if not math.isfinite(value):
        raise QuadratureError(f"non-finite integrand on [{x0!r}, {x2!r}]")
    # (neg_err, tiebreak, value, x0, x2, f0, f1, f2, fl, fr)
    return (-err, x0, value, x0, x2, f0, f1, f2, fl, fr)


def integrate_tail(g: Callable[[float], float], lower: float, tol: Tolerance = QUAD_TOL) -> float:
    """``int_lower^inf g(t) dt`` for a smooth integrand with exponential-type decay.

    The range is split at 1. Below it the substitution t = exp(v) absorbs a
    1/t singularity at the origin; above it the tail is mapped onto (0, 1]
    through u = exp(-(t - c)). ``lower == 0`` integrates [0, 1] directly and
    so needs g finite at 0.
    """
    lower = float(lower)
    if not math.isfinite(lower) or lower < 0:
        raise ValueError(f"lower limit must be finite and >= 0, got {lower!r}")

    parts = []
    c = max(lower, 1.0)
    if lower < 1.0:
        if lower == 0.0:
            parts.append(_adaptive_simpson(g, 0.0, 1.0, tol))
        else:
            def head(v):
                t = math.exp(v)
                return g(t) * t
            parts.append(_adaptive_simpson(head, math.log(lower), 0.0, tol))

    def tail(u):
        if u <= 0.0:
            return 0.0
        return g(c - math.log(u)) / u

    parts.append(_adaptive_simpson(tail, 0.0, 1.0, tol))
    return math.fsum(parts)
