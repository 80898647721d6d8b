"""
Minimum repair cost at a given storage amount, between the MSCR and MBCR points.

At fixed alpha the smallest cut over all scenarios is a concave,
nondecreasing, piecewise-linear function of beta' (for fixed beta), so the
smallest feasible beta' is found exactly by Newton steps from the left: the
dynamic program in :func:`crcodes.cost_model.minimize_cut` returns both the
minimum and its right slope.  gamma(beta) = d*beta + (t-1)*beta'_min(beta)
is convex; it is minimised by golden-section search in floats, then the
result is rebuilt in exact rationals and checked.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .cost_model import CodeParams, CostPoint, check_correct, mbcr, minimize_cut, mscr
from .errors import Infeasible, InvalidParams

_GOLD = (math.sqrt(5) - 1) / 2


@dataclass(frozen=True)
class TradeoffPoint:
    alpha: Fraction
    beta: Fraction
    beta_prime: Fraction
    gamma: Fraction
    normalized: bool = False

    def cost_point(self) -> CostPoint:
        return CostPoint(self.alpha, self.beta, self.beta_prime, self.gamma)

    def normalize(self, block: Fraction) -> "TradeoffPoint":
        if self.normalized:
            return self
        return TradeoffPoint(self.alpha / block, self.beta / block, self.beta_prime / block,
                             self.gamma / block, True)


def default_tolerance(p: CodeParams) -> Fraction:
    return p.block * Fraction(1, 10**9)


def _smallest_root(k, t, target, term, start=0):
    """Smallest x >= start with F(x) >= target, F the concave DP minimum of ``term``.

    Returns None when F stays below target for all x.
    """
    x = start
    for _ in range(100_000):
        value, slope, _ = minimize_cut(k, t, lambda pre, part: term(pre, part, x))
        if value >= target:
            return x
        if slope <= 0:
            return None
        x = x + (target - value) / slope
    raise RuntimeError("Newton iteration did not terminate")


def _piece(alpha, part, a, b, x):
    """part * min(alpha, a + b*x) with its right derivative in x."""
    flow = a + b * x
    if flow < alpha:
        return part * flow, part * b
    return part * alpha, 0 * b


class _Problem:
    def __init__(self, p: CodeParams, alpha, exact: bool):
        self.p = p
        self.exact = exact
        num = (lambda v: Fraction(v)) if exact else float
        self.num = num
        self.alpha = num(alpha)
        # float search tolerates rounding just below the target
        self.M = num(p.file_size) if exact else float(p.file_size) * (1 - 1e-12)

    def beta_prime_min(self, beta):
        p, alpha = self.p, self.alpha

        def term(prefix, part, bp):
            return _piece(alpha, part, (p.d - prefix) * beta, p.t - part, bp)

        return _smallest_root(p.k, p.t, self.M, term, self.num(0))

    def beta_bounds(self):
        """Feasible beta range worth searching: [beta with beta' unbounded, beta with beta' = 0]."""
        p, alpha = self.p, self.alpha
        zero = self.num(0)

        def unbounded(prefix, part, b):
            if part < p.t:
                return part * alpha, zero
            return _piece(alpha, part, zero, p.d - prefix, b)

        def no_coord(prefix, part, b):
            return _piece(alpha, part, zero, p.d - prefix, b)

        lo = _smallest_root(p.k, p.t, self.M, unbounded, zero)
        hi = _smallest_root(p.k, p.t, self.M, no_coord, zero)
        return lo, hi

    def gamma(self, beta):
        bp = self.beta_prime_min(beta)
        if bp is None:
            return math.inf, None
        return self.p.d * beta + (self.p.t - 1) * bp, bp


def _exact_point(p: CodeParams, alpha: Fraction, beta: Fraction) -> Optional[TradeoffPoint]:
    prob = _Problem(p, alpha, exact=True)
    g, bp = prob.gamma(beta)
    if bp is None:
        return None
    return TradeoffPoint(alpha, beta, bp, g)


def _rational_candidates(x: float, lo: Fraction, hi: Fraction):
    seen = set()
    fx = Fraction(x)
    for bound in (10**2, 10**3, 10**4, 10**5, 10**6, 10**8, 10**10):
        c = fx.limit_denominator(bound)
        if lo <= c <= hi and c not in seen:
            seen.add(c)
            yield c
    if fx not in seen and lo <= fx <= hi:
        yield fx


def min_gamma_for_alpha(p: CodeParams, alpha, tolerance=None) -> TradeoffPoint:
    """Smallest gamma = d*beta + (t-1)*beta' over all correct points storing ``alpha``.

    The returned point is exactly feasible and its gamma is within
    ``tolerance`` of the optimum.  Curve endpoints snap to the closed forms.
    """
    alpha = Fraction(alpha)
    tol = default_tolerance(p) if tolerance is None else Fraction(tolerance)
    if tol <= 0:
        raise InvalidParams("tolerance must be positive")
    if alpha < p.block:
        raise Infeasible(f"alpha={alpha} is below M/k={p.block}; no correct code exists")
    lo_pt, hi_pt = mscr(p), mbcr(p)
    if alpha >= hi_pt.alpha:
        return TradeoffPoint(hi_pt.alpha, hi_pt.beta, hi_pt.beta_prime, hi_pt.gamma)

    exact = _Problem(p, alpha, exact=True)
    beta_lo, beta_hi = exact.beta_bounds()
    if beta_lo is None or beta_hi is None:
        raise Infeasible(f"no feasible transfers at alpha={alpha}")

    if p.t == 1 or beta_lo == beta_hi:
        best = _exact_point(p, alpha, beta_hi if p.t == 1 else beta_lo)
    else:
        best = _search(p, alpha, beta_lo, beta_hi, tol)

    for closed in (lo_pt,):
        if alpha == closed.alpha and abs(best.gamma - closed.gamma) <= tol:
            return TradeoffPoint(closed.alpha, closed.beta, closed.beta_prime, closed.gamma)
    if not check_correct(p, best.cost_point()).satisfied:
        raise RuntimeError(f"optimizer produced an infeasible point {best}")
    return best


def _search(p, alpha, beta_lo: Fraction, beta_hi: Fraction, tol: Fraction) -> TradeoffPoint:
    fprob = _Problem(p, alpha, exact=False)
    a, b = float(beta_lo), float(beta_hi)
    # gamma is convex in beta with slopes bounded by d + (t-1)*d
    width_goal = float(tol) / (4 * p.d * p.t)
    c = b - _GOLD * (b - a)
    e = a + _GOLD * (b - a)
    fc, fe = fprob.gamma(c)[0], fprob.gamma(e)[0]
    while b - a > width_goal:
        if fc <= fe:
            b, e, fe = e, c, fc
            c = b - _GOLD * (b - a)
            fc = fprob.gamma(c)[0]
        else:
            a, c, fc = c, e, fe
            e = a + _GOLD * (b - a)
            fe = fprob.gamma(e)[0]
    x = (a + b) / 2

    best = None
    for cand in [beta_lo, beta_hi, *_rational_candidates(x, beta_lo, beta_hi)]:
        pt = _exact_point(p, alpha, cand)
        if pt is not None and (best is None or pt.gamma < best.gamma):
            best = pt
    return best


def trace_curve(p: CodeParams, samples: int, tolerance=None) -> list:
    """Optimal (alpha, gamma) points at ``samples`` evenly spaced alphas from MSCR to MBCR."""
    if samples < 2:
        raise InvalidParams("samples must be >= 2")
    lo, hi = mscr(p).alpha, mbcr(p).alpha
    out = []
    for i in range(samples):
        alpha = lo + (hi - lo) * Fraction(i, samples - 1)
        out.append(min_gamma_for_alpha(p, alpha, tolerance))
    return out
