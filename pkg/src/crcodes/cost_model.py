"""
Exact cost formulas and the cut-constraint system for coordinated repair.

All quantities are :class:`fractions.Fraction`.  A code instance is a
:class:`CodeParams`; a choice of stored/transferred amounts is a
:class:`CostPoint`.  A point is correct for a code when, for every recovery
scenario ``u`` (a composition of k with parts in ``[1, t]``)::

    sum_i u_i * min(alpha, (d - sum_{j<i} u_j) * beta + (t - u_i) * beta') >= M
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import NamedTuple, Optional

from .errors import InvalidParams, InvalidScenario, ScaleExceeded

MAX_ENUM_K = 24

CLASSIC_SCHEMES = ("ecc_eager", "ecc_lazy", "msr", "mbr", "mfr")


def _frac(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@dataclass(frozen=True)
class CodeParams:
    """A code instance (n, k, d, t, M).  ``n`` defaults to ``d + t``."""

    k: int
    d: int
    t: int = 1
    file_size: Fraction = Fraction(1)
    n: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "file_size", _frac(self.file_size))
        if self.n is None:
            object.__setattr__(self, "n", self.d + self.t)
        if self.k < 1:
            raise InvalidParams(f"k must be >= 1, got {self.k}")
        if self.t < 1:
            raise InvalidParams(f"t must be >= 1, got {self.t}")
        if self.d < self.k:
            raise InvalidParams(f"need d >= k, got d={self.d} < k={self.k}")
        if self.d + self.t > self.n:
            raise InvalidParams(f"need d + t <= n, got {self.d} + {self.t} > {self.n}")
        if self.file_size <= 0:
            raise InvalidParams("file size must be positive")

    @property
    def block(self) -> Fraction:
        """M / k, the size of one original block."""
        return self.file_size / self.k

    @property
    def guaranteed(self) -> bool:
        """Whether correctness is proven for this instance (t divides k)."""
        return self.k % self.t == 0


@dataclass(frozen=True)
class CostPoint:
    """Amounts stored per device and moved per transfer, in bytes.

    ``gamma`` is derived as ``d*beta + (t-1)*beta_prime`` by the
    constructors below.  ``guaranteed`` is False when the formulas were
    evaluated outside the range where correctness is proven.
    """

    alpha: Fraction
    beta: Fraction
    beta_prime: Fraction
    gamma: Fraction
    guaranteed: bool = True

    def __post_init__(self):
        for name in ("alpha", "beta", "beta_prime", "gamma"):
            v = _frac(getattr(self, name))
            if v < 0:
                raise InvalidParams(f"{name} must be >= 0, got {v}")
            object.__setattr__(self, name, v)

    @classmethod
    def from_transfers(cls, d, t, alpha, beta, beta_prime, guaranteed=True) -> "CostPoint":
        alpha, beta, beta_prime = _frac(alpha), _frac(beta), _frac(beta_prime)
        return cls(alpha, beta, beta_prime, d * beta + (t - 1) * beta_prime, guaranteed)

    def scaled(self, beta=1, beta_prime=1, d=None, t=None) -> "CostPoint":
        """Copy with beta / beta' multiplied by the given factors.

        gamma is recomputed when d and t are supplied, otherwise it is
        rescaled from the transfer terms it already encodes.
        """
        b = self.beta * _frac(beta)
        bp = self.beta_prime * _frac(beta_prime)
        if d is not None and t is not None:
            return replace(self, beta=b, beta_prime=bp, gamma=d * b + (t - 1) * bp)
        return replace(self, beta=b, beta_prime=bp)

    def normalized(self, block: Fraction) -> tuple:
        return tuple(x / block for x in (self.alpha, self.beta, self.beta_prime, self.gamma))


@dataclass(frozen=True)
class RecoveryScenario:
    """How many of the k contacted devices come from each repair group."""

    u: tuple

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(int(x) for x in self.u))
        if not self.u or any(x < 1 for x in self.u):
            raise InvalidScenario(f"scenario parts must be positive: {self.u}")

    @property
    def g(self) -> int:
        return len(self.u)

    def validate(self, k: int, t: int) -> None:
        if sum(self.u) != k:
            raise InvalidScenario(f"scenario {self.u} does not sum to k={k}")
        if max(self.u) > t:
            raise InvalidScenario(f"scenario {self.u} has a part larger than t={t}")


@dataclass(frozen=True)
class Constraint:
    """One cut constraint: ``lhs(point) >= rhs``."""

    params: CodeParams
    scenario: RecoveryScenario
    rhs: Fraction = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "rhs", self.params.file_size)

    def terms(self, c: CostPoint) -> list:
        p = self.params
        out, prefix = [], 0
        for ui in self.scenario.u:
            flow = (p.d - prefix) * c.beta + (p.t - ui) * c.beta_prime
            out.append(ui * min(c.alpha, flow))
            prefix += ui
        return out

    def lhs(self, c: CostPoint) -> Fraction:
        return sum(self.terms(c), Fraction(0))

    def satisfied(self, c: CostPoint) -> bool:
        return self.lhs(c) >= self.rhs


def enumerate_scenarios(k: int, t: int) -> list:
    """All compositions of k into parts in [1, t], in lexicographic order."""
    if k < 1 or t < 1:
        raise InvalidParams(f"need k >= 1 and t >= 1, got k={k}, t={t}")
    if k > MAX_ENUM_K:
        raise ScaleExceeded(f"scenario enumeration is capped at k <= {MAX_ENUM_K}, got {k}")
    out = []

    def rec(rest, prefix):
        if rest == 0:
            out.append(RecoveryScenario(tuple(prefix)))
            return
        for part in range(1, min(t, rest) + 1):
            prefix.append(part)
            rec(rest - part, prefix)
            prefix.pop()

    rec(k, [])
    return out


def count_scenarios(k: int, t: int) -> int:
    c = [1] + [0] * k
    for m in range(1, k + 1):
        c[m] = sum(c[m - p] for p in range(1, min(t, m) + 1))
    return c[k]


def extremal_scenarios(k: int, t: int) -> list:
    """The all-t and all-one scenarios, which bind at the closed-form points."""
    big = [t] * (k // t) + ([k % t] if k % t else [])
    out = [RecoveryScenario(tuple(big))]
    ones = RecoveryScenario((1,) * k)
    if ones != out[0]:
        out.append(ones)
    return out


class CutMinimum(NamedTuple):
    value: Fraction
    slope: Fraction
    scenario: RecoveryScenario


def minimize_cut(k, t, term):
    """Minimise ``sum_i term(prefix_i, u_i)`` over compositions of k with parts <= t.

    ``term(prefix, part)`` returns a ``(value, slope)`` pair; pairs are
    compared lexicographically and summed, so the result also carries the
    right-derivative of the minimum when terms are piecewise linear in some
    parameter.  Ties prefer larger parts first.
    """
    best = [None] * (k + 1)
    best[k] = (Fraction(0), Fraction(0), ())
    for prefix in range(k - 1, -1, -1):
        cand = None
        for part in range(min(t, k - prefix), 0, -1):
            v, s = term(prefix, part)
            tail = best[prefix + part]
            key = (v + tail[0], s + tail[1])
            if cand is None or key < cand[:2]:
                cand = (key[0], key[1], (part,) + tail[2])
        best[prefix] = cand
    v, s, u = best[0]
    return CutMinimum(v, s, RecoveryScenario(u))


def min_constraint(p: CodeParams, c: CostPoint) -> CutMinimum:
    """The scenario with the smallest cut for this point, found by dynamic programming."""

    def term(prefix, part):
        flow = (p.d - prefix) * c.beta + (p.t - part) * c.beta_prime
        return part * min(c.alpha, flow), Fraction(0)

    return minimize_cut(p.k, p.t, term)


class CheckResult(NamedTuple):
    satisfied: bool
    violated: Optional[Constraint]
    guaranteed: bool


def check_correct(p: CodeParams, c: CostPoint) -> CheckResult:
    """Exact test of every cut constraint at ``c``.

    The extremal scenarios are probed first so the reported witness is the
    binding graph of the optimality argument when that one fails; otherwise
    the witness is the scenario with the smallest cut.
    """
    for s in extremal_scenarios(p.k, p.t):
        con = Constraint(p, s)
        if not con.satisfied(c):
            return CheckResult(False, con, p.guaranteed)
    worst = min_constraint(p, c)
    if worst.value < p.file_size:
        return CheckResult(False, Constraint(p, worst.scenario), p.guaranteed)
    return CheckResult(True, None, p.guaranteed)


def violated_constraints(p: CodeParams, c: CostPoint) -> list:
    """Every violated constraint, by exhaustive enumeration (k <= 24)."""
    return [con for s in enumerate_scenarios(p.k, p.t) if not (con := Constraint(p, s)).satisfied(c)]


def cut_formula(p: CodeParams, c: CostPoint, s: RecoveryScenario) -> Fraction:
    s.validate(p.k, p.t)
    return Constraint(p, s).lhs(c)


# closed forms


def mscr(p: CodeParams) -> CostPoint:
    """Minimum-storage coordinated point."""
    b = p.block
    beta = b / (p.d - p.k + p.t)
    return CostPoint.from_transfers(p.d, p.t, b, beta, beta, p.guaranteed)


def mbcr(p: CodeParams) -> CostPoint:
    """Minimum-bandwidth coordinated point; stores exactly what it downloads."""
    b = p.block
    den = 2 * p.d - p.k + p.t
    alpha = b * (2 * p.d + p.t - 1) / den
    return CostPoint.from_transfers(p.d, p.t, alpha, 2 * b / den, b / den, p.guaranteed)


def arc(n: int, k: int, t: int, file_size, d: Optional[int] = None) -> CostPoint:
    """Adaptive point for a repair of t devices from d live ones (default d = n - t)."""
    d = n - t if d is None else d
    if d < k:
        raise InvalidParams(f"adaptive repair needs d >= k, got d={d}, k={k}")
    b = _frac(file_size) / k
    beta = b / (d - k + t)
    return CostPoint.from_transfers(d, t, b, beta, beta)


def classic_costs(p: CodeParams, scheme: str) -> CostPoint:
    """Per-repaired-device costs of the pre-existing schemes.

    ``ecc_eager`` and ``ecc_lazy`` behave as if d = k: the repairing device
    downloads k blocks.  For ``ecc_lazy`` the t devices share one download,
    which averages to (k + t - 1) / t blocks per device.  ``msr``, ``mbr``
    and ``mfr`` repair every device on its own from d live devices.
    """
    b = p.block
    k, d, t = p.k, p.d, p.t
    if scheme == "ecc_eager":
        return CostPoint.from_transfers(k, 1, b, b, 0)
    if scheme == "ecc_lazy":
        share = b / t
        return CostPoint.from_transfers(k, t, b, share, share)
    if scheme in ("msr", "mfr"):
        beta = b / (d - k + 1)
        return CostPoint.from_transfers(d, 1, b, beta, 0)
    if scheme == "mbr":
        den = 2 * d - k + 1
        beta = 2 * b / den
        return CostPoint.from_transfers(d, 1, d * beta, beta, 0)
    raise InvalidParams(f"unknown scheme {scheme!r}; expected one of {CLASSIC_SCHEMES}")


def threshold_curve(n: int, k: int, file_size, point: str) -> list:
    """(t, gamma) for t = 1..n-k in a system of fixed size n = d + t."""
    if n <= k:
        raise InvalidParams(f"need n > k, got n={n}, k={k}")
    fn = {"mscr": mscr, "mbcr": mbcr}.get(point)
    if fn is None:
        raise InvalidParams(f"point must be 'mscr' or 'mbcr', got {point!r}")
    out = []
    for t in range(1, n - k + 1):
        p = CodeParams(k=k, d=n - t, t=t, file_size=file_size, n=n)
        out.append((t, fn(p).gamma))
    return out


def round_half_up(x: Fraction, digits: int = 1) -> Fraction:
    scale = 10**digits
    return Fraction((x * scale + Fraction(1, 2)).__floor__(), scale)
