import random
from fractions import Fraction as F

import numpy as np
import pytest
from scipy.optimize import linprog

from crcodes.cost_model import CodeParams, CostPoint, check_correct, classic_costs, enumerate_scenarios, mbcr, mscr
from crcodes.errors import Infeasible, InvalidParams
from crcodes.tradeoff import default_tolerance, min_gamma_for_alpha, trace_curve


def lp_min_gamma(p, alpha):
    """Oracle: the same problem as a linear program.

    Each term u_i*min(alpha, a*beta + b*beta') becomes u_i*m with
    m <= alpha and m <= a*beta + b*beta'.
    """
    groups = []
    for s in enumerate_scenarios(p.k, p.t):
        seen, terms = 0, []
        for ui in s.u:
            terms.append((ui, p.d - seen, p.t - ui))
            seen += ui
        groups.append(terms)
    nterms = sum(len(g) for g in groups)
    nvar = 2 + nterms
    a_ub, b_ub = [], []
    j = 2
    for terms in groups:
        total = np.zeros(nvar)
        for ui, a, b in terms:
            row = np.zeros(nvar)
            row[j], row[0], row[1] = 1, -a, -b
            a_ub.append(row)
            b_ub.append(0.0)
            total[j] = -ui
            j += 1
        a_ub.append(total)
        b_ub.append(-float(p.file_size))
    cost = np.zeros(nvar)
    cost[0], cost[1] = p.d, p.t - 1
    bounds = [(0, None), (0, None)] + [(0, float(alpha))] * nterms
    res = linprog(cost, A_ub=np.array(a_ub), b_ub=b_ub, bounds=bounds, method="highs")
    assert res.status == 0
    return res.fun


CASES = [(4, 5, 2), (6, 7, 3), (6, 8, 2), (4, 4, 2), (6, 6, 3), (5, 7, 1), (8, 10, 4)]


@pytest.mark.parametrize("k,d,t", CASES)
def test_matches_lp_oracle(k, d, t):
    p = CodeParams(k=k, d=d, t=t, file_size=k)
    lo, hi = mscr(p).alpha, mbcr(p).alpha
    for frac in (F(0), F(1, 7), F(1, 3), F(1, 2), F(4, 5), F(1)):
        alpha = lo + (hi - lo) * frac
        pt = min_gamma_for_alpha(p, alpha)
        want = lp_min_gamma(p, alpha)
        assert abs(float(pt.gamma) - want) <= 1e-7 * float(p.block)
        assert check_correct(p, pt.cost_point()).satisfied


def test_endpoints_snap_to_closed_forms():
    p = CodeParams(k=16, d=24, t=4, file_size=16)
    first, last = trace_curve(p, 2)
    assert (first.alpha, first.beta, first.beta_prime, first.gamma) == (
        mscr(p).alpha, mscr(p).beta, mscr(p).beta_prime, mscr(p).gamma)
    assert (last.alpha, last.gamma) == (mbcr(p).alpha, mbcr(p).gamma)
    beyond = min_gamma_for_alpha(p, mbcr(p).alpha * 2)
    assert beyond.gamma == mbcr(p).gamma


def test_t1_endpoints_are_classic():
    p = CodeParams(k=16, d=24, t=1, file_size=16)
    first, last = trace_curve(p, 2)
    assert first.gamma == classic_costs(p, "msr").gamma
    assert last.gamma == classic_costs(p, "mbr").gamma


def test_midway_is_strictly_between():
    p = CodeParams(k=16, d=24, t=4, file_size=16)
    pt = min_gamma_for_alpha(p, (mscr(p).alpha + mbcr(p).alpha) / 2)
    assert mbcr(p).gamma < pt.gamma < mscr(p).gamma
    # one percent less transfer is infeasible
    assert not check_correct(p, pt.cost_point().scaled(F(99, 100), F(99, 100), p.d, p.t)).satisfied


def test_errors():
    p = CodeParams(k=4, d=5, t=2, file_size=4)
    with pytest.raises(Infeasible):
        min_gamma_for_alpha(p, F(99, 100))
    with pytest.raises(InvalidParams):
        min_gamma_for_alpha(p, 1, tolerance=0)
    with pytest.raises(InvalidParams):
        trace_curve(p, 1)


@pytest.mark.parametrize("k,d,t", [(4, 5, 2), (6, 8, 3), (8, 10, 2)])
def test_feasible_set_is_convex(k, d, t):
    p = CodeParams(k=k, d=d, t=t, file_size=k)
    rng = random.Random(k * 100 + d)
    alpha = (mscr(p).alpha + mbcr(p).alpha) / 2
    feasible = []
    while len(feasible) < 12:
        b, bp = F(rng.randint(0, 60), 60), F(rng.randint(0, 60), 60)
        c = CostPoint.from_transfers(d, t, alpha, b, bp)
        if check_correct(p, c).satisfied:
            feasible.append(c)
    for _ in range(40):
        x, y = rng.sample(feasible, 2)
        lam = F(rng.randint(0, 20), 20)
        mix = CostPoint.from_transfers(d, t, alpha, lam * x.beta + (1 - lam) * y.beta,
                                       lam * x.beta_prime + (1 - lam) * y.beta_prime)
        assert check_correct(p, mix).satisfied


@pytest.mark.parametrize("t", [2, 4])
def test_shrinking_a_curve_point_breaks_it(t):
    p = CodeParams(k=8, d=10, t=t, file_size=8)
    tol = default_tolerance(p)
    for pt in trace_curve(p, 5)[1:-1]:
        f = (pt.gamma - 2 * tol) / pt.gamma
        assert not check_correct(p, pt.cost_point().scaled(f, f, p.d, p.t)).satisfied


@pytest.mark.parametrize("k,d,t", [(8, 10, 2), (6, 9, 3), (16, 24, 4)])
def test_curve_is_monotone_and_convex(k, d, t):
    p = CodeParams(k=k, d=d, t=t, file_size=k)
    pts = trace_curve(p, 9)
    tol = default_tolerance(p)
    g = [pt.gamma for pt in pts]
    assert all(a >= b - tol for a, b in zip(g, g[1:]))
    # even alpha spacing, so convexity is a second-difference check
    assert all(g[i - 1] + g[i + 1] - 2 * g[i] >= -2 * tol for i in range(1, len(g) - 1))
