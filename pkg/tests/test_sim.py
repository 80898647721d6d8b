import csv
import io
from fractions import Fraction as F

import pytest

from crcodes import sim
from crcodes.cost_model import CodeParams
from crcodes.errors import InvalidParams

M = 32


def totals(report, name):
    return [r.total / report.block for r in report.records if r.strategy == name]


def test_batch_sweep_examples():
    r = sim.run_batch_sweep("mbcr", 32, 48, range(1, 5), M)
    assert totals(r, "mbcr")[0] == F(96, 65)
    assert totals(r, "mbcr")[3] == F(99, 68) * 4
    r = sim.run_batch_sweep("msr", 32, 48, range(1, 9), M)
    assert totals(r, "msr") == [t * F(48, 17) for t in range(1, 9)]
    r = sim.run_batch_sweep("ecc_eager", 32, 48, range(1, 5), M)
    assert [x.total for x in r.records] == [t * M for t in range(1, 5)]
    assert r.total == sum(x.total for x in r.records)


def test_adaptive_sweep_examples():
    r = sim.run_adaptive_sweep(64, 32, [1, 16, 32], M)
    arc = [x.gamma / r.block for x in r.records if x.strategy == "arc"]
    mfr = [x.gamma / r.block for x in r.records if x.strategy == "mfr"]
    assert arc == [F(63, 32)] * 3
    assert mfr == [F(63, 32), F(48, 17), F(32)]
    with pytest.raises(InvalidParams):
        sim.run_adaptive_sweep(64, 32, [33], M)


@pytest.mark.parametrize("k,d", [(32, 48), (16, 24), (8, 8)])
def test_coordinated_codes_dominate(k, d):
    ts = range(1, k // 2 + 1)
    lazy = totals(sim.run_batch_sweep("ecc_lazy", k, d, ts, M), "ecc_lazy")
    msr = totals(sim.run_batch_sweep("msr", k, d, ts, M), "msr")
    mbr = totals(sim.run_batch_sweep("mbr", k, d, ts, M), "mbr")
    mscr = totals(sim.run_batch_sweep("mscr", k, d, ts, M), "mscr")
    mbcr = totals(sim.run_batch_sweep("mbcr", k, d, ts, M), "mbcr")
    for i in range(len(ts)):
        assert mscr[i] <= min(lazy[i], msr[i])
        assert mbcr[i] <= min(lazy[i], mbr[i])


def test_lazy_hub_carries_more_upload_than_coordination():
    for t in range(2, 9):
        _, _, hub = sim.strategy_costs("ecc_lazy", 32, 36, t, M)
        _, _, even = sim.strategy_costs("mscr", 32, 36, t, M)
        assert even < hub


def test_unknown_strategy():
    with pytest.raises(InvalidParams):
        sim.strategy_costs("raid", 4, 4, 1, M)
    with pytest.raises(InvalidParams):
        sim.Strategy("raid", CodeParams(k=2, d=2))
    with pytest.raises(InvalidParams):
        sim.run_codec_trace("msr", CodeParams(k=2, d=2), 1)


def test_csv_reparses_to_exact_values():
    r = sim.run_batch_sweep("mbcr", 32, 48, range(1, 17), 32 * 10**6)
    rows = list(csv.DictReader(io.StringIO(r.to_csv())))
    assert tuple(rows[0]) == sim.CSV_COLUMNS
    for row, rec in zip(rows, r.records):
        for col, exact in (("alpha_norm", rec.alpha), ("gamma_norm", rec.gamma), ("total_norm", rec.total),
                           ("beta_norm", rec.beta), ("beta_prime_norm", rec.beta_prime)):
            want = exact / r.block
            assert abs(F(row[col]) - want) <= want * F(1, 10**11)
            digits = row[col].replace(".", "").lstrip("0")
            assert len(digits) <= 12


def test_codec_trace_zero_rounds_and_determinism():
    p = CodeParams(k=4, d=5, t=2, file_size=12 * 2 * 50)
    a = sim.run_codec_trace("mscr", p, 0, seed=3)
    assert len(a.audits) == 1 and a.audits[0] == (35, 35) and a.roundtrip_ok
    b1 = sim.run_codec_trace("mscr", p, 3, seed=3)
    b2 = sim.run_codec_trace("mscr", p, 3, seed=3)
    assert b1.report.to_csv() == b2.report.to_csv() and b1.history == b2.history


@pytest.mark.parametrize("strategy,t", [("mbcr", 2), ("arc", 3), ("mfr", 3), ("mscr", 1)])
def test_codec_traces_stay_decodable(strategy, t):
    n = 7
    p = CodeParams(k=4, d=n - t, t=t, n=n, file_size=2400)
    for seed in range(3):
        tr = sim.run_codec_trace(strategy, p, 6, seed=seed)
        assert tr.all_decodable and tr.roundtrip_ok


def test_codec_bytes_match_formulas():
    p = CodeParams(k=4, d=5, t=2, file_size=120_000)
    tr = sim.run_codec_trace("mbcr", p, 2, seed=0)
    for rec in tr.report.records[1:]:
        assert rec.gamma / tr.report.block == F(2 * 5 + 2 - 1, 2 * 5 - 4 + 2)
        assert rec.total == 2 * rec.gamma
