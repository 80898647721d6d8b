"""
Repair-cost sweeps and seeded end-to-end codec traces.

Formula sweeps evaluate :mod:`crcodes.cost_model` for each batch size t.
Codec traces run real encode/repair rounds and audit, after every round,
whether k-subsets of live devices still decode.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
import random
from dataclasses import dataclass, field
from decimal import Context, Decimal
from fractions import Fraction
from typing import Optional, Union

from . import codec
from .cost_model import CodeParams, CostPoint, arc, classic_costs, mbcr, mscr
from .errors import InvalidParams, RankDeficient

STRATEGIES = ("ecc_eager", "ecc_lazy", "msr", "mbr", "mscr", "mbcr", "arc", "mfr")
CODEC_STRATEGIES = ("mscr", "mbcr", "arc", "mfr")
CSV_COLUMNS = ("strategy", "k", "d", "n", "t", "alpha_norm", "beta_norm", "beta_prime_norm",
               "gamma_norm", "total_norm", "decode_success_rate")
AUDIT_LIMIT = 10_000

_CTX = Context(prec=12)


@dataclass(frozen=True)
class Strategy:
    name: str
    params: CodeParams

    def __post_init__(self):
        if self.name not in STRATEGIES:
            raise InvalidParams(f"unknown strategy {self.name!r}; expected one of {STRATEGIES}")


@dataclass(frozen=True)
class SimRecord:
    strategy: str
    k: int
    d: int
    n: int
    t: int
    alpha: Fraction
    beta: Fraction
    beta_prime: Fraction
    gamma: Fraction  # bytes downloaded per repaired device
    total: Fraction  # bytes moved by the whole batch
    max_upload: Fraction  # largest amount any single device sends in the batch
    decode_success_rate: Optional[float] = None


@dataclass
class SimReport:
    block: Fraction  # M / k, used for normalisation
    records: list = field(default_factory=list)

    @property
    def total(self) -> Fraction:
        return sum((r.total for r in self.records), Fraction(0))

    def column(self, name: str, strategy: Optional[str] = None) -> list:
        return [getattr(r, name) for r in self.records if strategy is None or r.strategy == strategy]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.records:
            rate = "" if r.decode_success_rate is None else _fmt(Fraction(r.decode_success_rate))
            w.writerow([r.strategy, r.k, r.d, r.n, r.t,
                        *(_fmt(x / self.block) for x in (r.alpha, r.beta, r.beta_prime, r.gamma, r.total)),
                        rate])
        return buf.getvalue()


def _fmt(x: Fraction) -> str:
    return str(_CTX.divide(Decimal(x.numerator), Decimal(x.denominator)))


def strategy_costs(name: str, k: int, d: int, t: int, file_size) -> tuple:
    """(per-device CostPoint, effective d, per-batch max upload) for one batch of t repairs."""
    p = CodeParams(k=k, d=d, t=t, file_size=file_size)
    b = p.block
    if name == "ecc_eager":
        c = classic_costs(p, "ecc_eager")
        return c, k, t * b
    if name == "ecc_lazy":
        c = classic_costs(p, "ecc_lazy")
        # one hub downloads k blocks and forwards a block to each of the t - 1 others
        return c, k, max(b, (t - 1) * b)
    if name in ("msr", "mbr", "mfr"):
        c = classic_costs(p, "msr" if name == "mfr" else name)
        return c, d, t * c.beta
    if name in ("mscr", "mbcr", "arc"):
        c = {"mscr": mscr, "mbcr": mbcr}.get(name, lambda q: arc(q.n, q.k, q.t, q.file_size, q.d))(p)
        return c, d, max(t * c.beta, (t - 1) * c.beta_prime)
    raise InvalidParams(f"unknown strategy {name!r}; expected one of {STRATEGIES}")


def _record(name, k, d, n, t, c: CostPoint, max_up, rate=None) -> SimRecord:
    return SimRecord(name, k, d, n, t, c.alpha, c.beta, c.beta_prime, c.gamma, t * c.gamma, max_up, rate)


def run_batch_sweep(strategy: str, k: int, d: int, t_range, file_size) -> SimReport:
    """Per-t costs with d fixed (n = d + t)."""
    report = SimReport(Fraction(file_size) / k)
    for t in t_range:
        c, d_eff, max_up = strategy_costs(strategy, k, d, t, file_size)
        report.records.append(_record(strategy, k, d_eff, d + t, t, c, max_up))
    return report


def run_adaptive_sweep(n: int, k: int, t_range, file_size, strategies=("arc", "mfr")) -> SimReport:
    """Per-t costs in a system of fixed size n, contacting every live device (d = n - t)."""
    report = SimReport(Fraction(file_size) / k)
    for t in t_range:
        if not 1 <= t <= n - k:
            raise InvalidParams(f"t={t} outside 1..n-k={n - k}")
        for name in strategies:
            c, d_eff, max_up = strategy_costs(name, k, n - t, t, file_size)
            report.records.append(_record(name, k, d_eff, n, t, c, max_up))
    return report


# codec-backed traces


@dataclass
class CodecTrace:
    report: SimReport
    audits: list  # per round (round 0 = after encode): (subsets tried, subsets decoded)
    roundtrip_ok: bool
    history: list  # per round: (failed ids, donor ids)

    @property
    def all_decodable(self) -> bool:
        return all(ok == tried for tried, ok in self.audits)

    @property
    def any_failure(self) -> bool:
        return not self.all_decodable


def _audit(devices, k, rng):
    live = [d.device_id for d in devices if d.alive]
    total = math.comb(len(live), k)
    if total <= AUDIT_LIMIT:
        subsets = itertools.combinations(live, k)
    else:
        subsets = (sorted(rng.sample(live, k)) for _ in range(AUDIT_LIMIT))
    tried = ok = 0
    for s in subsets:
        tried += 1
        ok += codec.decodable(devices, s)
    return tried, ok


def _adversarial_round(p, new_ids, rng):
    """Failures that build the all-t binding graph: earlier repaired devices always donate."""
    candidates = [j for j in range(p.n) if j not in new_ids]
    failed = sorted(rng.sample(candidates, p.t))
    others = [j for j in range(p.n) if j not in failed and j not in new_ids]
    donors = sorted(new_ids) + sorted(rng.sample(others, p.d - len(new_ids)))
    return failed, donors


def trace_bytes(p: CodeParams) -> int:
    """Payload length whose padded encoding is exactly M bytes when M is a multiple of the chunk."""
    return max(1, int(p.file_size) - codec.HEADER_BYTES)


def run_codec_trace(strategy: str, p: CodeParams, rounds: int, seed: int = 0,
                    point: Optional[Union[str, CostPoint]] = None, history: str = "random",
                    w: int = 16, recheck: bool = False) -> CodecTrace:
    """Encode a random file, run ``rounds`` repair batches, audit decodability after each.

    ``point`` overrides the code point for fixed-parameter strategies (used
    for negative controls).  ``history='adversarial'`` makes the first k/t
    rounds build the all-t binding repair graph.  Adaptive strategies draw
    each batch size uniformly from 1..p.t.
    """
    if strategy not in CODEC_STRATEGIES:
        raise InvalidParams(f"codec traces support {CODEC_STRATEGIES}, got {strategy!r}")
    if history not in ("random", "adversarial"):
        raise InvalidParams(f"history must be 'random' or 'adversarial', got {history!r}")
    rng = random.Random(seed)
    code_point = point if point is not None else strategy
    adaptive = strategy in ("arc", "mfr")
    data = rng.randbytes(trace_bytes(p))
    devices = codec.encode(data, p, code_point, seed=seed, w=w)
    unit_bytes = devices[0].unit_bytes
    M_eff = Fraction(unit_bytes * devices[0].l)
    report = SimReport(M_eff / p.k)
    audits = [_audit(devices, p.k, rng)]
    hist = []
    new_ids: list = []
    alpha = Fraction(devices[0].alpha_units * unit_bytes)
    report.records.append(SimRecord(strategy, p.k, 0, p.n, 0, alpha, Fraction(0), Fraction(0),
                                    Fraction(0), Fraction(0), Fraction(0),
                                    audits[0][1] / audits[0][0]))
    for r in range(rounds):
        op_seed = seed * 1_000_003 + r + 1
        if adaptive:
            t = rng.randint(1, p.t)
            failed = sorted(rng.sample(range(p.n), t))
            out = codec.repair_adaptive(devices, failed, p.n, p.k, op_seed, strategy, recheck)
            donors = [j for j in range(p.n) if j not in failed]
        else:
            if history == "adversarial" and len(new_ids) + p.t <= p.k:
                failed, donors = _adversarial_round(p, new_ids, rng)
                new_ids.extend(failed)
            else:
                failed = sorted(rng.sample(range(p.n), p.t))
                rest = [j for j in range(p.n) if j not in failed]
                donors = sorted(rng.sample(rest, p.d))
            out = codec.repair(devices, failed, donors, p, code_point, op_seed, recheck)
        devices = out.devices
        hist.append((tuple(failed), tuple(donors)))
        audits.append(_audit(devices, p.k, rng))
        beta = Fraction(out.collect_units * out.unit_bytes, out.d)
        beta_p = Fraction(out.coordinate_units * out.unit_bytes, out.t - 1) if out.t > 1 else Fraction(0)
        report.records.append(SimRecord(strategy, p.k, out.d, p.n, out.t, alpha, beta, beta_p,
                                        Fraction(out.bytes_per_device), Fraction(out.total_bytes),
                                        Fraction(out.max_upload_units * out.unit_bytes),
                                        audits[-1][1] / audits[-1][0]))
    live = [d.device_id for d in devices if d.alive]
    try:
        roundtrip_ok = codec.decode(devices, live[: p.k]) == data
    except RankDeficient:
        roundtrip_ok = False
    return CodecTrace(report, audits, roundtrip_ok, hist)
