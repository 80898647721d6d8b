"""
Random linear network code implementing coordinated repair.

The file (with an 8-byte length prefix, zero padded) is cut into ``l``
sub-blocks.  A device stores ``alpha_units`` coded sub-blocks, each a
random combination of the originals, together with its coefficient vector.

A repair of t devices from d donors runs three stages per new device:

1. collect: every donor sends ``beta_units`` fresh random combinations of
   what it stores;
2. coordinate: the new device sends ``beta_prime_units`` random
   combinations of what it collected to each of the other t - 1;
3. store: it keeps ``alpha_units`` random combinations of everything it
   received.

Repair is functional: new blocks differ from the lost ones but keep any k
devices decodable with high probability.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np

from . import gf as gfmod
from .cost_model import CodeParams, CostPoint, mbcr, mscr
from .errors import (
    DeadDonor,
    FileTooSmall,
    InvalidParams,
    NotEnoughDonors,
    RankDeficient,
    TooManyFailures,
)

HEADER_BYTES = 8
_ENCODE, _REPAIR, _ADAPTIVE = 0, 1, 2


@dataclass(frozen=True)
class SubBlockUnit:
    """Sub-block granularity of a code: every transfer is a whole number of units."""

    l: int
    alpha_units: int
    beta_units: int
    beta_prime_units: int

    @property
    def z(self) -> int:
        return self.alpha_units


@dataclass(frozen=True)
class CodedBlock:
    coeffs: np.ndarray
    payload: np.ndarray


@dataclass(frozen=True)
class DeviceState:
    """Immutable snapshot of one device: ``coeffs`` is (alpha, l), ``payload`` is (alpha, symbols)."""

    device_id: int
    coeffs: np.ndarray
    payload: np.ndarray
    alive: bool = True
    w: int = gfmod.DEFAULT_WIDTH

    def __post_init__(self):
        self.coeffs.setflags(write=False)
        self.payload.setflags(write=False)

    @property
    def l(self) -> int:
        return self.coeffs.shape[1]

    @property
    def alpha_units(self) -> int:
        return self.coeffs.shape[0]

    @property
    def unit_bytes(self) -> int:
        return self.payload.shape[1] * (self.w // 8)

    @property
    def blocks(self) -> list:
        return [CodedBlock(c, p) for c, p in zip(self.coeffs, self.payload)]

    def failed(self) -> "DeviceState":
        return DeviceState(self.device_id, self.coeffs, self.payload, False, self.w)


@dataclass
class RepairSession:
    """What one new device saw: W1 per donor, W2 per peer, and the stored W3."""

    device_id: int
    w1: list = field(default_factory=list)  # (donor id, coeffs, payload)
    w2: list = field(default_factory=list)  # (peer id, coeffs, payload)
    w3: Optional[CodedBlock] = None
    sent: list = field(default_factory=list)  # (peer id, coeffs, payload) emitted in coordinate

    def collected(self):
        c = np.concatenate([x[1] for x in self.w1] + [x[1] for x in self.w2])
        p = np.concatenate([x[2] for x in self.w1] + [x[2] for x in self.w2])
        return c, p


@dataclass
class RepairOutcome:
    devices: list
    sessions: dict
    t: int
    d: int
    unit_bytes: int
    collect_units: int  # per new device
    coordinate_units: int  # per new device (received)
    ideal_units: Fraction  # per new device, before any rounding
    max_upload_units: int

    @property
    def bytes_per_device(self) -> int:
        return (self.collect_units + self.coordinate_units) * self.unit_bytes

    @property
    def ideal_bytes_per_device(self) -> Fraction:
        return self.ideal_units * self.unit_bytes

    @property
    def total_bytes(self) -> int:
        return self.t * self.bytes_per_device

    @property
    def coordination_bytes(self) -> int:
        return self.t * self.coordinate_units * self.unit_bytes

    @property
    def non_integral(self) -> bool:
        return self.ideal_units != self.collect_units + self.coordinate_units


def code_length_requirements(n: int, k: int, mode: str) -> int:
    """Sub-blocks per device needed to support every d in k..n-1."""
    if n <= k:
        raise InvalidParams(f"need n > k, got n={n}, k={k}")
    if mode == "arc":
        return n - k
    if mode == "mfr":
        return math.lcm(*range(1, n - k + 1))
    raise InvalidParams(f"mode must be 'arc' or 'mfr', got {mode!r}")


def unit_plan(point: CostPoint, file_size) -> SubBlockUnit:
    """Smallest granularity making alpha, beta and beta' whole units."""
    M = Fraction(file_size)
    shares = [point.alpha / M, point.beta / M, point.beta_prime / M]
    l = math.lcm(*(s.denominator for s in shares))
    a, b, bp = (int(s * l) for s in shares)
    return SubBlockUnit(l, a, b, bp)


def plan_for(p: CodeParams, point: Union[str, CostPoint] = "mscr") -> SubBlockUnit:
    if isinstance(point, CostPoint):
        return unit_plan(point, p.file_size)
    if point == "mscr":
        return unit_plan(mscr(p), p.file_size)
    if point == "mbcr":
        return unit_plan(mbcr(p), p.file_size)
    if point in ("arc", "mfr"):
        z = code_length_requirements(p.n, p.k, point)
        return SubBlockUnit(p.k * z, z, 0, 0)
    raise InvalidParams(f"unknown code point {point!r}")


def _rng(seed, tag):
    return np.random.default_rng([int(seed), tag])


def padded_size(length: int, l: int, w: int = gfmod.DEFAULT_WIDTH) -> int:
    """Bytes actually encoded for a file of ``length`` bytes."""
    chunk = l * (w // 8)
    raw = HEADER_BYTES + length
    return -(-raw // chunk) * chunk


def _split(data: bytes, l: int, gf: gfmod.GF) -> np.ndarray:
    total = padded_size(len(data), l, gf.w)
    buf = bytearray(total)
    buf[:HEADER_BYTES] = len(data).to_bytes(HEADER_BYTES, "little")
    buf[HEADER_BYTES : HEADER_BYTES + len(data)] = data
    sym = np.frombuffer(bytes(buf), dtype=np.dtype(gf.dtype).newbyteorder("<"))
    return sym.astype(gf.dtype).reshape(l, -1)


def _join(x: np.ndarray, gf: gfmod.GF) -> bytes:
    raw = np.ascontiguousarray(x).astype(np.dtype(gf.dtype).newbyteorder("<")).tobytes()
    length = int.from_bytes(raw[:HEADER_BYTES], "little")
    if length > len(raw) - HEADER_BYTES:
        raise RankDeficient(-1, x.shape[0])
    return raw[HEADER_BYTES : HEADER_BYTES + length]


def encode(data: bytes, p: CodeParams, point: Union[str, CostPoint] = "mscr", seed: int = 0,
           w: int = gfmod.DEFAULT_WIDTH) -> list:
    """Encode ``data`` onto ``p.n`` devices, each holding alpha random combinations."""
    if not data:
        raise FileTooSmall("cannot encode an empty file")
    gf = gfmod.field(w)
    plan = plan_for(p, point)
    x = _split(data, plan.l, gf)
    rng = _rng(seed, _ENCODE)
    out = []
    for j in range(p.n):
        c = gf.random_matrix(plan.alpha_units, plan.l, rng)
        out.append(DeviceState(j, c, gf.matmul(c, x), True, w))
    return out


def _index(devices: Sequence[DeviceState]) -> dict:
    return {dev.device_id: dev for dev in devices}


def _check_donors(by_id, failed, donors):
    unknown = [j for j in list(failed) + list(donors) if j not in by_id]
    if unknown:
        raise InvalidParams(f"unknown device ids {unknown}")
    overlap = set(failed) & set(donors)
    if overlap:
        raise InvalidParams(f"devices {sorted(overlap)} cannot both fail and donate")
    dead = [j for j in donors if not by_id[j].alive]
    if dead:
        raise DeadDonor(f"donors {dead} are not alive")


def _combine(gf, rng, count, coeffs, payload, recheck=False):
    r = gf.random_matrix(count, coeffs.shape[0], rng)
    new_c = gf.matmul(r, coeffs)
    if recheck:
        want = min(count, gf.rank(coeffs))
        for _ in range(3):
            if gf.rank(new_c) >= want:
                break
            r = gf.random_matrix(count, coeffs.shape[0], rng)
            new_c = gf.matmul(r, coeffs)
    return new_c, gf.matmul(r, payload)


def _group_repair(by_id, failed, donors, alpha_u, beta_u, beta_prime_u, rng, gf, recheck):
    failed = sorted(failed)
    donors = sorted(donors)
    sessions = {j: RepairSession(j) for j in failed}
    for j in failed:
        for donor in donors:
            dev = by_id[donor]
            c, pl = _combine(gf, rng, beta_u, dev.coeffs, dev.payload)
            sessions[j].w1.append((donor, c, pl))
    if beta_prime_u:
        for j in failed:
            w1c = np.concatenate([x[1] for x in sessions[j].w1])
            w1p = np.concatenate([x[2] for x in sessions[j].w1])
            for peer in failed:
                if peer == j:
                    continue
                c, pl = _combine(gf, rng, beta_prime_u, w1c, w1p)
                sessions[j].sent.append((peer, c, pl))
                sessions[peer].w2.append((j, c, pl))
    new = {}
    for j in failed:
        allc, allp = sessions[j].collected()
        c, pl = _combine(gf, rng, alpha_u, allc, allp, recheck)
        sessions[j].w3 = CodedBlock(c, pl)
        new[j] = DeviceState(j, c, pl, True, gf.w)
    return new, sessions


def _replace(devices, new):
    return [new.get(dev.device_id, dev) for dev in devices]


def repair(devices: Sequence[DeviceState], failed_ids, donor_ids, p: CodeParams,
           point: Union[str, CostPoint] = "mscr", seed: int = 0, recheck: bool = False) -> RepairOutcome:
    """Coordinated repair of ``t`` devices from ``d`` donors at a fixed code point."""
    failed_ids, donor_ids = list(failed_ids), list(donor_ids)
    by_id = _index(devices)
    if len(set(failed_ids)) != p.t:
        raise InvalidParams(f"expected t={p.t} failed devices, got {len(set(failed_ids))}")
    if len(set(donor_ids)) < p.d:
        raise NotEnoughDonors(f"need d={p.d} donors, got {len(set(donor_ids))}")
    if len(set(donor_ids)) > p.d:
        raise InvalidParams(f"expected d={p.d} donors, got {len(set(donor_ids))}")
    _check_donors(by_id, failed_ids, donor_ids)
    plan = plan_for(p, point)
    sample = by_id[donor_ids[0]]
    if (sample.alpha_units, sample.l) != (plan.alpha_units, plan.l):
        raise InvalidParams(f"devices hold {sample.alpha_units}x{sample.l} units, plan needs "
                            f"{plan.alpha_units}x{plan.l}")
    gf = gfmod.field(sample.w)
    rng = _rng(seed, _REPAIR)
    new, sessions = _group_repair(by_id, failed_ids, donor_ids, plan.alpha_units, plan.beta_units,
                                  plan.beta_prime_units, rng, gf, recheck)
    collect = p.d * plan.beta_units
    coord = (p.t - 1) * plan.beta_prime_units
    return RepairOutcome(
        devices=_replace(devices, new),
        sessions=sessions,
        t=p.t,
        d=p.d,
        unit_bytes=sample.unit_bytes,
        collect_units=collect,
        coordinate_units=coord,
        ideal_units=Fraction(collect + coord),
        max_upload_units=max(p.t * plan.beta_units, (p.t - 1) * plan.beta_prime_units),
    )


def repair_adaptive(devices: Sequence[DeviceState], failed_ids, n: int, k: int, seed: int = 0,
                    mode: str = "arc", recheck: bool = False) -> RepairOutcome:
    """Repair using every live device as a donor, sizing transfers to the current (t, d).

    ``arc`` sends beta = beta' = z / (d - k + t) units with z = n - k,
    rounded up to whole units when that is fractional.  ``mfr`` repairs
    each device on its own with beta = z / (d - k + 1), z = lcm(1..n-k).
    """
    by_id = _index(devices)
    failed_ids = sorted(set(failed_ids))
    if not failed_ids:
        raise InvalidParams("nothing to repair")
    live = sorted(j for j, dev in by_id.items() if dev.alive and j not in failed_ids)
    t, d = len(failed_ids), len(live)
    if d < k:
        raise TooManyFailures(f"only {d} live devices remain, need at least k={k}")
    _check_donors(by_id, failed_ids, live)
    z = code_length_requirements(n, k, mode)
    sample = by_id[live[0]]
    if sample.alpha_units != z or sample.l != k * z:
        raise InvalidParams(f"devices hold {sample.alpha_units}x{sample.l} units; "
                            f"{mode} with n={n}, k={k} needs {z}x{k * z}")
    gf = gfmod.field(sample.w)
    rng = _rng(seed, _ADAPTIVE)
    if mode == "arc":
        ideal_beta = Fraction(z, d - k + t)
        beta_u = math.ceil(ideal_beta)
        new, sessions = _group_repair(by_id, failed_ids, live, z, beta_u, beta_u, rng, gf, recheck)
        collect, coord = d * beta_u, (t - 1) * beta_u
        ideal = ideal_beta * (d + t - 1)
        max_up = max(t * beta_u, (t - 1) * beta_u)
    else:
        beta_u = Fraction(z, d - k + 1)
        assert beta_u.denominator == 1
        beta_u = int(beta_u)
        new, sessions = {}, {}
        for j in failed_ids:
            one, sess = _group_repair(by_id, [j], live, z, beta_u, 0, rng, gf, recheck)
            new.update(one)
            sessions.update(sess)
        collect, coord = d * beta_u, 0
        ideal = Fraction(collect)
        max_up = t * beta_u
    return RepairOutcome(_replace(devices, new), sessions, t, d, sample.unit_bytes, collect, coord,
                         ideal, max_up)


def _stack(devices, chosen):
    by_id = _index(devices)
    chosen = list(chosen)
    missing = [j for j in chosen if j not in by_id]
    if missing:
        raise InvalidParams(f"unknown device ids {missing}")
    dead = [j for j in chosen if not by_id[j].alive]
    if dead:
        raise DeadDonor(f"devices {dead} are not alive")
    if not chosen:
        raise RankDeficient(0, -1)
    c = np.concatenate([by_id[j].coeffs for j in chosen])
    p = np.concatenate([by_id[j].payload for j in chosen])
    return c, p, by_id[chosen[0]].w


def rank_of(devices, chosen) -> int:
    c, _, w = _stack(devices, chosen)
    return gfmod.field(w).rank(c)


def decodable(devices, chosen) -> bool:
    c, _, w = _stack(devices, chosen)
    return gfmod.field(w).rank(c) == c.shape[1]


def decode(devices: Sequence[DeviceState], chosen_ids) -> bytes:
    """Recover the original file from the chosen devices, or raise RankDeficient."""
    c, p, w = _stack(devices, chosen_ids)
    gf = gfmod.field(w)
    l = c.shape[1]
    rows = gf.independent_rows(c)
    if len(rows) < l:
        raise RankDeficient(len(rows), l)
    x = gf.solve(c[rows], p[rows])
    return _join(x, gf)
