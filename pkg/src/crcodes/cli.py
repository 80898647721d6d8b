"""Command-line front end.

Exit codes: 0 success, 1 I/O or file-format error, 2 usage error,
3 decoding infeasible (rank deficient).
"""

from __future__ import annotations

import argparse
import re
import sys
from decimal import Decimal
from fractions import Fraction
from pathlib import Path

from . import blockfile, codec, sim
from .cost_model import (
    CodeParams,
    RecoveryScenario,
    check_correct,
    classic_costs,
    count_scenarios,
    cut_formula,
    enumerate_scenarios,
    mbcr,
    mscr,
    round_half_up,
)
from .errors import BlockFormatError, CRCError, RankDeficient, ScaleExceeded
from .flow_graph import build_worst_case, min_cut
from .tradeoff import trace_curve

EXIT_OK, EXIT_IO, EXIT_USAGE, EXIT_DECODE = 0, 1, 2, 3
ORACLE_MAX_K = 6

_UNITS = {"": 1, "B": 1, "KB": 10**3, "MB": 10**6, "GB": 10**9}
MB = 10**6

TABLE_ROWS = (
    ("ecc_eager", "Erasure codes"),
    ("ecc_lazy", "Erasure codes (delayed repair)"),
    ("msr", "MSR"),
    ("mbr", "MBR"),
    ("mscr", "MSCR"),
    ("mbcr", "MBCR"),
)
COST_SCHEMES = tuple(s for s, _ in TABLE_ROWS) + ("mfr",)


class UsageError(Exception):
    pass


def parse_size(text: str) -> Fraction:
    """'32MB' -> 32_000_000 (decimal units)."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*([KMG]?B?)\s*", text.upper())
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse size {text!r}; use e.g. 32MB, 120KB, 4096B")
    unit = m.group(2)
    if unit in ("K", "M", "G"):
        unit += "B"
    return Fraction(Decimal(m.group(1))) * _UNITS[unit]


def parse_ids(text: str) -> list:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def parse_range(text: str) -> list:
    """'1:16' (inclusive) or '1,2,4'."""
    if ":" in text:
        a, b = text.split(":", 1)
        return list(range(int(a), int(b) + 1))
    return parse_ids(text)


def _params(args, t=None) -> CodeParams:
    d = args.k if args.d is None else args.d
    t = args.t if t is None else t
    try:
        return CodeParams(k=args.k, d=d, t=t, file_size=args.M, n=getattr(args, "n", None))
    except CRCError as e:
        raise UsageError(str(e))


def _mb(x: Fraction, exact: bool) -> str:
    v = x / MB
    if exact:
        return str(v)
    return f"{float(round_half_up(v, 1)):.1f}"


# costs


def cmd_costs(args, out) -> int:
    if args.all:
        schemes = [s for s, _ in TABLE_ROWS]
    elif args.scheme:
        schemes = args.scheme
    else:
        raise UsageError("choose --all or at least one --scheme")
    labels = dict(TABLE_ROWS)
    rows = []
    for s in schemes:
        ecc = s.startswith("ecc")
        t = args.t if s in ("ecc_lazy", "mscr", "mbcr") else 1
        if s in ("msr", "mbr", "mfr", "mscr", "mbcr") and args.d is None:
            raise UsageError(f"scheme {s} needs -d")
        p = _params(args, t=t)
        c = {"mscr": mscr, "mbcr": mbcr}[s](p) if s in ("mscr", "mbcr") else classic_costs(p, s)
        rows.append((labels.get(s, s.upper()), p.k, "NA" if ecc else p.d,
                     t if s in ("ecc_lazy", "mscr", "mbcr") else "NA", c.alpha, c.gamma))
    if args.csv:
        out.write("scheme,k,d,t,alpha_mb,gamma_mb\n")
        for name, k, d, t, a, g in rows:
            out.write(f"{name},{k},{d},{t},{_mb(a, args.exact)},{_mb(g, args.exact)}\n")
        return EXIT_OK
    out.write(f"{'scheme':<32}{'k':>4}{'d':>5}{'t':>5}{'alpha (MB)':>14}{'gamma (MB)':>14}\n")
    for name, k, d, t, a, g in rows:
        out.write(f"{name:<32}{k:>4}{d!s:>5}{t!s:>5}{_mb(a, args.exact):>14}{_mb(g, args.exact):>14}\n")
    return EXIT_OK


# tradeoff


def cmd_tradeoff(args, out) -> int:
    fh = _open_out(args.out, out)
    fh.write("t,alpha_norm,gamma_norm,beta_norm,beta_prime_norm\n")
    for t in args.t:
        p = _params(args, t=t)
        for pt in trace_curve(p, args.samples):
            n = pt.normalize(p.block)
            fh.write(f"{t},{sim._fmt(n.alpha)},{sim._fmt(n.gamma)},{sim._fmt(n.beta)},"
                     f"{sim._fmt(n.beta_prime)}\n")
    if fh is not out:
        fh.close()
    return EXIT_OK


# verify


def cmd_verify(args, out) -> int:
    p = _params(args)
    if args.oracle and p.k > ORACLE_MAX_K:
        raise ScaleExceeded(f"--oracle is limited to k <= {ORACLE_MAX_K}, got k={p.k}")
    c = (mscr if args.point == "mscr" else mbcr)(p)
    c = c.scaled(beta=args.scale_beta, beta_prime=args.scale_beta_prime, d=p.d, t=p.t)
    if not p.guaranteed:
        out.write(f"note: t={p.t} does not divide k={p.k}; correctness is not guaranteed\n")
    scenarios = enumerate_scenarios(p.k, p.t)
    out.write(f"# {args.point} k={p.k} d={p.d} t={p.t} M={p.file_size}: "
              f"alpha={c.alpha} beta={c.beta} beta'={c.beta_prime} gamma={c.gamma}\n")
    out.write("scenario\tcut_formula" + ("\tmin_cut\tequal" if args.oracle else "") + "\tstatus\n")
    oracle_ok = True
    for s in scenarios:
        lhs = cut_formula(p, c, s)
        status = "violated" if lhs < p.file_size else ("binding" if lhs == p.file_size else "ok")
        line = f"{_u(s)}\t{lhs}"
        if args.oracle:
            mc = min_cut(build_worst_case(p, c, s))
            oracle_ok &= mc == lhs
            line += f"\t{mc}\t{'yes' if mc == lhs else 'NO'}"
        out.write(line + f"\t{status}\n")
    res = check_correct(p, c)
    if args.dot:
        s = res.violated.scenario if res.violated else RecoveryScenario(
            tuple([p.t] * (p.k // p.t) + ([p.k % p.t] if p.k % p.t else [])))
        Path(args.dot).write_text(build_worst_case(p, c, s).to_dot())
    if res.satisfied and oracle_ok:
        out.write(f"PASS ({len(scenarios)} scenarios)\n")
    else:
        witness = f" witness u={_u(res.violated.scenario)}" if res.violated else ""
        out.write(f"FAIL{witness}" + ("" if oracle_ok else " (oracle mismatch)") + "\n")
    return EXIT_OK


def _u(s: RecoveryScenario) -> str:
    return "(" + ",".join(map(str, s.u)) + ")"


# encode / repair / decode


def _device_path(directory: Path, j: int) -> Path:
    return directory / f"dev_{j:03d}.crc"


def _load_dir(directory: Path, n: int, only=None) -> list:
    devices = []
    for j in range(n) if only is None else only:
        path = _device_path(directory, j)
        if path.exists():
            devices.append(blockfile.read(path, j))
        elif only is not None:
            raise FileNotFoundError(f"missing block file {path}")
    return devices


def cmd_encode(args, out) -> int:
    data = Path(args.input).read_bytes()
    p = _params(args)
    devices = codec.encode(data, p, args.point, seed=args.seed, w=args.field)
    directory = Path(args.dir)
    directory.mkdir(parents=True, exist_ok=True)
    for dev in devices:
        blockfile.write(_device_path(directory, dev.device_id), dev)
    plan = codec.plan_for(p, args.point)
    out.write(f"encoded {len(data)} bytes onto {p.n} devices: l={plan.l}, "
              f"{plan.alpha_units} units of {devices[0].unit_bytes} bytes each\n")
    return EXIT_OK


def cmd_repair(args, out) -> int:
    directory = Path(args.dir)
    p = _params(args)
    present = _load_dir(directory, p.n)
    have = {d.device_id for d in present}
    failed = args.failed if args.failed is not None else [j for j in range(p.n) if j not in have]
    if not failed:
        out.write("nothing to repair\n")
        return EXIT_OK
    # failed slots become dead placeholders shaped like the survivors
    template = present[0]
    devices = [dev for dev in present if dev.device_id not in failed]
    for j in failed:
        devices.append(codec.DeviceState(j, template.coeffs, template.payload, False, template.w))
    devices.sort(key=lambda dv: dv.device_id)
    if args.point in ("arc", "mfr"):
        res = codec.repair_adaptive(devices, failed, p.n, p.k, args.seed, args.point)
    else:
        if len(failed) != p.t:
            raise UsageError(f"{len(failed)} devices missing but t={p.t}")
        alive = [dv.device_id for dv in devices if dv.alive]
        donors = args.donors if args.donors is not None else alive[: p.d]
        res = codec.repair(devices, failed, donors, p, args.point, args.seed)
    for dev in res.devices:
        if dev.device_id in failed:
            blockfile.write(_device_path(directory, dev.device_id), dev)
    out.write(f"repaired {sorted(failed)} from d={res.d}: {res.bytes_per_device} bytes per device "
              f"({res.collect_units * res.unit_bytes} collect, "
              f"{res.coordinate_units * res.unit_bytes} coordinate)\n")
    return EXIT_OK


def cmd_decode(args, out) -> int:
    directory = Path(args.dir)
    if args.devices is not None:
        devices = _load_dir(directory, 0, only=args.devices)
    else:
        devices = [blockfile.read(p, int(p.stem.split("_")[1])) for p in sorted(directory.glob("dev_*.crc"))]
    data = codec.decode(devices, [d.device_id for d in devices])
    Path(args.out).write_bytes(data)
    out.write(f"decoded {len(data)} bytes from devices {[d.device_id for d in devices]}\n")
    return EXIT_OK


# simulate

FIGURES = {
    "8": dict(k=32, d=48, t=list(range(1, 17)), strategies=["ecc_lazy", "msr", "mbr", "mscr", "mbcr"]),
    "11": dict(k=32, n=64, t=list(range(1, 33)), strategies=["arc", "mfr", "ecc_lazy"]),
}


def cmd_simulate(args, out) -> int:
    M = args.M
    if args.codec:
        if not args.k:
            raise UsageError("--codec needs -k")
        p = _params(args, t=args.t or 1)
        trace = sim.run_codec_trace(args.codec, p, args.rounds, args.seed)
        text = trace.report.to_csv()
    else:
        preset = FIGURES.get(args.figure, {})
        k = args.k or preset.get("k")
        t_range = [args.t] if args.t is not None else (args.t_range or preset.get("t"))
        strategies = args.strategy or preset.get("strategies")
        if not (k and t_range and strategies):
            raise UsageError("give --figure, or -k, --t-range and --strategy")
        n = args.n or preset.get("n")
        d = args.d or preset.get("d")
        reports = []
        if n:
            reports.append(sim.run_adaptive_sweep(n, k, t_range, M, strategies))
        else:
            if not d:
                raise UsageError("batch sweep needs -d")
            reports.extend(sim.run_batch_sweep(s, k, d, t_range, M) for s in strategies)
        text = reports[0].to_csv() + "".join(r.to_csv().split("\n", 1)[1] for r in reports[1:])
    fh = _open_out(args.out, out)
    fh.write(text)
    if fh is not out:
        fh.close()
    return EXIT_OK


def _open_out(path, default):
    return default if path in (None, "-") else open(path, "w", newline="")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="crcodes", description="Coordinated and adaptive regenerating codes")
    sub = ap.add_subparsers(dest="command", required=True)

    def code_flags(p, need_k=True, t_list=False, t_default=1):
        p.add_argument("-k", type=int, required=need_k, help="devices needed to recover")
        p.add_argument("-d", type=int, help="live devices contacted per repair (default k)")
        if t_list:
            p.add_argument("-t", "--t", dest="t", type=parse_ids, default=[1], help="comma-separated batch sizes")
        else:
            p.add_argument("-t", "--t", dest="t", type=int, default=t_default, help="devices repaired together")
        p.add_argument("-M", type=parse_size, default=Fraction(32 * MB), help="file size, e.g. 32MB")

    p = sub.add_parser("costs", help="per-scheme storage and repair costs")
    code_flags(p)
    p.add_argument("--all", action="store_true", help="the six reference schemes")
    p.add_argument("--scheme", action="append", choices=COST_SCHEMES)
    p.add_argument("--exact", action="store_true", help="print exact rationals")
    p.add_argument("--csv", action="store_true")
    p.set_defaults(func=cmd_costs)

    p = sub.add_parser("tradeoff", help="optimal storage/repair curve as CSV")
    code_flags(p, t_list=True)
    p.add_argument("--samples", type=int, default=20)
    p.add_argument("--out")
    p.set_defaults(func=cmd_tradeoff)

    p = sub.add_parser("verify", help="check every cut constraint, optionally against max-flow")
    code_flags(p)
    p.add_argument("--point", choices=("mscr", "mbcr"), default="mscr")
    p.add_argument("--oracle", action="store_true", help=f"also run max-flow (k <= {ORACLE_MAX_K})")
    p.add_argument("--scale-beta", type=Fraction, default=Fraction(1))
    p.add_argument("--scale-beta-prime", type=Fraction, default=Fraction(1))
    p.add_argument("--dot", help="write the worst-case flow graph in DOT format")
    p.set_defaults(func=cmd_verify)

    for name, fn in (("encode", cmd_encode), ("repair", cmd_repair)):
        p = sub.add_parser(name, help=f"{name} device block files")
        if name == "encode":
            p.add_argument("input")
        p.add_argument("--dir", required=True)
        code_flags(p)
        p.add_argument("-n", type=int, help="device count (default d + t)")
        p.add_argument("--point", choices=("mscr", "mbcr", "arc", "mfr"), default="mscr")
        p.add_argument("--seed", type=int, default=0)
        if name == "encode":
            p.add_argument("--field", type=int, choices=(8, 16), default=16)
        else:
            p.add_argument("--failed", type=parse_ids, help="default: device files that are missing")
            p.add_argument("--donors", type=parse_ids)
        p.set_defaults(func=fn)

    p = sub.add_parser("decode", help="rebuild the file from device block files")
    p.add_argument("--dir", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--devices", type=parse_ids)
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("simulate", help="cost sweeps and codec traces as CSV")
    code_flags(p, need_k=False, t_default=None)
    p.add_argument("-n", type=int)
    p.add_argument("--figure", choices=tuple(FIGURES))
    p.add_argument("--strategy", action="append", choices=sim.STRATEGIES)
    p.add_argument("--t-range", type=parse_range)
    p.add_argument("--codec", choices=sim.CODEC_STRATEGIES, help="run a codec trace instead of formulas")
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)
    return ap


def main(argv=None, out=None) -> int:
    out = sys.stdout if out is None else out
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, out)
    except (UsageError, ScaleExceeded) as e:
        parser.error(str(e))
    except RankDeficient as e:
        print(f"error: decoding infeasible: {e}", file=sys.stderr)
        return EXIT_DECODE
    except (OSError, BlockFormatError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except CRCError as e:
        parser.error(str(e))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
