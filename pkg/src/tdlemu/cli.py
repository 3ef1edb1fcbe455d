"""Command-line front end.

Exit codes: 0 success, 1 domain error (unrealizable plan, bad scenario or
input file, failed check), 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import _kernels
from .engine import Channel, EngineParams, TapError
from .planner import (PathSpec, PlanError, derive_specs, max_attenuation_db, plan_multipath,
                      resolution_curve, write_resolution_csv)
from .scenario import Schedule, ScenarioError, compile_schedule, parse_scenario, parse_schedule
from .stream_io import (FORMATS, FrameError, format_from_path, iter_iq, parse_hostport, read_iq,
                        run_bridge, write_iq)
from .verify import (MeasurementError, VerificationReport, estimate_delay,
                     measure_attenuation_db)

log = logging.getLogger("tdlemu")

DOMAIN_ERRORS = (PlanError, ScenarioError, TapError, MeasurementError, FrameError, OSError)


class DomainError(Exception):
    pass


def _num_int(text: str) -> int:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not value.is_integer():
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    return int(value)


def _path_spec(text: str) -> PathSpec:
    try:
        d, a = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected DELAY_NS,ATTEN_DB, got {text!r}") from None
    return PathSpec(d, a)


def _engine_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("engine")
    g.add_argument("--clock-hz", type=float, default=200e6, help="FIR clock f (default 200e6)")
    g.add_argument("--taps", type=_num_int, default=42, help="number of taps N (default 42)")
    g.add_argument("--coeff-bits", type=_num_int, default=15, help="coefficient bits r (default 15)")
    g.add_argument("--shift-bits", type=_num_int, default=8, help="max right shift s (default 8)")
    return p


def build_parser() -> argparse.ArgumentParser:
    engine = _engine_parent()
    parser = argparse.ArgumentParser(prog="tdlemu", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("spec", parents=[engine], help="print the derived specification sheet")
    p.add_argument("--update-rate", type=float, default=1000.0, help="channel updates per second u")
    p.add_argument("--resolution-curve", metavar="PATH", help="write the attenuation resolution curve CSV")
    p.add_argument("--curve-step", type=float, default=0.1, help="curve grid step in dB")

    p = sub.add_parser("plan", parents=[engine], help="plan paths or compile a scenario")
    p.add_argument("--path", type=_path_spec, action="append", metavar="DELAY_NS,ATTEN_DB",
                   help="path to plan (repeat up to 3 times)")
    p.add_argument("--scenario", metavar="CSV", help="compile a scenario CSV into a schedule")
    p.add_argument("--rate", type=float, help="sample rate for scenario compilation (default: clock)")
    p.add_argument("--out", metavar="PATH", help="schedule CSV destination (default stdout)")

    p = sub.add_parser("run", parents=[engine], help="run IQ samples through the channel")
    p.add_argument("--in", dest="inp", metavar="PATH", help="input IQ file")
    p.add_argument("--out", metavar="PATH", help="output IQ file")
    p.add_argument("--format", choices=sorted(FORMATS), help="IQ format (default from extension, else sc16)")
    p.add_argument("--schedule", metavar="CSV", help="compiled schedule CSV")
    p.add_argument("--scenario", metavar="CSV", help="scenario CSV (compiled at --rate)")
    p.add_argument("--path", type=_path_spec, action="append", metavar="DELAY_NS,ATTEN_DB",
                   help="static channel path (repeat up to 3 times)")
    p.add_argument("--rate", type=float, help="sample rate Fs (default: clock)")
    p.add_argument("--mode", choices=["combined", "hardware-order"], default="combined")
    p.add_argument("--block-size", type=_num_int, default=65536)
    p.add_argument("--udp-in", metavar="HOST:PORT")
    p.add_argument("--udp-out", metavar="HOST:PORT")
    p.add_argument("--wall-clock", action="store_true",
                   help="bridge mode: apply schedule by elapsed time (not reproducible)")
    p.add_argument("--idle-timeout", type=float, default=5.0)
    p.add_argument("--max-frames", type=_num_int)

    p = sub.add_parser("verify", help="measure delay or attenuation between two captures")
    vsub = p.add_subparsers(dest="what", required=True)
    for name in ("delay", "atten"):
        v = vsub.add_parser(name)
        v.add_argument("--ref", required=True, metavar="PATH")
        v.add_argument("--test", required=True, metavar="PATH")
        v.add_argument("--format", choices=sorted(FORMATS))
        v.add_argument("--csv", metavar="PATH", help="also write the report as CSV")
        if name == "delay":
            v.add_argument("--rate", type=float, required=True, help="sample rate Fs")
            v.add_argument("--expect-ns", type=float, help="expected delay")
            v.add_argument("--tol-ns", type=float, default=0.0)
        else:
            v.add_argument("--expect-db", type=float, help="expected attenuation")
            v.add_argument("--tol-db", type=float, default=0.05)

    p = sub.add_parser("selfcheck", parents=[engine], help="run the built-in oracle checks")
    p.add_argument("--cases", type=_num_int, default=10)
    p.add_argument("--seed", type=_num_int, default=0)
    return parser


def _params(args) -> EngineParams:
    try:
        return EngineParams(args.clock_hz, args.taps, args.coeff_bits, args.shift_bits)
    except ValueError as exc:
        raise DomainError(str(exc)) from exc


def cmd_spec(args) -> int:
    params = _params(args)
    sheet = derive_specs(params, args.update_rate)
    for line in sheet.lines():
        print(line)
    print(f"note: {sheet.TABLE_MAX_ATTEN_NOTE}")
    if args.resolution_curve:
        top = max_attenuation_db(params)
        grid = np.round(np.arange(0.0, top + 1e-9, args.curve_step), 10)
        write_resolution_csv(resolution_curve(params, grid), args.resolution_curve)
        print(f"resolution_curve={args.resolution_curve} rows={grid.size}")
    return 0


def _load_schedule(args, params, rate):
    if sum(x is not None for x in (args.schedule, args.scenario, args.path)) > 1:
        raise DomainError("use only one of --schedule, --scenario, --path")
    if args.schedule:
        return parse_schedule(Path(args.schedule).read_text(encoding="utf-8"), params, rate).entries
    if args.scenario:
        sc = parse_scenario(Path(args.scenario).read_text(encoding="utf-8"))
        return compile_schedule(sc, params, rate).entries
    if args.path:
        plan = plan_multipath(args.path, params)
        for w in plan.warnings:
            log.warning(w)
        return [(0, plan.taps)]
    return []


def cmd_plan(args) -> int:
    params = _params(args)
    if args.scenario:
        rate = args.rate or params.clock_hz
        sc = parse_scenario(Path(args.scenario).read_text(encoding="utf-8"))
        text = compile_schedule(sc, params, rate).to_csv()
        if args.out:
            Path(args.out).write_text(text, encoding="utf-8")
        else:
            sys.stdout.write(text)
        return 0
    if not args.path:
        raise DomainError("plan needs --path or --scenario")
    plan = plan_multipath(args.path, params)
    for k, p in enumerate(plan.paths, start=1):
        print(f"path{k}: tap_index={p.tap_index} coeff={p.coeff} shift={p.shift_needed} "
              f"achieved_delay_ns={p.achieved_delay_ns:.6g} achieved_atten_db={p.achieved_atten_db:.6f} "
              f"delay_error_ns={p.delay_error_ns:.6g} atten_error_db={p.atten_error_db:.6g}")
    print("taps=" + ";".join(f"{i}:{b}" for i, b in plan.taps.taps) + f" shift_j={plan.taps.shift}")
    for w in plan.warnings:
        print(f"warning: {w}")
    if args.out:
        Path(args.out).write_text(Schedule([(0, plan.taps)], params, 0.0).to_csv(), encoding="utf-8")
    return 0


def cmd_run(args) -> int:
    params = _params(args)
    rate = args.rate or params.clock_hz
    bridge = args.udp_in or args.udp_out
    if bridge and not (args.udp_in and args.udp_out):
        raise DomainError("bridge mode needs both --udp-in and --udp-out")
    if not bridge and not (args.inp and args.out):
        raise DomainError("file mode needs --in and --out")
    if args.block_size < 1:
        raise DomainError("--block-size must be >= 1")
    updates = _load_schedule(args, params, rate)
    channel = Channel(params=params, mode=args.mode, updates=updates)

    if bridge:
        try:
            src, dst = parse_hostport(args.udp_in), parse_hostport(args.udp_out)
        except ValueError as exc:
            raise DomainError(str(exc)) from exc
        stats = run_bridge(channel, src, dst, idle_timeout=args.idle_timeout,
                           max_frames=args.max_frames, wall_clock=args.wall_clock,
                           sample_rate_hz=rate)
        print(f"frames_in={stats.frames_in} frames_out={stats.frames_out} "
              f"samples={stats.samples} lost_frames={stats.lost_frames} clipped={channel.stats.clipped}")
        return 0

    fmt_in = args.format or format_from_path(args.inp)
    fmt_out = args.format or format_from_path(args.out)
    blocks = list(iter_iq(args.inp, fmt_in, args.block_size))
    out = [channel.process(b) for b in blocks]
    write_iq(np.concatenate(out) if out else np.zeros((0, 2), np.int16), args.out, fmt_out)
    print(f"samples={channel.stats.samples_processed} clipped={channel.stats.clipped} "
          f"updates={len(updates)} backend={_kernels.BACKEND}")
    return 0


def cmd_verify(args) -> int:
    fmt = args.format
    ref = read_iq(args.ref, fmt or format_from_path(args.ref))
    test = read_iq(args.test, fmt or format_from_path(args.test))
    if args.what == "delay":
        est = estimate_delay(ref, test, args.rate)
        report = VerificationReport(
            measured_delay_s=est.delay_s,
            requested_delay_s=None if args.expect_ns is None else args.expect_ns * 1e-9,
            delay_tol_s=args.tol_ns * 1e-9,
            peak_corr=est.peak_corr,
        )
        text = report.to_text() + f"lag_samples={est.lag_samples}\n" \
            f"measured_delay_ns={est.delay_s * 1e9:.9g}\nreliable={'true' if est.reliable else 'false'}\n"
    else:
        report = VerificationReport(
            measured_atten_db=measure_attenuation_db(ref, test),
            requested_atten_db=args.expect_db,
            atten_tol_db=args.tol_db,
        )
        text = report.to_text()
    sys.stdout.write(text)
    if args.csv:
        Path(args.csv).write_text(report.to_csv(), encoding="utf-8")
    if report.delay_pass is False or report.atten_pass is False:
        return 1
    return 0


def cmd_selfcheck(args) -> int:
    from .selfcheck import run_all
    params = _params(args)
    ok = True
    for name, passed, detail in run_all(params, cases=args.cases, seed=args.seed):
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        ok &= passed
    return 0 if ok else 1


COMMANDS = {"spec": cmd_spec, "plan": cmd_plan, "run": cmd_run, "verify": cmd_verify,
            "selfcheck": cmd_selfcheck}


def execute(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (DomainError, *DOMAIN_ERRORS) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()
