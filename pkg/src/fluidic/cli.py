"""Command-line interface: simulate netlists, validate gates, synthesize
truth tables, and sweep design parameters.

Exit codes: 0 pass, 1 truth-table fail, 2 parse/validation error,
3 numerical/stability error. ``FLUIDIC_THREADS`` caps sweep parallelism.
"""

from __future__ import annotations

import argparse
import os
import re
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

from .errors import (
    DesignRuleError,
    FluidicError,
    ParseError,
    StabilityError,
    SynthesisError,
    ValidationError,
)
from .gates import GateKind, GateParams, build_gate, gate_truth
from .harness import (
    default_bit_schedule,
    default_threshold,
    design_window,
    latency,
    predict_levels,
    read_bits,
)
from .netio import dump_netlist, load_netlist
from .network import validate
from .synthesis import TruthTable, map_to_netlist, metrics, minimize
from .transport import DispersionModel, SolverConfig, Splitting, simulate

EXIT_PASS = 0
EXIT_TABLE_FAIL = 1
EXIT_PARSE = 2
EXIT_NUMERIC = 3

_QUANTITY_RE = re.compile(
    r"^\s*([+-]?\d+(?:\.\d*)?(?:[eE][+-]?\d+)?)\s*([a-zA-Zµμ/^3²³]*)\s*$"
)

_UNIT_SCALE = {
    "": 1.0,
    "m": 1.0,
    "mm": 1e-3,
    "um": 1e-6,
    "µm": 1e-6,
    "μm": 1e-6,
    "m/s": 1.0,
    "cm/s": 1e-2,
    "mm/s": 1e-3,
    "um/s": 1e-6,
    "s": 1.0,
    "ms": 1e-3,
    "mol/m3": 1.0,
    "mol/m^3": 1.0,
    "mol/m³": 1.0,
}


def parse_quantity(text: str) -> float:
    """Parse a number with an optional SI-convenience suffix."""
    m = _QUANTITY_RE.match(str(text))
    if not m:
        raise ParseError(f"cannot parse quantity {text!r}")
    value, unit = m.groups()
    if unit not in _UNIT_SCALE:
        raise ParseError(f"unknown unit {unit!r} in {text!r}")
    return float(value) * _UNIT_SCALE[unit]


def _solver_config(args, t_end_default=5.0) -> SolverConfig:
    return SolverConfig(
        t_end=parse_quantity(args.t_end) if args.t_end else t_end_default,
        dx=parse_quantity(args.dx) if args.dx else 5e-6,
        dt=parse_quantity(args.dt) if getattr(args, "dt", None) else None,
        dispersion=DispersionModel(args.dispersion),
        splitting=Splitting(args.splitting),
    )


def _gate_kind(name: str) -> GateKind:
    try:
        return GateKind(name.upper())
    except ValueError:
        raise ParseError(
            f"unknown gate {name!r}; choose from "
            f"{', '.join(k.value for k in GateKind)}"
        ) from None


def _gate_params(args) -> GateParams:
    params = GateParams()
    if getattr(args, "thl", None) is not None:
        params = replace(params, thl_level=parse_quantity(args.thl))
    if getattr(args, "amp", None) is not None:
        params = replace(params, amp_level=parse_quantity(args.amp))
    return params


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    netlist = load_netlist(args.netlist)
    problems = validate(netlist)
    if problems:
        raise ValidationError(problems)
    config = _solver_config(args)
    trace = simulate(netlist, config)
    out = args.out or "trace.csv"
    trace.write_csv(out)
    print(f"wrote {out} ({len(trace.times)} samples, "
          f"{len(trace.columns)} series)")
    if args.plot:
        from .svgplot import write_trace_svg

        write_trace_svg(trace, args.plot)
        print(f"wrote {args.plot}")
    return EXIT_PASS


def run_gate(kind: GateKind, params: GateParams, t_end: float = 5.0,
             dx: float = 5e-6, dt=None):
    """Build, simulate, and decode one gate; returns the full report bundle."""
    netlist = build_gate(kind, params)
    prediction = predict_levels(netlist)
    windows = design_window(netlist, prediction)
    config = SolverConfig(t_end=t_end, dx=dx, dt=dt)
    started = time.perf_counter()
    trace = simulate(netlist, config)
    elapsed = time.perf_counter() - started
    shift = latency(netlist, "out")
    schedule = default_bit_schedule(latency_shift=shift)
    if kind is GateKind.NOT:
        schedule = replace(
            schedule,
            intervals=tuple(
                ((t0, t1), (bits[0],)) for (t0, t1), bits in schedule.intervals
            ),
        )
    expected = tuple(gate_truth(kind, bits) for _, bits in schedule.intervals)
    theta = default_threshold(netlist, prediction)
    ann = netlist.annotations
    report = read_bits(trace, ann.output_probe, ann.output_species, schedule,
                       theta, expected)
    high = prediction.high
    level_ok = all(
        (r.mean >= 0.8 * high) if exp else (r.mean <= 0.1 * high)
        for r, exp in zip(report.readings, expected)
    )
    return netlist, trace, prediction, windows, report, level_ok, elapsed


def cmd_gate(args) -> int:
    kind = _gate_kind(args.kind)
    params = _gate_params(args)
    t_end = parse_quantity(args.t_end) if args.t_end else 5.0
    dx = parse_quantity(args.dx) if args.dx else 5e-6
    netlist, trace, prediction, windows, report, level_ok, elapsed = run_gate(
        kind, params, t_end=t_end, dx=dx,
        dt=parse_quantity(args.dt) if args.dt else None,
    )
    print(f"gate {kind.value}: simulated {t_end:g} s in {elapsed:.2f} s wall")
    print(f"threshold theta = {report.theta:.6g} mol/m^3")
    for r in report.readings:
        want = gate_truth(kind, r.input_bits)
        print(
            f"  window [{r.window[0]:.3f},{r.window[1]:.3f}) inputs "
            f"{r.input_bits}: mean {r.mean:.4g} -> bit {r.bit} "
            f"(expected {want}, margin {r.margin:.2f})"
        )
    for check in windows.checks:
        print(f"  window check: {check}")
    passed = bool(report.passed) and level_ok and windows.ok
    print(f"result: {'PASS' if passed else 'FAIL'}")
    if args.out:
        trace.write_csv(args.out)
        print(f"wrote {args.out}")
    if args.plot:
        from .svgplot import write_trace_svg

        write_trace_svg(trace, args.plot)
        print(f"wrote {args.plot}")
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(report.to_json())
            fh.write("\n")
        print(f"wrote {args.report}")
    if args.validate:
        return EXIT_PASS if passed else EXIT_TABLE_FAIL
    return EXIT_PASS


def cmd_synth(args) -> int:
    table = TruthTable.from_string(args.table)
    expr = minimize(table)
    netlist = map_to_netlist(expr, arity=table.n)
    out = args.out or f"synth_{table}.json"
    dump_netlist(netlist, out)
    m = metrics(netlist)
    print(f"table {table} -> {expr}")
    print(f"wrote {out}")
    print(
        f"metrics: {m.channel_count} channels, "
        f"{m.total_length * 1e6:.0f} um total length, "
        f"{m.species_count} species, {m.reaction_count} reactions, "
        f"worst-path latency {m.worst_latency:.4f} s"
    )
    return EXIT_PASS


def _sweep_point(kind: GateKind, species: str, value: float, base: GateParams,
                 t_end: float, dx: float):
    if species == "ThL":
        params = replace(base, thl_level=value)
    elif species == "Amp":
        params = replace(base, amp_level=value)
    elif species == "M":
        params = replace(base, m_level=value)
    else:
        raise ParseError(f"sweepable species are ThL, Amp, M; got {species!r}")
    netlist = build_gate(kind, params)
    prediction = predict_levels(netlist)
    config = SolverConfig(t_end=t_end, dx=dx)
    trace = simulate(netlist, config)
    shift = latency(netlist, "out")
    schedule = default_bit_schedule(latency_shift=shift)
    expected = tuple(gate_truth(kind, bits) for _, bits in schedule.intervals)
    ann = netlist.annotations
    # the amplifier sets the design HIGH level regardless of the swept value
    high = ann.logic_high
    theta = 0.5 * high
    report = read_bits(trace, ann.output_probe, ann.output_species, schedule,
                       theta, expected)
    margins = []
    for r, exp in zip(report.readings, expected):
        margins.append((r.mean / high) - 0.8 if exp else 0.1 - (r.mean / high))
    margin = min(margins)
    passed = bool(report.passed) and margin >= 0.0
    return value, passed, margin


def sweep_points(kind: GateKind, species: str, values, base: GateParams,
                 t_end: float, dx: float):
    """Evaluate sweep points, using worker processes when more than one CPU
    is available; output order is by parameter value either way."""
    values = list(values)
    workers = int(os.environ.get("FLUIDIC_THREADS", "0")) or (os.cpu_count() or 1)
    workers = min(workers, len(values)) if values else 0
    if workers <= 1:
        results = [_sweep_point(kind, species, v, base, t_end, dx)
                   for v in values]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_sweep_point, kind, species, v, base,
                                   t_end, dx) for v in values]
            results = [fut.result() for fut in futures]
    return sorted(results, key=lambda r: r[0])


def cmd_sweep(args) -> int:
    kind = _gate_kind(args.kind)
    start = parse_quantity(args.start)
    stop = parse_quantity(args.stop)
    step = parse_quantity(args.step)
    if step <= 0:
        raise ParseError("sweep step must be > 0")
    t_end = parse_quantity(args.t_end) if args.t_end else 5.0
    dx = parse_quantity(args.dx) if args.dx else 5e-6
    values = []
    v = start
    while v <= stop + 1e-12:
        values.append(round(v, 12))
        v += step
    base = GateParams()
    results = sweep_points(kind, args.species, values, base, t_end, dx)
    lines = ["value,passed,margin"]
    for value, passed, margin in results:
        lines.append(f"{value!r},{int(passed)},{margin!r}")
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(f"wrote {args.out} ({len(results)} points)")
    else:
        sys.stdout.write(text)
    return EXIT_PASS


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fluidic",
        description="Simulate and synthesize reaction-based microfluidic "
                    "logic circuits.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a netlist file")
    sim.add_argument("netlist")
    sim.add_argument("--t-end", default=None)
    sim.add_argument("--dx", default=None)
    sim.add_argument("--dt", default=None)
    sim.add_argument("--dispersion", default="taylor-aris",
                     choices=[m.value for m in DispersionModel])
    sim.add_argument("--splitting", default="lie",
                     choices=[s.value for s in Splitting])
    sim.add_argument("--out", default=None, help="trace CSV path")
    sim.add_argument("--plot", default=None, help="SVG plot path")
    sim.set_defaults(func=cmd_simulate)

    gate = sub.add_parser("gate", help="build, simulate, and check one gate")
    gate.add_argument("kind")
    gate.add_argument("--thl", default=None,
                      help="injected threshold concentration")
    gate.add_argument("--amp", default=None,
                      help="injected amplifier concentration")
    gate.add_argument("--t-end", default=None)
    gate.add_argument("--dx", default=None)
    gate.add_argument("--dt", default=None)
    gate.add_argument("--out", default=None, help="trace CSV path")
    gate.add_argument("--plot", default=None, help="SVG plot path")
    gate.add_argument("--report", default=None, help="JSON report path")
    gate.add_argument("--validate", action="store_true",
                      help="exit nonzero unless the truth table passes")
    gate.set_defaults(func=cmd_gate)

    synth = sub.add_parser("synth", help="compile a truth table to a netlist")
    synth.add_argument("table", help="output bits, e.g. 0110")
    synth.add_argument("--out", default=None, help="netlist JSON path")
    synth.set_defaults(func=cmd_synth)

    sweep = sub.add_parser("sweep", help="sweep one injected concentration")
    sweep.add_argument("kind")
    sweep.add_argument("--species", default="ThL", help="ThL, Amp, or M")
    sweep.add_argument("--start", required=True)
    sweep.add_argument("--stop", required=True)
    sweep.add_argument("--step", required=True)
    sweep.add_argument("--t-end", default=None)
    sweep.add_argument("--dx", default=None)
    sweep.add_argument("--out", default=None, help="result CSV path")
    sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StabilityError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ParseError, ValidationError, DesignRuleError, SynthesisError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except FluidicError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE
    except OSError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_PARSE


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
