"""Digital harness: steady-state level prediction, design-window checks,
path latency, and truth-table readout of simulated traces.

The level predictor propagates constant injections through the network in
topological order using flow-weighted mixing and per-channel reaction rules.
Two reaction models are carried side by side: the ideal model (complete
conversion: min-rule annihilation, all-or-nothing catalysis) whose LOW states
are exactly zero, and a finite-kinetics model that applies the closed-form
conversion over each reaction channel's residence time and therefore captures
the algebraic residual left when two equal concentrations annihilate.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .errors import DesignRuleError
from .kinetics import WASTE_SPECIES, ReactionKind, converted_amount
from .network import Netlist, assign_flows, junction_mix
from .transport import Trace

__all__ = [
    "LevelPrediction",
    "BitSchedule",
    "IntervalReading",
    "TruthTableReport",
    "WindowCheck",
    "WindowReport",
    "predict_levels",
    "design_window",
    "latency",
    "read_bits",
    "default_bit_schedule",
    "default_threshold",
]


Combo = Tuple[int, ...]


@dataclass
class LevelPrediction:
    """Steady concentrations per input combination.

    ``ideal`` and ``kinetic`` map combo -> {(probe, species): level};
    ``entry`` maps combo -> {channel: {species: level}} with the ideal
    concentrations entering each channel (after junction mixing).
    """

    inputs: Tuple[str, ...]
    combos: Tuple[Combo, ...]
    ideal: Dict[Combo, Dict[Tuple[str, str], float]]
    kinetic: Dict[Combo, Dict[Tuple[str, str], float]]
    entry: Dict[Combo, Dict[str, Dict[str, float]]]
    output: Tuple[str, str]

    @property
    def high(self) -> float:
        """Largest finite-kinetics output level over all combinations."""
        return max(levels[self.output] for levels in self.kinetic.values())

    def output_ideal(self, combo: Combo) -> float:
        return self.ideal[combo][self.output]

    def output_kinetic(self, combo: Combo) -> float:
        return self.kinetic[combo][self.output]


def predict_levels(netlist: Netlist, combos: Optional[Sequence[Combo]] = None
                   ) -> LevelPrediction:
    """Propagate steady input levels through a library-built netlist."""
    ann = netlist.annotations
    if ann is None or not ann.inputs:
        raise DesignRuleError(
            "level prediction needs builder annotations naming the inputs"
        )
    for ch in netlist.channels:
        if len(ch.reactions) > 1:
            raise DesignRuleError(
                f"channel {ch.id}: multiple reactions per channel are outside "
                f"the library pattern supported by level prediction"
            )
    flows = assign_flows(netlist)
    inputs = ann.inputs
    if combos is None:
        combos = tuple(itertools.product((0, 1), repeat=len(inputs)))
    else:
        combos = tuple(tuple(c) for c in combos)

    inlet_by_id = netlist.inlet_map()
    order = netlist.topological_channels()
    probes_by_channel: Dict[str, list] = {}
    for p in netlist.probes:
        probes_by_channel.setdefault(p.channel, []).append(p)

    input_set = set(inputs)
    ideal_out: Dict[Combo, Dict[Tuple[str, str], float]] = {}
    kinetic_out: Dict[Combo, Dict[Tuple[str, str], float]] = {}
    entry_all: Dict[Combo, Dict[str, Dict[str, float]]] = {}

    for combo in combos:
        bit = dict(zip(inputs, combo))
        for kinetic in (False, True):
            exit_levels: Dict[str, Dict[str, float]] = {}
            entry_levels: Dict[str, Dict[str, float]] = {}
            outputs: Dict[Tuple[str, str], float] = {}
            for ch in order:
                if ch.from_node in inlet_by_id:
                    inlet = inlet_by_id[ch.from_node]
                    levels = {}
                    for s, prof in inlet.profiles.items():
                        if s in input_set:
                            levels[s] = prof.max_level() * bit[s]
                        else:
                            levels[s] = prof.final_level()
                else:
                    ups = netlist.upstream_channels(ch.from_node)
                    levels = junction_mix(
                        [(flows.flow[u.id], exit_levels[u.id]) for u in ups]
                    )
                entry_levels[ch.id] = dict(levels)
                u = flows.velocity[ch.id]
                for p in probes_by_channel.get(ch.id, ()):
                    sampled = _react(levels, ch.reactions, p.position / u, kinetic)
                    for s in p.species:
                        outputs[(p.id, s)] = sampled.get(s, 0.0)
                exit_levels[ch.id] = _react(levels, ch.reactions,
                                            ch.length / u, kinetic)
            if kinetic:
                kinetic_out[combo] = outputs
            else:
                ideal_out[combo] = outputs
                entry_all[combo] = entry_levels

    output = (ann.output_probe, ann.output_species)
    if output not in next(iter(ideal_out.values())):
        raise DesignRuleError(
            f"annotated output {output!r} is not probed by the netlist"
        )
    return LevelPrediction(inputs, combos, ideal_out, kinetic_out, entry_all,
                           output)


def _react(levels: Mapping[str, float], reactions, tau: float, kinetic: bool
           ) -> Dict[str, float]:
    out = dict(levels)
    for r in reactions:
        a = out.get(r.reactant_a, 0.0)
        b = out.get(r.reactant_b, 0.0)
        if r.kind is ReactionKind.ANNIHILATION:
            x = (converted_amount(a, b, r.rate_constant, tau)
                 if kinetic else min(a, b))
            out[r.reactant_a] = a - x
            out[r.reactant_b] = b - x
            if r.product != WASTE_SPECIES:
                out[r.product] = out.get(r.product, 0.0) + x
        else:
            if kinetic:
                gain = b * -math.expm1(-r.rate_constant * a * tau)
            else:
                gain = b if a > 0.0 else 0.0
            out[r.reactant_b] = b - gain
            if r.product != WASTE_SPECIES:
                out[r.product] = out.get(r.product, 0.0) + gain
    return out


# --------------------------------------------------------------------------
# design windows
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class WindowCheck:
    stage: str
    channel: str
    description: str
    lower: float
    value: float
    upper: float
    ok: bool

    @property
    def slack(self) -> float:
        return min(self.value - self.lower, self.upper - self.value)

    def __str__(self) -> str:
        verdict = "ok" if self.ok else "VIOLATED"
        return (f"{self.stage} @ {self.channel}: {self.description} "
                f"[{self.lower:.6g} < {self.value:.6g} < {self.upper:.6g}] "
                f"{verdict}")


@dataclass(frozen=True)
class WindowReport:
    checks: Tuple[WindowCheck, ...]

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def violations(self) -> Tuple[WindowCheck, ...]:
        return tuple(c for c in self.checks if not c.ok)


def design_window(netlist: Netlist, prediction: LevelPrediction, *,
                  fluctuation_fraction: float = 0.01) -> WindowReport:
    """Check every thresholding stage's operating inequality.

    Uses the ideal entry levels: an AND-family threshold must sit strictly
    between the largest single-input rung and the all-inputs rung; an
    OR-family threshold between the fluctuation floor and the weakest
    positive rung; an inverter reference below the depleting signal; a
    cancellation stage needs the depleting species to match or exceed the
    kept one wherever both arrive.
    """
    ann = netlist.annotations
    if ann is None:
        raise DesignRuleError("design_window needs builder annotations")
    checks: List[WindowCheck] = []
    tol = 1e-12
    for stage in ann.stages:
        signal = [prediction.entry[c][stage.channel].get(stage.primary, 0.0)
                  for c in prediction.combos]
        thresh = max(prediction.entry[c][stage.channel].get(stage.secondary, 0.0)
                     for c in prediction.combos)
        if stage.kind == "and_threshold":
            top = max(signal)
            below = [v for v in signal if v < top - tol]
            lower = max(below) if below else 0.0
            checks.append(WindowCheck(
                stage.kind, stage.channel,
                f"post-merge {stage.secondary} must sit between the "
                f"single-input and all-input {stage.primary} levels",
                lower, thresh, top, lower + tol < thresh < top - tol,
            ))
        elif stage.kind == "or_threshold":
            positive = [v for v in signal if v > tol]
            upper = min(positive) if positive else 0.0
            floor = fluctuation_fraction * upper
            checks.append(WindowCheck(
                stage.kind, stage.channel,
                f"post-merge {stage.secondary} must exceed the fluctuation "
                f"floor and stay below the weakest {stage.primary} rung",
                floor, thresh, upper, floor < thresh < upper - tol,
            ))
        elif stage.kind == "not_reference":
            positive = [v for v in signal if v > tol]
            upper = min(positive) if positive else math.inf
            checks.append(WindowCheck(
                stage.kind, stage.channel,
                f"reference {stage.secondary} must be positive yet fully "
                f"depleted by the incoming {stage.primary}",
                0.0, thresh, upper, 0.0 < thresh < upper - tol,
            ))
        elif stage.kind == "xor_cancel":
            kept = [prediction.entry[c][stage.channel].get(stage.secondary, 0.0)
                    for c in prediction.combos]
            gaps = [s - k for s, k in zip(signal, kept) if s > tol and k > tol]
            worst = min(gaps) if gaps else 0.0
            checks.append(WindowCheck(
                stage.kind, stage.channel,
                f"depleting {stage.primary} must cover {stage.secondary} "
                f"wherever both are present",
                0.0, worst, math.inf, worst >= -1e-9,
            ))
        else:
            raise DesignRuleError(f"unknown stage kind {stage.kind!r}")
    return WindowReport(tuple(checks))


# --------------------------------------------------------------------------
# latency
# --------------------------------------------------------------------------


def latency(netlist: Netlist, probe_id: str) -> float:
    """Worst-case transport delay from any inlet to the probe: the maximum
    over paths of the summed channel lengths divided by mean velocities."""
    probe = netlist.probe_map().get(probe_id)
    if probe is None:
        raise ValueError(f"unknown probe {probe_id!r}")
    flows = assign_flows(netlist)
    arrival: Dict[str, float] = {i.id: 0.0 for i in netlist.inlets}
    chan_exit: Dict[str, float] = {}
    for ch in netlist.topological_channels():
        t0 = arrival.get(ch.from_node, 0.0)
        chan_exit[ch.id] = t0 + ch.length / flows.velocity[ch.id]
        node_t = arrival.get(ch.to_node, 0.0)
        arrival[ch.to_node] = max(node_t, chan_exit[ch.id])
    ch = netlist.channel_map()[probe.channel]
    start = arrival.get(ch.from_node, 0.0)
    return start + probe.position / flows.velocity[ch.id]


# --------------------------------------------------------------------------
# truth-table readout
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BitSchedule:
    """Input-combination intervals plus detection-window shaping.

    Each entry is ((t_start, t_stop), input_bits). Detection windows are
    shifted right by ``latency`` and shrunk by ``shrink`` of the interval
    length from each edge.
    """

    intervals: Tuple[Tuple[Tuple[float, float], Combo], ...]
    shrink: float = 0.25
    latency: float = 0.0

    def __post_init__(self):
        spans = [iv for iv, _ in self.intervals]
        for (a0, b0), (a1, b1) in zip(spans, spans[1:]):
            if a1 < b0:
                raise ValueError("schedule intervals must be ordered and disjoint")
        if not 0 <= self.shrink < 0.5:
            raise ValueError("shrink fraction must be in [0, 0.5)")

    def windows(self) -> List[Tuple[float, float, Combo]]:
        out = []
        for (t0, t1), bits in self.intervals:
            pad = self.shrink * (t1 - t0)
            out.append((t0 + self.latency + pad, t1 + self.latency - pad, bits))
        return out


def default_bit_schedule(latency_shift: float = 0.0,
                         shrink: float = 0.25) -> BitSchedule:
    """The standard four-window input schedule: I1 on over [1,3) s and I2
    over [2,4) s walks the combinations (0,0), (1,0), (1,1), (0,1)."""
    return BitSchedule(
        intervals=(
            ((0.0, 1.0), (0, 0)),
            ((1.0, 2.0), (1, 0)),
            ((2.0, 3.0), (1, 1)),
            ((3.0, 4.0), (0, 1)),
        ),
        shrink=shrink,
        latency=latency_shift,
    )


@dataclass(frozen=True)
class IntervalReading:
    interval: Tuple[float, float]
    input_bits: Combo
    window: Tuple[float, float]
    mean: float
    bit: int
    margin: float


@dataclass(frozen=True)
class TruthTableReport:
    probe: str
    species: str
    theta: float
    readings: Tuple[IntervalReading, ...]
    expected: Optional[Tuple[int, ...]] = None

    @property
    def bits(self) -> Tuple[int, ...]:
        return tuple(r.bit for r in self.readings)

    @property
    def passed(self) -> Optional[bool]:
        if self.expected is None:
            return None
        return self.bits == tuple(self.expected)

    def to_dict(self) -> dict:
        return {
            "probe": self.probe,
            "species": self.species,
            "theta": self.theta,
            "bits": list(self.bits),
            "expected": None if self.expected is None else list(self.expected),
            "passed": self.passed,
            "readings": [
                {
                    "interval": list(r.interval),
                    "input_bits": list(r.input_bits),
                    "window": list(r.window),
                    "mean": r.mean,
                    "bit": r.bit,
                    "margin": r.margin,
                }
                for r in self.readings
            ],
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


def read_bits(trace: Trace, probe: str, species: str, schedule: BitSchedule,
              theta: float, expected: Optional[Sequence[int]] = None
              ) -> TruthTableReport:
    """Decide one bit per schedule interval from the window-mean level.

    A window mean above theta reads as 1; the margin is |mean - theta|/theta.
    """
    if not theta > 0:
        raise ValueError("theta must be > 0")
    key = (probe, species)
    if key not in trace.series:
        raise ValueError(f"trace has no series for {key!r}")
    t_max = float(trace.times[-1])
    readings = []
    for (w0, w1, bits), (interval, _) in zip(schedule.windows(),
                                             schedule.intervals):
        if w1 > t_max + 1e-12:
            raise ValueError(
                f"detection window [{w0:.3f}, {w1:.3f}) extends beyond the "
                f"trace, which ends at {t_max:.3f} s"
            )
        mean = trace.window_mean(key, w0, w1)
        bit = 1 if mean > theta else 0
        readings.append(IntervalReading(
            interval=interval, input_bits=bits, window=(w0, w1),
            mean=mean, bit=bit, margin=abs(mean - theta) / theta,
        ))
    return TruthTableReport(
        probe=probe, species=species, theta=theta, readings=tuple(readings),
        expected=None if expected is None else tuple(expected),
    )


def default_threshold(netlist: Netlist, prediction: LevelPrediction) -> float:
    """Half the predicted HIGH output level; falls back to the annotated
    design level for circuits whose prediction is identically zero."""
    high = prediction.high
    if high <= 0:
        ann = netlist.annotations
        high = ann.logic_high if ann is not None else 0.0
    if high <= 0:
        raise DesignRuleError("cannot derive a positive detection threshold")
    return 0.5 * high
