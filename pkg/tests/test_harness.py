import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fluidic as f
from fluidic.errors import DesignRuleError
from fluidic.gates import GateKind, GateParams, build_gate
from fluidic.harness import (
    BitSchedule,
    default_bit_schedule,
    default_threshold,
    design_window,
    latency,
    predict_levels,
    read_bits,
)
from fluidic.kinetics import SignalProfile, SpeciesTable
from fluidic.network import Channel, Inlet, Netlist, Probe
from fluidic.transport import Trace


# --- predict_levels ------------------------------------------------------------


def test_and_gate_prediction_ladder():
    net = build_gate(GateKind.AND)
    pred = predict_levels(net)
    assert pred.output_ideal((1, 1)) == pytest.approx(1.0)
    for combo in ((0, 0), (1, 0), (0, 1)):
        assert pred.output_ideal(combo) == 0.0
    # internal rungs at the threshold stage
    sub = net.annotations.stages[0].channel
    assert pred.entry[(1, 1)][sub]["N"] == pytest.approx(8.0 / 3.0)
    assert pred.entry[(1, 0)][sub]["N"] == pytest.approx(4.0 / 3.0)
    assert pred.entry[(1, 1)][sub]["ThL"] == pytest.approx(2.0)
    # amplifier stage sees the remaining signal and the diluted supply
    amp_channel = next(
        c.id for c in net.channels
        if c.reactions and c.reactions[0].kind.value == "Catalytic"
    )
    assert pred.entry[(1, 1)][amp_channel]["N"] == pytest.approx(0.5)
    assert pred.entry[(1, 1)][amp_channel]["Amp"] == pytest.approx(1.0)
    assert pred.high == pytest.approx(1.0, rel=1e-6)


def test_or_gate_prediction():
    net = build_gate(GateKind.OR)
    pred = predict_levels(net)
    assert pred.output_ideal((1, 0)) == pytest.approx(1.0)
    assert pred.output_ideal((1, 1)) == pytest.approx(1.0)
    assert pred.output_ideal((0, 0)) == 0.0


def test_xor_prediction_has_algebraic_residual():
    net = build_gate(GateKind.XOR)
    pred = predict_levels(net)
    assert pred.output_ideal((1, 1)) == 0.0
    # finite kinetics leave a0/(1 + a0 k tau) when equal levels annihilate
    residual = pred.output_kinetic((1, 1))
    assert residual == pytest.approx(0.5 / 13.5, rel=1e-2)
    assert pred.output_kinetic((1, 0)) == pytest.approx(0.5, rel=1e-6)


def test_every_low_combo_predicts_exact_zero_ideal():
    for kind in (GateKind.AND, GateKind.OR, GateKind.XOR):
        net = build_gate(kind)
        pred = predict_levels(net)
        for combo in pred.combos:
            from fluidic.gates import gate_truth

            if not gate_truth(kind, combo):
                assert pred.output_ideal(combo) == 0.0


def test_predict_rejects_unannotated_and_multireaction_netlists():
    net = build_gate(GateKind.AND)
    stripped = Netlist(net.species, net.inlets, net.junctions, net.channels,
                       net.probes, None)
    with pytest.raises(DesignRuleError):
        predict_levels(stripped)
    doubled = tuple(
        Channel(c.id, c.from_node, c.to_node, c.length, c.width, c.depth,
                c.reactions * 2 if c.reactions else ())
        for c in net.channels
    )
    with pytest.raises(DesignRuleError):
        predict_levels(Netlist(net.species, net.inlets, net.junctions,
                               doubled, net.probes, net.annotations))


# --- design windows --------------------------------------------------------------


def test_and_window_slack():
    net = build_gate(GateKind.AND)
    report = design_window(net, predict_levels(net))
    assert report.ok
    check = report.checks[0]
    assert check.lower == pytest.approx(4.0 / 3.0)
    assert check.value == pytest.approx(2.0)
    assert check.upper == pytest.approx(8.0 / 3.0)
    assert check.slack == pytest.approx(2.0 / 3.0)


def test_and_window_violated_by_high_threshold():
    net = build_gate(GateKind.AND, GateParams(thl_level=12.0))
    report = design_window(net, predict_levels(net))
    assert not report.ok
    check = report.violations()[0]
    assert check.value == pytest.approx(4.0)
    assert check.upper == pytest.approx(8.0 / 3.0)


def test_or_window_passes_with_default_threshold():
    net = build_gate(GateKind.OR)
    report = design_window(net, predict_levels(net))
    assert report.ok
    check = report.checks[0]
    assert check.value == pytest.approx(2.0 / 3.0)
    assert check.upper == pytest.approx(4.0 / 3.0)
    assert check.lower == pytest.approx(0.01 * 4.0 / 3.0)


def test_all_default_gates_pass_their_windows():
    for kind in GateKind:
        net = build_gate(kind)
        report = design_window(net, predict_levels(net))
        assert report.ok, (kind, [str(c) for c in report.violations()])


# --- latency ----------------------------------------------------------------------


def test_latency_single_channel():
    species = SpeciesTable([("A", 1e-8)])
    inlet = Inlet("in1", {"A": SignalProfile.constant(1.0)},
                  width=20e-6, depth=10e-6, velocity=7.5e-3)
    net = Netlist(species, (inlet,), (),
                  (Channel("c", "in1", "end", 1e-3, 20e-6, 10e-6),),
                  (Probe("out", "c", 1e-3, ("A",)),
                   Probe("start", "c", 0.0, ("A",))))
    assert latency(net, "out") == pytest.approx(1e-3 / 7.5e-3, rel=1e-9)
    assert latency(net, "start") == 0.0


def test_and_gate_latency_matches_hand_sum():
    net = build_gate(GateKind.AND)
    # path: input arm, conversion channel, branch channel, merged channel,
    # threshold channel, channel to the amplifier, amplifier channel, outlet
    lengths = [100e-6, 300e-6, 200e-6, 200e-6, 300e-6, 200e-6, 300e-6, 200e-6]
    speeds = [7.5e-3, 7.5e-3, 7.5e-3, 15e-3, 22.5e-3, 22.5e-3, 30e-3, 30e-3]
    expected = sum(l / v for l, v in zip(lengths, speeds))
    assert latency(net, "out") == pytest.approx(expected, rel=1e-9)


# --- read_bits ---------------------------------------------------------------------


def _trace_from(times, values, probe="out", species="O"):
    arr = np.asarray(values, dtype=float)
    return Trace(np.asarray(times, dtype=float), {(probe, species): arr},
                 [(probe, species)])


def test_read_bits_decodes_step_pattern():
    times = np.linspace(0.0, 4.0, 401)
    values = np.where((times >= 2.0) & (times < 3.0), 1.0, 0.0)
    trace = _trace_from(times, values)
    report = read_bits(trace, "out", "O", default_bit_schedule(), 0.5,
                       expected=(0, 0, 1, 0))
    assert report.bits == (0, 0, 1, 0)
    assert report.passed
    assert report.readings[2].margin > 0.9


def test_read_bits_all_zero_trace():
    times = np.linspace(0.0, 4.0, 101)
    trace = _trace_from(times, np.zeros_like(times))
    report = read_bits(trace, "out", "O", default_bit_schedule(), 0.25)
    assert report.bits == (0, 0, 0, 0)
    assert report.passed is None


def test_read_bits_rejects_short_trace_and_bad_theta():
    times = np.linspace(0.0, 2.0, 51)
    trace = _trace_from(times, np.zeros_like(times))
    with pytest.raises(ValueError):
        read_bits(trace, "out", "O", default_bit_schedule(), 0.5)
    with pytest.raises(ValueError):
        read_bits(trace, "out", "O", default_bit_schedule(), 0.0)


def test_report_serializes_to_json():
    times = np.linspace(0.0, 4.0, 101)
    trace = _trace_from(times, np.ones_like(times))
    report = read_bits(trace, "out", "O", default_bit_schedule(), 0.5,
                       expected=(1, 1, 1, 1))
    doc = report.to_dict()
    assert doc["passed"] is True
    assert doc["bits"] == [1, 1, 1, 1]
    assert len(doc["readings"]) == 4
    assert report.to_json().startswith("{")


@settings(max_examples=60)
@given(
    values=st.lists(st.floats(0, 2), min_size=41, max_size=41),
    theta_lo=st.floats(0.1, 1.0),
    bump=st.floats(0.01, 1.0),
)
def test_read_bits_monotone_in_theta(values, theta_lo, bump):
    times = np.linspace(0.0, 4.0, 41)
    trace = _trace_from(times, values)
    schedule = default_bit_schedule()
    lo = read_bits(trace, "out", "O", schedule, theta_lo).bits
    hi = read_bits(trace, "out", "O", schedule, theta_lo + bump).bits
    assert all(h <= l for h, l in zip(hi, lo))


def test_schedule_validation():
    with pytest.raises(ValueError):
        BitSchedule(intervals=(((0.0, 2.0), (0, 0)), ((1.0, 3.0), (1, 0))))
    with pytest.raises(ValueError):
        BitSchedule(intervals=(((0.0, 1.0), (0, 0)),), shrink=0.6)


def test_default_threshold_uses_prediction_or_annotation():
    net = build_gate(GateKind.AND)
    pred = predict_levels(net)
    assert default_threshold(net, pred) == pytest.approx(0.5, rel=1e-6)
