import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import fluidic as f
from fluidic.errors import ValidationError
from fluidic.kinetics import Reaction, ReactionKind, SignalProfile, SpeciesTable
from fluidic.network import (
    Channel,
    Inlet,
    Junction,
    JunctionKind,
    Netlist,
    Probe,
    assign_flows,
    junction_mix,
    validate,
)


def _inlet(iid, species="A", level=8.0, width=10e-6):
    return Inlet(iid, {species: SignalProfile.constant(level)},
                 width=width, depth=10e-6, velocity=7.5e-3)


def y_junction_netlist():
    """Two 10x10 um inlets at 0.75 cm/s merging into a 20x10 um outlet."""
    species = SpeciesTable([("A", 1e-8), ("B", 1e-8)])
    inlets = (_inlet("in1", "A"), _inlet("in2", "B"))
    channels = (
        Channel("arm1", "in1", "j1", 100e-6, 10e-6, 10e-6),
        Channel("arm2", "in2", "j1", 100e-6, 10e-6, 10e-6),
        Channel("outch", "j1", "end", 200e-6, 20e-6, 10e-6),
    )
    junctions = (Junction("j1", JunctionKind.Y, ("arm1", "arm2"), "outch"),)
    probes = (Probe("out", "outch", 200e-6, ("A", "B")),)
    return Netlist(species, inlets, junctions, channels, probes)


def test_validate_accepts_builder_output_and_y_netlist():
    assert validate(y_junction_netlist()) == []
    for kind in f.GateKind:
        assert validate(f.build_gate(kind)) == []


def test_validate_flags_bad_junction_arity():
    net = y_junction_netlist()
    extra_inlet = _inlet("in3", "A")
    extra = Channel("arm3", "in3", "j1", 100e-6, 10e-6, 10e-6)
    bad = Netlist(net.species, net.inlets + (extra_inlet,), net.junctions,
                  net.channels + (extra,), net.probes)
    messages = [str(v) for v in validate(bad)]
    assert any("junction j1" in m and "two in-edges" in m for m in messages)


def test_validate_flags_cycle():
    species = SpeciesTable([("A", 1e-8)])
    channels = (
        Channel("c1", "n1", "n2", 1e-4, 1e-5, 1e-5),
        Channel("c2", "n2", "n1", 1e-4, 1e-5, 1e-5),
    )
    bad = Netlist(species, (), (), channels, ())
    messages = [str(v) for v in validate(bad)]
    assert any("cycle" in m for m in messages)


def test_validate_flags_unknown_species_and_probe_position():
    net = y_junction_netlist()
    rxn = Reaction(ReactionKind.ANNIHILATION, "A", "Ghost", "W", 1.0)
    channels = tuple(
        c if c.id != "outch" else Channel("outch", "j1", "end", 200e-6,
                                          20e-6, 10e-6, (rxn,))
        for c in net.channels
    )
    bad = Netlist(net.species, net.inlets, net.junctions, channels,
                  (Probe("out", "outch", 5e-4, ("A",)),))
    messages = [str(v) for v in validate(bad)]
    assert any("Ghost" in m for m in messages)
    assert any("position outside channel" in m for m in messages)


def test_assign_flows_y_junction_continuity():
    flows = assign_flows(y_junction_netlist())
    assert flows.flow["arm1"] == pytest.approx(7.5e-13)
    assert flows.flow["arm2"] == pytest.approx(7.5e-13)
    assert flows.flow["outch"] == pytest.approx(1.5e-12)
    assert flows.velocity["outch"] == pytest.approx(7.5e-3)


def test_assign_flows_single_channel_uniform_velocity():
    species = SpeciesTable([("A", 1e-8)])
    net = Netlist(
        species, (_inlet("in1", "A", width=20e-6),), (),
        (Channel("c", "in1", "end", 1e-3, 20e-6, 10e-6),),
        (),
    )
    flows = assign_flows(net)
    assert flows.velocity["c"] == pytest.approx(7.5e-3)


def test_assign_flows_requires_valid_netlist():
    species = SpeciesTable([("A", 1e-8)])
    floating = Netlist(
        species, (), (), (Channel("c", "x", "y", 1e-4, 1e-5, 1e-5),), ()
    )
    with pytest.raises(ValidationError):
        assign_flows(floating)


def test_gate_junction_flow_budget():
    """The threshold junction of the AND gate merges 3.0e-12 with 1.5e-12."""
    net = f.build_gate(f.GateKind.AND)
    flows = assign_flows(net)
    stage = net.annotations.stages[0]
    sub_channel = stage.channel
    assert flows.flow[sub_channel] == pytest.approx(4.5e-12)
    ups = net.upstream_channels(net.channel_map()[sub_channel].from_node)
    qs = sorted(flows.flow[c.id] for c in ups)
    assert qs == [pytest.approx(1.5e-12), pytest.approx(3.0e-12)]


def test_junction_mix_examples():
    assert junction_mix([(1e-12, {"A": 8.0}), (1e-12, {"A": 0.0})])["A"] == 4.0
    mixed = junction_mix([(3.0e-12, {"N": 4.0}), (1.5e-12, {"ThL": 6.0})])
    assert mixed["N"] == pytest.approx(8.0 / 3.0)
    assert mixed["ThL"] == pytest.approx(2.0)
    assert junction_mix([(2e-12, {"A": 3.0})]) == {"A": 3.0}


def test_junction_mix_rejects_empty_and_zero_flow():
    with pytest.raises(ValueError):
        junction_mix([])
    with pytest.raises(ValueError):
        junction_mix([(0.0, {"A": 1.0})])


@settings(max_examples=100)
@given(
    q1=st.floats(1e-13, 1e-11),
    q2=st.floats(1e-13, 1e-11),
    c1=st.floats(0, 10),
    c2=st.floats(0, 10),
)
def test_junction_mix_conserves_flux_and_bounds(q1, q2, c1, c2):
    out = junction_mix([(q1, {"A": c1}), (q2, {"A": c2})])["A"]
    assert min(c1, c2) - 1e-12 <= out <= max(c1, c2) + 1e-12
    assert (q1 + q2) * out == pytest.approx(q1 * c1 + q2 * c2, rel=1e-12)
