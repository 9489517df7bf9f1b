"""Builders for the compute modules (addition, subtraction, amplification)
and the logic gates assembled from them.

Every auxiliary supply arm is injected at the same mean velocity and sized by
flow ratio: the mixing arm matches its signal arm, the threshold arm carries
half the signal stream, the amplification arm a third of its stream, and the
reference arm of an inverter a quarter. With the default 10 um input arms
this reproduces the 10/20 um arm widths of the default geometry exactly.

Two sizing modes exist for the main channels: the default keeps a fixed
channel width (so velocity grows at every merge), while ``normalized`` sizes
widths for a uniform velocity, which keeps explicit time steps large in
multi-stage synthesized circuits.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Dict, List, Optional, Tuple

from .errors import DesignRuleError
from .kinetics import (
    WASTE_SPECIES,
    Reaction,
    ReactionKind,
    SignalProfile,
    Species,
    SpeciesTable,
)
from .network import (
    Annotations,
    Channel,
    Inlet,
    Junction,
    JunctionKind,
    Netlist,
    Probe,
    StageInfo,
)

__all__ = [
    "GateKind",
    "GateParams",
    "NetlistBuilder",
    "Stream",
    "build_addition",
    "build_subtraction",
    "build_amplification",
    "build_gate",
    "gate_truth",
    "GATE_OUTPUT_SPECIES",
]


class GateKind(Enum):
    AND = "AND"
    NAND = "NAND"
    OR = "OR"
    NOR = "NOR"
    XOR = "XOR"
    NOT = "NOT"


def gate_truth(kind: GateKind, bits: Tuple[int, ...]) -> int:
    if kind is GateKind.NOT:
        return 1 - bits[0]
    b1, b2 = bits[0], bits[1]
    if kind is GateKind.AND:
        return b1 & b2
    if kind is GateKind.NAND:
        return 1 - (b1 & b2)
    if kind is GateKind.OR:
        return b1 | b2
    if kind is GateKind.NOR:
        return 1 - (b1 | b2)
    if kind is GateKind.XOR:
        return b1 ^ b2
    raise ValueError(f"unknown gate kind {kind!r}")


#: Default injected threshold concentration per gate family (mol/m^3).
THL_DEFAULTS = {
    GateKind.AND: 6.0,
    GateKind.NAND: 6.0,
    GateKind.OR: 2.0,
    GateKind.NOR: 2.0,
}
AMP_DEFAULT = 4.0
REF_DEFAULT_FACTOR = 2.0  # reference level = factor * incoming HIGH level

GATE_OUTPUT_SPECIES = {
    GateKind.AND: "O",
    GateKind.OR: "O",
    GateKind.NAND: "Ref",
    GateKind.NOR: "Ref",
    GateKind.XOR: "O2",
    GateKind.NOT: "Ref",
}


@dataclass(frozen=True)
class GateParams:
    """Geometry, kinetics, and injected concentrations for the builders."""

    input_high: float = 8.0
    m_level: float = 8.0
    thl_level: Optional[float] = None   # None: gate-family default
    amp_level: float = AMP_DEFAULT
    ref_level: Optional[float] = None   # None: scaled from incoming HIGH
    arm_length: float = 100e-6
    reaction_length: float = 300e-6
    convection_length: float = 200e-6
    channel_width: float = 20e-6
    arm_width: float = 10e-6
    depth: float = 10e-6
    velocity: float = 7.5e-3
    rate_constant: float = 5000.0
    diffusion: float = 1e-8
    input_profiles: Optional[Tuple[SignalProfile, SignalProfile]] = None

    def default_input_profiles(self) -> Tuple[SignalProfile, SignalProfile]:
        if self.input_profiles is not None:
            return self.input_profiles
        return (
            SignalProfile.pulse(self.input_high, 1.0, 3.0),
            SignalProfile.pulse(self.input_high, 2.0, 4.0),
        )


@dataclass
class Stream:
    """An open channel end, carrying flow q and a design HIGH level for the
    signal species riding on it."""

    channel: dict
    q: float
    high: float
    species: str = ""

    @property
    def node(self) -> str:
        return self.channel["to"]


class NetlistBuilder:
    """Mutable accumulator for netlist fragments; ``finalize`` freezes it."""

    def __init__(self, params: GateParams, normalized: bool = False):
        self.params = params
        self.normalized = normalized
        self.species: Dict[str, float] = {}
        self.inlets: List[Inlet] = []
        self.junctions: List[dict] = []
        self.channels: List[dict] = []
        self.probes: List[Probe] = []
        self.stages: List[StageInfo] = []
        self._counter = 0

    # --- identifiers ------------------------------------------------------

    def _uid(self, prefix: str) -> str:
        self._counter += 1
        return f"{prefix}{self._counter}"

    def add_species(self, *names: str) -> None:
        for name in names:
            self.species.setdefault(name, self.params.diffusion)

    # --- geometry helpers ---------------------------------------------------

    def main_width(self, q: float) -> float:
        """Width of a main (reaction or convection) channel carrying q."""
        p = self.params
        if self.normalized:
            return q / (p.velocity * p.depth)
        return p.channel_width

    def arm_width_for(self, q: float) -> float:
        """Width of a supply arm injected at the standard velocity."""
        p = self.params
        return q / (p.velocity * p.depth)

    # --- primitives ---------------------------------------------------------

    def channel(self, from_node: str, length: float, width: float,
                reactions: Tuple[Reaction, ...] = ()) -> dict:
        ch = {
            "id": self._uid("ch"),
            "from": from_node,
            "to": self._uid("n"),
            "length": length,
            "width": width,
            "reactions": tuple(reactions),
        }
        self.channels.append(ch)
        return ch

    def inlet_stream(self, name: str, profiles: Dict[str, SignalProfile],
                     width: float, arm_length: Optional[float] = None,
                     high: float = 0.0, species: str = "") -> Stream:
        p = self.params
        inlet_id = self._uid(f"in_{name}_")
        inlet = Inlet(inlet_id, dict(profiles), width=width, depth=p.depth,
                      velocity=p.velocity)
        self.inlets.append(inlet)
        self.add_species(*profiles)
        q = inlet.flow
        length = p.arm_length if arm_length is None else arm_length
        ch = self.channel(inlet_id, length, width)
        return Stream(ch, q, high, species)

    def extend(self, stream: Stream, length: float,
               reactions: Tuple[Reaction, ...] = ()) -> Stream:
        ch = self.channel(stream.node, length, self.main_width(stream.q),
                          reactions)
        return Stream(ch, stream.q, stream.high, stream.species)

    def merge(self, kind: JunctionKind, a: Stream, b: Stream, length: float,
              reactions: Tuple[Reaction, ...] = ()) -> Stream:
        jid = self._uid("j")
        a.channel["to"] = jid
        b.channel["to"] = jid
        q = a.q + b.q
        out = self.channel(jid, length, self.main_width(q), reactions)
        self.junctions.append(
            {"id": jid, "kind": kind,
             "in_ports": (a.channel["id"], b.channel["id"]),
             "out_port": out["id"]}
        )
        return Stream(out, q, 0.0, "")

    def probe(self, pid: str, stream: Stream, species: Tuple[str, ...],
              position: Optional[float] = None) -> None:
        pos = stream.channel["length"] if position is None else position
        self.probes.append(Probe(pid, stream.channel["id"], pos, tuple(species)))

    def stage(self, kind: str, channel: dict, primary: str, secondary: str) -> None:
        self.stages.append(StageInfo(kind, channel["id"], primary, secondary))

    # --- module stages --------------------------------------------------------

    def input_arm(self, species: str, profile: SignalProfile,
                  label: Optional[str] = None) -> Stream:
        """Primary input: a narrow inlet arm carrying one signal species."""
        p = self.params
        self.add_species(species)
        return self.inlet_stream(
            label or species, {species: profile}, width=p.arm_width,
            high=profile.max_level(), species=species,
        )

    def aux_arm(self, name: str, species: str, level: float, q: float) -> Stream:
        """Constant-on supply arm sized to carry flow q."""
        self.add_species(species)
        return self.inlet_stream(
            name, {species: SignalProfile.constant(level)},
            width=self.arm_width_for(q), high=level, species=species,
        )

    def addition_stage(self, in_a: Stream, in_b: Stream, *, m: str, n: str,
                       label: str = "") -> Tuple[Stream, Tuple[float, float]]:
        """Convert two input species to a shared species and converge.

        Returns the merged stream plus the per-input contribution levels
        (the rungs of the concentration ladder on the merged stream).
        """
        p = self.params
        self.add_species(m, n)
        k = p.rate_constant
        branches = []
        for tag, arm in (("1", in_a), ("2", in_b)):
            m_level = p.m_level
            if m_level < arm.high - 1e-12:
                raise DesignRuleError(
                    f"mixing species level {m_level} is below the input HIGH "
                    f"level {arm.high}; complete conversion needs at least that"
                )
            m_arm = self.aux_arm(f"{label}M{tag}", m, m_level, arm.q)
            merged = self.merge(JunctionKind.Y, arm, m_arm, p.reaction_length,
                                reactions=(Reaction(ReactionKind.ANNIHILATION,
                                                    arm.species, m, n, k),))
            branches.append(self.extend(merged, p.convection_length))
        out = self.merge(JunctionKind.CONVERGE, branches[0], branches[1],
                         p.convection_length)
        q_total = branches[0].q + branches[1].q
        alpha_a = (in_a.high / 2.0) * (branches[0].q / q_total)
        alpha_b = (in_b.high / 2.0) * (branches[1].q / q_total)
        out.species = n
        out.high = alpha_a + alpha_b
        return out, (alpha_a, alpha_b)

    def subtraction_stage(self, stream: Stream, *, thl: str, thl_level: float,
                          stage_kind: str, label: str = "") -> Stream:
        """Deplete the stream's signal species with a threshold supply."""
        p = self.params
        self.add_species(thl, WASTE_SPECIES)
        signal = stream.species
        thl_arm = self.aux_arm(f"{label}ThL", thl, thl_level, stream.q / 2.0)
        out = self.merge(
            JunctionKind.T, stream, thl_arm, p.reaction_length,
            reactions=(Reaction(ReactionKind.ANNIHILATION, signal, thl,
                                WASTE_SPECIES, p.rate_constant),),
        )
        self.stage(stage_kind, out.channel, signal, thl)
        out.species = signal
        out.high = max(0.0, stream.high * (2.0 / 3.0) - thl_level / 3.0)
        return self.extend(out, p.convection_length)

    def amplification_stage(self, stream: Stream, *, amp: str, out_species: str,
                            amp_level: float, label: str = "") -> Stream:
        """Catalytic conversion: the stream's signal species gates the
        conversion of the supplied amplifier species into the output."""
        p = self.params
        self.add_species(amp, out_species)
        cat = stream.species
        amp_arm = self.aux_arm(f"{label}Amp", amp, amp_level, stream.q / 3.0)
        out = self.merge(
            JunctionKind.T, stream, amp_arm, p.reaction_length,
            reactions=(Reaction(ReactionKind.CATALYTIC, cat, amp, out_species,
                                p.rate_constant),),
        )
        out.species = out_species
        out.high = amp_level / 4.0
        return self.extend(out, p.convection_length)

    def not_stage(self, stream: Stream, *, ref: str,
                  ref_level: Optional[float] = None, label: str = "") -> Stream:
        """Invert: a constant reference stream is depleted by the incoming
        signal; the remaining reference is the output."""
        p = self.params
        self.add_species(ref, WASTE_SPECIES)
        signal = stream.species
        level = (REF_DEFAULT_FACTOR * stream.high
                 if ref_level is None else ref_level)
        ref_arm = self.aux_arm(f"{label}Ref", ref, level, stream.q / 4.0)
        out = self.merge(
            JunctionKind.T, stream, ref_arm, p.reaction_length,
            reactions=(Reaction(ReactionKind.ANNIHILATION, signal, ref,
                                WASTE_SPECIES, p.rate_constant),),
        )
        self.stage("not_reference", out.channel, signal, ref)
        out.species = ref
        out.high = level / 5.0
        return self.extend(out, p.convection_length)

    def cancel_stage(self, depleting: Stream, kept: Stream,
                     label: str = "") -> Stream:
        """Merge two outputs and annihilate them; the kept species remains
        only where the depleting one is absent."""
        p = self.params
        self.add_species(WASTE_SPECIES)
        out = self.merge(
            JunctionKind.CONVERGE, depleting, kept, p.reaction_length,
            reactions=(Reaction(ReactionKind.ANNIHILATION, depleting.species,
                                kept.species, WASTE_SPECIES, p.rate_constant),),
        )
        self.stage("xor_cancel", out.channel, depleting.species, kept.species)
        out.species = kept.species
        out.high = kept.high * kept.q / (depleting.q + kept.q)
        return self.extend(out, p.convection_length)

    # --- gate cores -----------------------------------------------------------

    def and_or_core(self, family: GateKind, in_a: Stream, in_b: Stream, *,
                    m: str, n: str, thl: str, amp: str, out_species: str,
                    thl_level: Optional[float] = None,
                    amp_level: Optional[float] = None,
                    label: str = "") -> Stream:
        """The shared addition -> subtraction -> amplification pipeline; the
        AND and OR families differ only in the injected threshold level."""
        merged, (alpha_a, alpha_b) = self.addition_stage(
            in_a, in_b, m=m, n=n, label=label
        )
        # ladder rungs seen after the threshold arm joins (dilution factor 2/3)
        both_rung = (alpha_a + alpha_b) * (2.0 / 3.0)
        single_rung = max(alpha_a, alpha_b) * (2.0 / 3.0)
        weakest_rung = min(alpha_a, alpha_b) * (2.0 / 3.0)
        if thl_level is None:
            if family in (GateKind.AND, GateKind.NAND):
                thl_level = 3.0 * 0.5 * (single_rung + both_rung)
            else:
                thl_level = 3.0 * 0.5 * weakest_rung
        stage_kind = ("and_threshold"
                      if family in (GateKind.AND, GateKind.NAND)
                      else "or_threshold")
        after_sub = self.subtraction_stage(
            merged, thl=thl, thl_level=thl_level, stage_kind=stage_kind,
            label=label,
        )
        level = self.params.amp_level if amp_level is None else amp_level
        return self.amplification_stage(
            after_sub, amp=amp, out_species=out_species, amp_level=level,
            label=label,
        )

    # --- finalize ---------------------------------------------------------------

    def finalize(self, annotations: Optional[Annotations] = None) -> Netlist:
        p = self.params
        table = SpeciesTable(
            Species(name, d) for name, d in sorted(self.species.items())
        )
        channels = tuple(
            Channel(
                id=c["id"], from_node=c["from"], to_node=c["to"],
                length=c["length"], width=c["width"], depth=p.depth,
                reactions=c["reactions"],
            )
            for c in self.channels
        )
        junctions = tuple(
            Junction(j["id"], j["kind"], j["in_ports"], j["out_port"])
            for j in self.junctions
        )
        return Netlist(table, tuple(self.inlets), junctions, channels,
                       tuple(self.probes), annotations)


# --- public builders -----------------------------------------------------------


def build_addition(params: Optional[GateParams] = None) -> Netlist:
    """Standalone addition module: I1 + I2 totals onto a shared species N."""
    p = params or GateParams()
    b = NetlistBuilder(p)
    const = SignalProfile.constant(p.input_high)
    in_a = b.input_arm("I1", const)
    in_b = b.input_arm("I2", const)
    merged, _ = b.addition_stage(in_a, in_b, m="M", n="N")
    # branch probes sit on the two convection channels entering the converge
    conv = [c for c in b.channels if c["reactions"] == () and
            c["to"] == b.junctions[-1]["id"]]
    for i, ch in enumerate(conv, 1):
        b.probes.append(Probe(f"branch{i}", ch["id"], ch["length"], ("N", "M")))
    out = b.extend(merged, p.convection_length)
    b.probe("out", out, ("N", "M"))
    ann = Annotations(
        gate="addition", inputs=("I1", "I2"), output_probe="out",
        output_species="N", logic_high=p.input_high / 2.0, stages=(),
    )
    return b.finalize(ann)


def build_subtraction(params: Optional[GateParams] = None, *,
                      input_level: Optional[float] = None,
                      thl_level: Optional[float] = None) -> Netlist:
    """Standalone subtraction module: remaining I after depletion by ThL."""
    p = params or GateParams()
    b = NetlistBuilder(p)
    level = p.input_high if input_level is None else input_level
    thl = THL_DEFAULTS[GateKind.AND] if thl_level is None else thl_level
    in_i = b.inlet_stream(
        "I", {"I": SignalProfile.constant(level)},
        width=b.arm_width_for(p.velocity * p.channel_width * p.depth),
        high=level, species="I",
    )
    after = b.subtraction_stage(in_i, thl="ThL", thl_level=thl,
                                stage_kind="and_threshold")
    b.probe("out", after, ("I", "ThL"))
    ann = Annotations(
        gate="subtraction", inputs=("I",), output_probe="out",
        output_species="I", logic_high=max(0.0, level * 2 / 3 - thl / 3),
        stages=tuple(b.stages),
    )
    return b.finalize(ann)


def build_amplification(params: Optional[GateParams] = None, *,
                        input_level: Optional[float] = None,
                        amp_level: Optional[float] = None) -> Netlist:
    """Standalone amplification module: I catalyzes Amp -> O."""
    p = params or GateParams()
    b = NetlistBuilder(p)
    level = p.input_high if input_level is None else input_level
    amp = p.amp_level if amp_level is None else amp_level
    in_i = b.inlet_stream(
        "I", {"I": SignalProfile.constant(level)},
        width=b.arm_width_for(p.velocity * p.channel_width * p.depth),
        high=level, species="I",
    )
    out = b.amplification_stage(in_i, amp="Amp", out_species="O",
                                amp_level=amp)
    b.probe("out", out, ("O", "Amp", "I"))
    ann = Annotations(
        gate="amplification", inputs=("I",), output_probe="out",
        output_species="O", logic_high=amp / 4.0, stages=(),
    )
    return b.finalize(ann)


def build_gate(kind: GateKind, params: Optional[GateParams] = None) -> Netlist:
    """Build one of the logic gates with the standard input schedule."""
    p = params or GateParams()
    b = NetlistBuilder(p)
    prof1, prof2 = p.default_input_profiles()

    if kind in (GateKind.AND, GateKind.OR, GateKind.NAND, GateKind.NOR):
        in_a = b.input_arm("I1", prof1)
        in_b = b.input_arm("I2", prof2)
        family = (GateKind.AND if kind in (GateKind.AND, GateKind.NAND)
                  else GateKind.OR)
        thl = p.thl_level if p.thl_level is not None else THL_DEFAULTS[kind]
        out = b.and_or_core(family, in_a, in_b, m="M", n="N", thl="ThL",
                            amp="Amp", out_species="O", thl_level=thl,
                            amp_level=p.amp_level)
        if kind in (GateKind.NAND, GateKind.NOR):
            out = b.not_stage(out, ref="Ref", ref_level=p.ref_level)
        inputs = ("I1", "I2")
    elif kind is GateKind.XOR:
        a1 = b.input_arm("I1", prof1, label="a_I1")
        a2 = b.input_arm("I2", prof2, label="a_I2")
        b1 = b.input_arm("I1", prof1, label="b_I1")
        b2 = b.input_arm("I2", prof2, label="b_I2")
        thl1 = p.thl_level if p.thl_level is not None else THL_DEFAULTS[GateKind.AND]
        and_out = b.and_or_core(GateKind.AND, a1, a2, m="M", n="N",
                                thl="ThL1", amp="Amp1", out_species="O1",
                                thl_level=thl1, amp_level=p.amp_level,
                                label="a_")
        or_out = b.and_or_core(GateKind.OR, b1, b2, m="M", n="N",
                               thl="ThL2", amp="Amp2", out_species="O2",
                               thl_level=THL_DEFAULTS[GateKind.OR],
                               amp_level=p.amp_level, label="b_")
        out = b.cancel_stage(and_out, or_out)
        inputs = ("I1", "I2")
    elif kind is GateKind.NOT:
        in_a = b.input_arm("I1", prof1)
        out = b.not_stage(in_a, ref="Ref", ref_level=p.ref_level)
        inputs = ("I1",)
    else:
        raise ValueError(f"unknown gate kind {kind!r}")

    species = GATE_OUTPUT_SPECIES[kind]
    b.probe("out", out, (species,))
    ann = Annotations(
        gate=kind.value, inputs=inputs, output_probe="out",
        output_species=species, logic_high=out.high, stages=tuple(b.stages),
    )
    return b.finalize(ann)
