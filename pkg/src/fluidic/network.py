"""Netlist data model, structural validation, and hydraulic flow assignment.

A netlist is a DAG of inlet nodes, channels, and merging junctions. Channels
connect named nodes; a node that is neither an inlet nor a junction is either
a pass-through joint (one channel in, one out) or a terminal outlet. Flows are
prescribed at the inlets and propagate downstream by continuity; there is no
pressure solve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .errors import ValidationError
from .kinetics import Reaction, SignalProfile, SpeciesTable

__all__ = [
    "JunctionKind",
    "Inlet",
    "Junction",
    "Channel",
    "Probe",
    "StageInfo",
    "Annotations",
    "Netlist",
    "Violation",
    "FlowMap",
    "validate",
    "assign_flows",
    "junction_mix",
]


class JunctionKind(Enum):
    Y = "Y"
    T = "T"
    CONVERGE = "Converge"


@dataclass(frozen=True)
class Inlet:
    """A reservoir injecting a flow with prescribed species profiles."""

    id: str
    profiles: Mapping[str, SignalProfile]
    width: float
    depth: float
    velocity: float  # mean injection velocity, m/s

    def __post_init__(self):
        if not (self.width > 0 and self.depth > 0 and self.velocity > 0):
            raise ValueError(f"inlet {self.id!r}: width, depth, velocity must be > 0")

    @property
    def flow(self) -> float:
        return self.velocity * self.width * self.depth


@dataclass(frozen=True)
class Junction:
    id: str
    kind: JunctionKind
    in_ports: Tuple[str, ...]  # channel ids merging here
    out_port: str              # channel id leaving here


@dataclass(frozen=True)
class Channel:
    """A straight channel segment; nonempty ``reactions`` marks it as a
    reaction channel, otherwise it only carries convection and diffusion."""

    id: str
    from_node: str
    to_node: str
    length: float
    width: float
    depth: float
    reactions: Tuple[Reaction, ...] = ()

    def __post_init__(self):
        if not (self.length > 0 and self.width > 0 and self.depth > 0):
            raise ValueError(f"channel {self.id!r}: dimensions must be > 0")

    @property
    def cross_section(self) -> float:
        return self.width * self.depth


@dataclass(frozen=True)
class Probe:
    id: str
    channel: str
    position: float  # distance from channel entry, m
    species: Tuple[str, ...]


@dataclass(frozen=True)
class StageInfo:
    """Builder metadata describing one thresholding stage for window checks.

    ``kind`` is one of ``and_threshold``, ``or_threshold``, ``not_reference``,
    ``xor_cancel``. ``primary`` is the signal species, ``secondary`` the
    depleting/threshold species, and ``channel`` the reaction channel id.
    """

    kind: str
    channel: str
    primary: str
    secondary: str


@dataclass(frozen=True)
class Annotations:
    """Optional circuit-level metadata attached by the gate builders."""

    gate: str = ""
    inputs: Tuple[str, ...] = ()
    output_probe: str = ""
    output_species: str = ""
    logic_high: float = 0.0
    stages: Tuple[StageInfo, ...] = ()


@dataclass(frozen=True, eq=False)
class Netlist:
    species: SpeciesTable
    inlets: Tuple[Inlet, ...]
    junctions: Tuple[Junction, ...]
    channels: Tuple[Channel, ...]
    probes: Tuple[Probe, ...]
    annotations: Optional[Annotations] = None

    def __eq__(self, other) -> bool:
        if not isinstance(other, Netlist):
            return NotImplemented
        return (
            self.species == other.species
            and self.inlets == other.inlets
            and self.junctions == other.junctions
            and self.channels == other.channels
            and self.probes == other.probes
            and self.annotations == other.annotations
        )

    # --- lookup helpers -------------------------------------------------

    def channel_map(self) -> Dict[str, Channel]:
        return {c.id: c for c in self.channels}

    def junction_map(self) -> Dict[str, Junction]:
        return {j.id: j for j in self.junctions}

    def inlet_map(self) -> Dict[str, Inlet]:
        return {i.id: i for i in self.inlets}

    def probe_map(self) -> Dict[str, Probe]:
        return {p.id: p for p in self.probes}

    def upstream_channels(self, node: str) -> List[Channel]:
        return [c for c in self.channels if c.to_node == node]

    def downstream_channels(self, node: str) -> List[Channel]:
        return [c for c in self.channels if c.from_node == node]

    def terminal_channels(self) -> List[Channel]:
        fed = {c.from_node for c in self.channels}
        return [c for c in self.channels if c.to_node not in fed]

    def topological_channels(self) -> List[Channel]:
        """Channels ordered so every channel appears after all channels that
        feed its entry node. Raises ValidationError on a cycle."""
        by_from: Dict[str, List[Channel]] = {}
        for c in self.channels:
            by_from.setdefault(c.from_node, []).append(c)
        indeg = {c.id: len(self.upstream_channels(c.from_node)) for c in self.channels}
        ready = [c for c in self.channels if indeg[c.id] == 0]
        order: List[Channel] = []
        while ready:
            ch = ready.pop(0)
            order.append(ch)
            for nxt in by_from.get(ch.to_node, ()):
                indeg[nxt.id] -= 1
                if indeg[nxt.id] == 0:
                    ready.append(nxt)
        if len(order) != len(self.channels):
            stuck = sorted(set(indeg) - {c.id for c in order})
            raise ValidationError(
                [Violation("netlist", f"cycle involving channels {stuck}")]
            )
        return order


@dataclass(frozen=True)
class Violation:
    element: str
    message: str

    def __str__(self) -> str:
        return f"{self.element}: {self.message}"


def validate(netlist: Netlist) -> List[Violation]:
    """Check every structural invariant; returns an empty list iff valid."""
    out: List[Violation] = []
    chan_ids = [c.id for c in netlist.channels]
    for dup in _duplicates(chan_ids):
        out.append(Violation(f"channel {dup}", "duplicate channel id"))
    for dup in _duplicates([j.id for j in netlist.junctions]):
        out.append(Violation(f"junction {dup}", "duplicate junction id"))
    for dup in _duplicates([i.id for i in netlist.inlets]):
        out.append(Violation(f"inlet {dup}", "duplicate inlet id"))
    for dup in _duplicates([p.id for p in netlist.probes]):
        out.append(Violation(f"probe {dup}", "duplicate probe id"))

    chan_by_id = netlist.channel_map()
    inlet_ids = {i.id for i in netlist.inlets}
    junction_ids = {j.id for j in netlist.junctions}

    # species references
    for ch in netlist.channels:
        for r in ch.reactions:
            for sp in (r.reactant_a, r.reactant_b, r.product):
                if sp not in netlist.species:
                    out.append(
                        Violation(
                            f"channel {ch.id}",
                            f"reaction references unknown species {sp!r}",
                        )
                    )
    for inlet in netlist.inlets:
        for sp in inlet.profiles:
            if sp not in netlist.species:
                out.append(
                    Violation(f"inlet {inlet.id}", f"injects unknown species {sp!r}")
                )
    for p in netlist.probes:
        for sp in p.species:
            if sp not in netlist.species:
                out.append(Violation(f"probe {p.id}", f"unknown species {sp!r}"))
        if p.channel not in chan_by_id:
            out.append(Violation(f"probe {p.id}", f"unknown channel {p.channel!r}"))
        elif not 0 <= p.position <= chan_by_id[p.channel].length:
            out.append(Violation(f"probe {p.id}", "position outside channel"))

    # junction arity and port consistency
    for j in netlist.junctions:
        ins = [c.id for c in netlist.channels if c.to_node == j.id]
        outs = [c.id for c in netlist.channels if c.from_node == j.id]
        if len(ins) != 2 or len(outs) != 1:
            out.append(
                Violation(
                    f"junction {j.id}",
                    f"must have exactly two in-edges and one out-edge, "
                    f"found {len(ins)} in / {len(outs)} out",
                )
            )
        if sorted(j.in_ports) != sorted(ins):
            out.append(
                Violation(f"junction {j.id}", "in_ports do not match incoming channels")
            )
        if outs and j.out_port != outs[0]:
            out.append(
                Violation(f"junction {j.id}", "out_port does not match outgoing channel")
            )

    # node degree rules for inlets and plain joints
    for inlet in netlist.inlets:
        ins = netlist.upstream_channels(inlet.id)
        outs = netlist.downstream_channels(inlet.id)
        if ins:
            out.append(Violation(f"inlet {inlet.id}", "has incoming channels"))
        if len(outs) != 1:
            out.append(Violation(f"inlet {inlet.id}", "must feed exactly one channel"))
    plain_nodes = (
        {c.from_node for c in netlist.channels} | {c.to_node for c in netlist.channels}
    ) - inlet_ids - junction_ids
    for node in sorted(plain_nodes):
        ins = netlist.upstream_channels(node)
        outs = netlist.downstream_channels(node)
        if len(outs) > 1:
            out.append(Violation(f"node {node}", "fans out to more than one channel"))
        if not ins and outs:
            out.append(Violation(f"node {node}", "feeds a channel but is not an inlet"))
        if len(ins) > 1:
            out.append(
                Violation(f"node {node}", "merges flows outside a declared junction")
            )

    # acyclicity and reachability
    try:
        netlist.topological_channels()
    except ValidationError as err:
        out.extend(err.violations)
        return out

    reachable = set()
    frontier = list(inlet_ids)
    down = {}
    for c in netlist.channels:
        down.setdefault(c.from_node, []).append(c)
    while frontier:
        node = frontier.pop()
        for c in down.get(node, ()):
            if c.id not in reachable:
                reachable.add(c.id)
                frontier.append(c.to_node)
    for c in netlist.channels:
        if c.id not in reachable:
            out.append(Violation(f"channel {c.id}", "not reachable from any inlet"))

    return out


class FlowMap:
    """Per-channel volumetric flow (m^3/s) and mean velocity (m/s)."""

    def __init__(self, flow: Dict[str, float], velocity: Dict[str, float]):
        self.flow = dict(flow)
        self.velocity = dict(velocity)

    def __repr__(self) -> str:
        return f"FlowMap({self.flow!r})"


def assign_flows(netlist: Netlist) -> FlowMap:
    """Propagate inlet flows downstream by continuity.

    Every junction's outflow is the sum of its inflows; a channel's mean
    velocity is its flow divided by its cross-section.
    """
    problems = validate(netlist)
    if problems:
        raise ValidationError(problems)
    inlet_by_id = netlist.inlet_map()
    flow: Dict[str, float] = {}
    velocity: Dict[str, float] = {}
    for ch in netlist.topological_channels():
        if ch.from_node in inlet_by_id:
            q = inlet_by_id[ch.from_node].flow
        else:
            ups = netlist.upstream_channels(ch.from_node)
            q = sum(flow[u.id] for u in ups)
        flow[ch.id] = q
        velocity[ch.id] = q / ch.cross_section
    return FlowMap(flow, velocity)


def junction_mix(inflows: Sequence[Tuple[float, Mapping[str, float]]]) -> Dict[str, float]:
    """Flow-weighted average of inflow concentrations (zero junction volume).

    ``inflows`` is a sequence of (volumetric flow, {species: concentration}).
    """
    if not inflows:
        raise ValueError("junction_mix requires at least one inflow")
    total = 0.0
    for q, _ in inflows:
        if not q > 0:
            raise ValueError("all inflow rates must be > 0")
        total += q
    species = sorted({s for _, conc in inflows for s in conc})
    return {
        s: sum(q * conc.get(s, 0.0) for q, conc in inflows) / total for s in species
    }


def _duplicates(items: Iterable[str]) -> List[str]:
    seen, dups = set(), []
    for it in items:
        if it in seen and it not in dups:
            dups.append(it)
        seen.add(it)
    return dups
