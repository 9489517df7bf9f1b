"""Truth-table minimization and mapping onto the gate library.

``minimize`` runs Quine-McCluskey prime-implicant generation with a greedy
cover and returns a canonical sum-of-products expression. ``map_to_netlist``
compiles an expression to a single netlist: recognizable two-input tables map
straight onto the library gates, and anything else becomes a cascade of
two-input stages whose auxiliary concentrations are rescaled so every
inter-stage signal swings to the same HIGH level as the primary inputs.
Gate outputs feed exactly one downstream stage; a literal used by several
product terms is simply injected through several inlets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import SynthesisError
from .gates import (
    THL_DEFAULTS,
    GateKind,
    GateParams,
    NetlistBuilder,
    Stream,
    build_gate,
)
from .kinetics import SignalProfile
from .network import Annotations, Netlist, assign_flows

__all__ = [
    "TruthTable",
    "Expr", "Const", "Var", "Not", "And", "Or",
    "minimize", "table_of", "map_to_netlist",
    "CircuitMetrics", "metrics",
    "INPUT_SPECIES", "VAR_NAMES",
]

VAR_NAMES = ("x", "y", "z", "w")
INPUT_SPECIES = ("I1", "I2", "I3", "I4")


@dataclass(frozen=True)
class TruthTable:
    """Output column of an n-input boolean function, input-lexicographic:
    bit i is the output for the input tuple spelled by i's binary digits,
    first input most significant."""

    n: int
    bits: Tuple[int, ...]

    def __post_init__(self):
        if not 2 <= self.n <= 4:
            raise SynthesisError(f"arity must be between 2 and 4, got {self.n}")
        if len(self.bits) != 2 ** self.n:
            raise SynthesisError(
                f"a {self.n}-input table needs {2 ** self.n} bits, "
                f"got {len(self.bits)}"
            )
        if any(b not in (0, 1) for b in self.bits):
            raise SynthesisError("table bits must be 0 or 1")

    @classmethod
    def from_string(cls, text: str) -> "TruthTable":
        text = text.strip()
        if not text or any(c not in "01" for c in text):
            raise SynthesisError(f"truth table must be a bit string, got {text!r}")
        size = len(text)
        n = size.bit_length() - 1
        if 2 ** n != size:
            raise SynthesisError(
                f"table length {size} is not a power of two"
            )
        return cls(n, tuple(int(c) for c in text))

    def value(self, bits: Sequence[int]) -> int:
        idx = 0
        for b in bits:
            idx = (idx << 1) | b
        return self.bits[idx]

    def __str__(self) -> str:
        return "".join(str(b) for b in self.bits)


# --------------------------------------------------------------------------
# expressions
# --------------------------------------------------------------------------


class Expr:
    def to_string(self, names: Sequence[str] = VAR_NAMES) -> str:
        raise NotImplementedError

    def __str__(self) -> str:
        return self.to_string()


@dataclass(frozen=True)
class Const(Expr):
    value: int

    def to_string(self, names=VAR_NAMES) -> str:
        return str(self.value)


@dataclass(frozen=True)
class Var(Expr):
    index: int

    def to_string(self, names=VAR_NAMES) -> str:
        return names[self.index]


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr

    def to_string(self, names=VAR_NAMES) -> str:
        inner = self.arg.to_string(names)
        if isinstance(self.arg, Var):
            return f"!{inner}"
        return f"!({inner})"


@dataclass(frozen=True)
class And(Expr):
    args: Tuple[Expr, ...]

    def to_string(self, names=VAR_NAMES) -> str:
        return " & ".join(a.to_string(names) for a in self.args)


@dataclass(frozen=True)
class Or(Expr):
    args: Tuple[Expr, ...]

    def to_string(self, names=VAR_NAMES) -> str:
        parts = []
        for a in self.args:
            s = a.to_string(names)
            parts.append(f"({s})" if isinstance(a, And) and len(a.args) > 1 else s)
        return " | ".join(parts)


def _eval(expr: Expr, bits: Sequence[int]) -> int:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, Var):
        return bits[expr.index]
    if isinstance(expr, Not):
        return 1 - _eval(expr.arg, bits)
    if isinstance(expr, And):
        return int(all(_eval(a, bits) for a in expr.args))
    if isinstance(expr, Or):
        return int(any(_eval(a, bits) for a in expr.args))
    raise TypeError(f"unknown expression node {expr!r}")


def table_of(expr: Expr, n: int) -> TruthTable:
    bits = tuple(
        _eval(expr, combo) for combo in itertools.product((0, 1), repeat=n)
    )
    return TruthTable(n, bits)


def literal_count(expr: Expr) -> int:
    if isinstance(expr, Const):
        return 0
    if isinstance(expr, Var):
        return 1
    if isinstance(expr, Not):
        return literal_count(expr.arg)
    if isinstance(expr, (And, Or)):
        return sum(literal_count(a) for a in expr.args)
    raise TypeError(f"unknown expression node {expr!r}")


# --------------------------------------------------------------------------
# Quine-McCluskey minimization
# --------------------------------------------------------------------------

# implicants are tuples over {0, 1, None}; None marks an eliminated variable


def _covers(cube: Tuple, minterm: int, n: int) -> bool:
    for pos in range(n):
        want = cube[pos]
        if want is None:
            continue
        bit = (minterm >> (n - 1 - pos)) & 1
        if bit != want:
            return False
    return True


def _prime_implicants(n: int, minterms: List[int]) -> List[Tuple]:
    def to_cube(m: int) -> Tuple:
        return tuple((m >> (n - 1 - pos)) & 1 for pos in range(n))

    level = {to_cube(m) for m in minterms}
    primes = set()
    while level:
        merged = set()
        next_level = set()
        items = sorted(level, key=lambda c: (sum(1 for v in c if v == 1),
                                             str(c)))
        for a, b in itertools.combinations(items, 2):
            diff = [
                pos for pos in range(n)
                if a[pos] != b[pos] and not (a[pos] is None or b[pos] is None)
            ]
            compatible = all(
                (a[pos] is None) == (b[pos] is None) for pos in range(n)
            )
            if compatible and len(diff) == 1:
                cube = tuple(
                    None if pos == diff[0] else a[pos] for pos in range(n)
                )
                next_level.add(cube)
                merged.add(a)
                merged.add(b)
        primes |= level - merged
        level = next_level
    return sorted(primes, key=str)


def _greedy_cover(n: int, primes: List[Tuple], minterms: List[int]) -> List[Tuple]:
    uncovered = set(minterms)
    cover: List[Tuple] = []
    # essential primes first
    for m in sorted(minterms):
        hits = [p for p in primes if _covers(p, m, n)]
        if len(hits) == 1 and hits[0] not in cover:
            cover.append(hits[0])
    for p in cover:
        uncovered -= {m for m in uncovered if _covers(p, m, n)}
    while uncovered:
        best = max(
            primes,
            key=lambda p: (
                len({m for m in uncovered if _covers(p, m, n)}),
                -sum(1 for v in p if v is not None),
                str(p),
            ),
        )
        gained = {m for m in uncovered if _covers(best, m, n)}
        if not gained:
            raise SynthesisError("prime implicants fail to cover the table")
        cover.append(best)
        uncovered -= gained
    return cover


def minimize(table: TruthTable) -> Expr:
    """Minimal-literal sum of products via prime implicants + greedy cover."""
    n = table.n
    minterms = [i for i, b in enumerate(table.bits) if b]
    if not minterms:
        return Const(0)
    if len(minterms) == 2 ** n:
        return Const(1)
    primes = _prime_implicants(n, minterms)
    cover = _greedy_cover(n, primes, minterms)

    def cube_expr(cube: Tuple) -> Expr:
        lits: List[Expr] = []
        for pos, v in enumerate(cube):
            if v is None:
                continue
            lits.append(Var(pos) if v == 1 else Not(Var(pos)))
        if not lits:
            return Const(1)
        if len(lits) == 1:
            return lits[0]
        return And(tuple(lits))

    def cube_key(cube: Tuple):
        return (sum(1 for v in cube if v is not None),
                tuple((pos, v) for pos, v in enumerate(cube) if v is not None))

    terms = [cube_expr(c) for c in sorted(cover, key=cube_key)]
    if len(terms) == 1:
        return terms[0]
    return Or(tuple(terms))


# --------------------------------------------------------------------------
# mapping onto the gate library
# --------------------------------------------------------------------------

_PATTERNS_2IN = {
    (0, 0, 0, 1): GateKind.AND,
    (0, 1, 1, 1): GateKind.OR,
    (0, 1, 1, 0): GateKind.XOR,
    (1, 1, 1, 0): GateKind.NAND,
    (1, 0, 0, 0): GateKind.NOR,
}
_XNOR_BITS = (1, 0, 0, 1)


def _support(expr: Expr) -> Tuple[int, ...]:
    if isinstance(expr, Const):
        return ()
    if isinstance(expr, Var):
        return (expr.index,)
    if isinstance(expr, Not):
        return _support(expr.arg)
    if isinstance(expr, (And, Or)):
        out: set = set()
        for a in expr.args:
            out.update(_support(a))
        return tuple(sorted(out))
    raise SynthesisError(f"unsupported connective {type(expr).__name__!r}")


class _CascadeMapper:
    """Emits a constant-velocity cascade of two-input stages.

    Every stage's auxiliaries are scaled so its output HIGH level equals the
    primary-input level, which keeps each downstream stage inside the same
    operating window as a first-stage gate.
    """

    def __init__(self, params: GateParams, arity: int):
        self.params = params
        self.arity = arity
        self.builder = NetlistBuilder(params, normalized=True)
        self.high = params.input_high
        self.stage_no = 0
        self.profiles = _input_profiles(params, arity)

    def _tag(self) -> str:
        self.stage_no += 1
        return f"s{self.stage_no}_"

    def input_stream(self, index: int) -> Stream:
        species = INPUT_SPECIES[index]
        return self.builder.input_arm(
            species, self.profiles[index], label=f"{species}_{self._tag()}"
        )

    def emit(self, expr: Expr) -> Stream:
        b = self.builder
        if isinstance(expr, Var):
            return self.input_stream(expr.index)
        if isinstance(expr, Not):
            inner = self.emit(expr.arg)
            tag = self._tag()
            inverted = b.not_stage(inner, ref=f"{tag}R", label=tag)
            # restore the logic level so the next stage sees a full swing
            return b.amplification_stage(
                inverted, amp=f"{tag}Amp", out_species=f"{tag}Q",
                amp_level=4.0 * self.high, label=tag,
            )
        if isinstance(expr, (And, Or)):
            family = GateKind.AND if isinstance(expr, And) else GateKind.OR
            streams = [self.emit(a) for a in expr.args]
            left = streams[0]
            for right in streams[1:]:
                tag = self._tag()
                left = b.and_or_core(
                    family, left, right, m=f"{tag}M", n=f"{tag}N",
                    thl=f"{tag}T", amp=f"{tag}Amp", out_species=f"{tag}Q",
                    amp_level=4.0 * self.high, label=tag,
                )
            return left
        raise SynthesisError(f"unsupported connective in {expr!r}")


def _input_profiles(params: GateParams, arity: int) -> List[SignalProfile]:
    """Pulse schedules for up to four inputs; the first two follow the
    standard gate schedule."""
    base = list(params.default_input_profiles())
    high = params.input_high
    starts = [(1.0, 3.0), (2.0, 4.0), (1.5, 3.5), (2.5, 4.5)]
    while len(base) < arity:
        t0, t1 = starts[len(base)]
        base.append(SignalProfile.pulse(high, t0, t1))
    return base[:arity]


def _wire_netlist(params: GateParams, arity: int, index: Optional[int],
                  constant: Optional[int], gate_label: str) -> Netlist:
    """A buffer channel carrying one input species (or a constant level)."""
    b = NetlistBuilder(params, normalized=True)
    profiles = _input_profiles(params, arity)
    if index is not None:
        species = INPUT_SPECIES[index]
        stream = b.input_arm(species, profiles[index])
        inputs = (species,)
        out_species = species
    else:
        out_species = "OUT"
        prof = (SignalProfile.constant(params.input_high) if constant
                else SignalProfile())
        stream = b.inlet_stream(
            "const", {out_species: prof}, width=params.arm_width,
            high=params.input_high * (constant or 0), species=out_species,
        )
        inputs = ()
    out = b.extend(stream, params.convection_length)
    b.probe("out", out, (out_species,))
    # constant circuits still need the input inlets so the harness can walk
    # every combination of the declared arity
    if index is None:
        ins = []
        for i in range(arity):
            sp = INPUT_SPECIES[i]
            arm = b.input_arm(sp, profiles[i])
            b.extend(arm, params.convection_length)
            ins.append(sp)
        inputs = tuple(ins)
    ann = Annotations(
        gate=gate_label, inputs=inputs, output_probe="out",
        output_species=out_species, logic_high=params.input_high,
        stages=tuple(b.stages),
    )
    return b.finalize(ann)


def map_to_netlist(expr: Expr, arity: Optional[int] = None,
                   params: Optional[GateParams] = None) -> Netlist:
    """Compile a boolean expression onto the gate library.

    Two-input tables that match a library gate become that gate (the
    dedicated XOR is preferred over its sum-of-products expansion); other
    expressions become a normalized cascade with fresh intermediate species.
    """
    p = params or GateParams()
    support = _support(expr)
    if arity is None:
        arity = (max(support) + 1) if support else 2
    if arity > len(INPUT_SPECIES):
        raise SynthesisError(f"arity {arity} exceeds {len(INPUT_SPECIES)} inputs")

    if isinstance(expr, Const):
        return _wire_netlist(p, arity, None, expr.value, f"const{expr.value}")
    if isinstance(expr, Var):
        return _wire_netlist(p, arity, expr.index, None, "wire")

    if len(support) == 2:
        sub_bits = tuple(
            _eval(expr, _scatter(combo, support, arity))
            for combo in itertools.product((0, 1), repeat=2)
        )
        kind = _PATTERNS_2IN.get(sub_bits)
        if kind is not None or sub_bits == _XNOR_BITS:
            gate_params = p
            if support != (0, 1):
                profs = _input_profiles(p, arity)
                gate_params = replace(
                    p, input_profiles=(profs[support[0]], profs[support[1]])
                )
            if kind is not None:
                net = build_gate(kind, gate_params)
            else:
                net = _xnor_netlist(gate_params)
            if support != (0, 1):
                net = _rebind_inputs(net, support)
            return net

    mapper = _CascadeMapper(p, arity)
    out = mapper.emit(expr)
    b = mapper.builder
    b.probe("out", out, (out.species,))
    inputs = tuple(INPUT_SPECIES[i] for i in sorted(set(support)))
    ann = Annotations(
        gate="composite", inputs=inputs, output_probe="out",
        output_species=out.species, logic_high=out.high,
        stages=tuple(b.stages),
    )
    return b.finalize(ann)


def _scatter(combo: Tuple[int, ...], support: Tuple[int, ...],
             arity: int) -> Tuple[int, ...]:
    bits = [0] * arity
    for value, pos in zip(combo, support):
        bits[pos] = value
    return tuple(bits)


def _xnor_netlist(params: GateParams) -> Netlist:
    """The dedicated XOR gate followed by an inverter stage."""
    b = NetlistBuilder(params)
    prof1, prof2 = params.default_input_profiles()
    a1 = b.input_arm("I1", prof1, label="a_I1")
    a2 = b.input_arm("I2", prof2, label="a_I2")
    b1 = b.input_arm("I1", prof1, label="b_I1")
    b2 = b.input_arm("I2", prof2, label="b_I2")
    and_out = b.and_or_core(GateKind.AND, a1, a2, m="M", n="N", thl="ThL1",
                            amp="Amp1", out_species="O1",
                            thl_level=THL_DEFAULTS[GateKind.AND],
                            amp_level=params.amp_level, label="a_")
    or_out = b.and_or_core(GateKind.OR, b1, b2, m="M", n="N", thl="ThL2",
                           amp="Amp2", out_species="O2",
                           thl_level=THL_DEFAULTS[GateKind.OR],
                           amp_level=params.amp_level, label="b_")
    xor_out = b.cancel_stage(and_out, or_out)
    out = b.not_stage(xor_out, ref="Ref")
    b.probe("out", out, ("Ref",))
    ann = Annotations(
        gate="XNOR", inputs=("I1", "I2"), output_probe="out",
        output_species="Ref", logic_high=out.high, stages=tuple(b.stages),
    )
    return b.finalize(ann)


def _rebind_inputs(net: Netlist, support: Tuple[int, ...]) -> Netlist:
    """Rename the gate's I1/I2 input species to the supported variables."""
    mapping = {"I1": INPUT_SPECIES[support[0]], "I2": INPUT_SPECIES[support[1]]}
    from .netio import netlist_from_dict, netlist_to_dict

    doc = netlist_to_dict(net)
    for sp in doc["species"]:
        sp["name"] = mapping.get(sp["name"], sp["name"])
    for inlet in doc["inlets"]:
        inlet["profiles"] = {
            mapping.get(name, name): steps
            for name, steps in inlet["profiles"].items()
        }
    for ch in doc["channels"]:
        for r in ch["reactions"]:
            r["reactant_a"] = mapping.get(r["reactant_a"], r["reactant_a"])
            r["reactant_b"] = mapping.get(r["reactant_b"], r["reactant_b"])
            r["product"] = mapping.get(r["product"], r["product"])
    for probe in doc["probes"]:
        probe["species"] = [mapping.get(s, s) for s in probe["species"]]
    ann = doc.get("annotations")
    if ann:
        ann["inputs"] = [mapping.get(s, s) for s in ann["inputs"]]
        ann["output_species"] = mapping.get(ann["output_species"],
                                            ann["output_species"])
        for st in ann["stages"]:
            st["primary"] = mapping.get(st["primary"], st["primary"])
            st["secondary"] = mapping.get(st["secondary"], st["secondary"])
    return netlist_from_dict(doc)


# --------------------------------------------------------------------------
# circuit metrics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class CircuitMetrics:
    channel_count: int
    total_length: float
    species_count: int
    reaction_count: int
    worst_latency: float


def metrics(netlist: Netlist) -> CircuitMetrics:
    """Structural complexity counts plus the worst inlet-to-outlet delay."""
    if not netlist.channels:
        return CircuitMetrics(0, 0.0, len(netlist.species), 0, 0.0)
    flows = assign_flows(netlist)
    arrival: Dict[str, float] = {i.id: 0.0 for i in netlist.inlets}
    worst = 0.0
    for ch in netlist.topological_channels():
        t = arrival.get(ch.from_node, 0.0) + ch.length / flows.velocity[ch.id]
        arrival[ch.to_node] = max(arrival.get(ch.to_node, 0.0), t)
        worst = max(worst, t)
    return CircuitMetrics(
        channel_count=len(netlist.channels),
        total_length=sum(c.length for c in netlist.channels),
        species_count=len(netlist.species),
        reaction_count=sum(len(c.reactions) for c in netlist.channels),
        worst_latency=worst,
    )
