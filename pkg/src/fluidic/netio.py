"""Netlist serialization: the ``fluidic-netlist/1`` JSON document format.

Top-level keys are ``schema``, ``species``, ``inlets``, ``junctions``,
``channels``, and ``probes``; all quantities are SI. The optional
``annotations`` key carries builder metadata used by the digital harness.
"""

from __future__ import annotations

import json
from typing import Any, Dict

from .errors import ParseError
from .kinetics import Reaction, ReactionKind, SignalProfile, Species, SpeciesTable
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

__all__ = ["SCHEMA", "netlist_to_dict", "netlist_from_dict",
           "dumps_netlist", "loads_netlist", "dump_netlist", "load_netlist"]

SCHEMA = "fluidic-netlist/1"


def netlist_to_dict(netlist: Netlist) -> Dict[str, Any]:
    doc: Dict[str, Any] = {
        "schema": SCHEMA,
        "species": [
            {"name": sp.name, "diffusion_coefficient": sp.diffusion_coefficient}
            for sp in netlist.species
        ],
        "inlets": [
            {
                "id": i.id,
                "profiles": {name: [list(s) for s in prof.steps]
                             for name, prof in i.profiles.items()},
                "width": i.width,
                "depth": i.depth,
                "velocity": i.velocity,
            }
            for i in netlist.inlets
        ],
        "junctions": [
            {
                "id": j.id,
                "kind": j.kind.value,
                "in_ports": list(j.in_ports),
                "out_port": j.out_port,
            }
            for j in netlist.junctions
        ],
        "channels": [
            {
                "id": c.id,
                "from_node": c.from_node,
                "to_node": c.to_node,
                "length": c.length,
                "width": c.width,
                "depth": c.depth,
                "reactions": [
                    {
                        "kind": r.kind.value,
                        "reactant_a": r.reactant_a,
                        "reactant_b": r.reactant_b,
                        "product": r.product,
                        "rate_constant": r.rate_constant,
                    }
                    for r in c.reactions
                ],
            }
            for c in netlist.channels
        ],
        "probes": [
            {
                "id": p.id,
                "channel": p.channel,
                "position": p.position,
                "species": list(p.species),
            }
            for p in netlist.probes
        ],
    }
    if netlist.annotations is not None:
        a = netlist.annotations
        doc["annotations"] = {
            "gate": a.gate,
            "inputs": list(a.inputs),
            "output_probe": a.output_probe,
            "output_species": a.output_species,
            "logic_high": a.logic_high,
            "stages": [
                {
                    "kind": s.kind,
                    "channel": s.channel,
                    "primary": s.primary,
                    "secondary": s.secondary,
                }
                for s in a.stages
            ],
        }
    return doc


def netlist_from_dict(doc: Dict[str, Any]) -> Netlist:
    if not isinstance(doc, dict):
        raise ParseError("netlist document must be a JSON object")
    if doc.get("schema") != SCHEMA:
        raise ParseError(
            f"unsupported or missing schema version, expected {SCHEMA!r}"
        )
    for key in ("species", "inlets", "junctions", "channels", "probes"):
        if key not in doc:
            raise ParseError(f"missing top-level key {key!r}")
    try:
        species = SpeciesTable(
            Species(s["name"], s["diffusion_coefficient"]) for s in doc["species"]
        )
        inlets = tuple(
            Inlet(
                id=i["id"],
                profiles={
                    name: SignalProfile(steps)
                    for name, steps in i["profiles"].items()
                },
                width=i["width"],
                depth=i["depth"],
                velocity=i["velocity"],
            )
            for i in doc["inlets"]
        )
        junctions = tuple(
            Junction(
                id=j["id"],
                kind=JunctionKind(j["kind"]),
                in_ports=tuple(j["in_ports"]),
                out_port=j["out_port"],
            )
            for j in doc["junctions"]
        )
        channels = tuple(
            Channel(
                id=c["id"],
                from_node=c["from_node"],
                to_node=c["to_node"],
                length=c["length"],
                width=c["width"],
                depth=c["depth"],
                reactions=tuple(
                    Reaction(
                        kind=ReactionKind(r["kind"]),
                        reactant_a=r["reactant_a"],
                        reactant_b=r["reactant_b"],
                        product=r["product"],
                        rate_constant=r["rate_constant"],
                    )
                    for r in c.get("reactions", ())
                ),
            )
            for c in doc["channels"]
        )
        probes = tuple(
            Probe(
                id=p["id"],
                channel=p["channel"],
                position=p["position"],
                species=tuple(p["species"]),
            )
            for p in doc["probes"]
        )
        annotations = None
        if "annotations" in doc:
            a = doc["annotations"]
            annotations = Annotations(
                gate=a.get("gate", ""),
                inputs=tuple(a.get("inputs", ())),
                output_probe=a.get("output_probe", ""),
                output_species=a.get("output_species", ""),
                logic_high=a.get("logic_high", 0.0),
                stages=tuple(
                    StageInfo(s["kind"], s["channel"], s["primary"], s["secondary"])
                    for s in a.get("stages", ())
                ),
            )
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError) as err:
        raise ParseError(f"malformed netlist document: {err}") from err
    return Netlist(species, inlets, junctions, channels, probes, annotations)


def dumps_netlist(netlist: Netlist) -> str:
    return json.dumps(netlist_to_dict(netlist), indent=2)


def loads_netlist(text: str) -> Netlist:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ParseError(f"invalid JSON: {err}") from err
    return netlist_from_dict(doc)


def dump_netlist(netlist: Netlist, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_netlist(netlist))
        fh.write("\n")


def load_netlist(path) -> Netlist:
    with open(path, "r", encoding="utf-8") as fh:
        return loads_netlist(fh.read())
