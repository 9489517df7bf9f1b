"""Species registry, reaction definitions, and single-step reaction kinetics.

Units are SI throughout: concentrations in mol/m^3, diffusion coefficients
in m^2/s, rate constants in m^3/(mol s), time in seconds.

The two reaction forms are solved in closed form over a time step, which keeps
the reaction substep unconditionally stable no matter how stiff the kinetics
are relative to the transport step.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence, Tuple

__all__ = [
    "WASTE_SPECIES",
    "Species",
    "SpeciesTable",
    "ReactionKind",
    "Reaction",
    "SignalProfile",
    "eval_profile",
    "annihilation_step",
    "catalytic_step",
]

#: Reaction products with this name are treated as untracked waste.
WASTE_SPECIES = "W"


@dataclass(frozen=True)
class Species:
    name: str
    diffusion_coefficient: float  # m^2/s

    def __post_init__(self):
        if not self.name:
            raise ValueError("species name must be nonempty")
        if not self.diffusion_coefficient > 0:
            raise ValueError(
                f"species {self.name!r}: diffusion coefficient must be positive"
            )


class SpeciesTable:
    """Registry of chemical species with their diffusion coefficients."""

    def __init__(self, entries: Iterable[Species | tuple]):
        items = tuple(
            e if isinstance(e, Species) else Species(*e) for e in entries
        )
        index = {}
        for sp in items:
            if sp.name in index:
                raise ValueError(f"duplicate species name {sp.name!r}")
            index[sp.name] = sp
        self.entries: Tuple[Species, ...] = items
        self._index = index

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __getitem__(self, name: str) -> Species:
        return self._index[name]

    def __iter__(self):
        return iter(self.entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __eq__(self, other) -> bool:
        return isinstance(other, SpeciesTable) and self.entries == other.entries

    def __repr__(self) -> str:
        return f"SpeciesTable({list(self.entries)!r})"

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(sp.name for sp in self.entries)


class ReactionKind(Enum):
    ANNIHILATION = "Annihilation"  # A + B -> P, both reactants consumed
    CATALYTIC = "Catalytic"        # A + B -> A + P, A unchanged, B consumed


@dataclass(frozen=True)
class Reaction:
    """A bimolecular conversion rule confined to one reaction channel.

    For ``ANNIHILATION`` one unit of each reactant yields one unit of product.
    For ``CATALYTIC`` ``reactant_a`` is the catalyst and is left unchanged
    while ``reactant_b`` converts to the product.
    """

    kind: ReactionKind
    reactant_a: str
    reactant_b: str
    product: str
    rate_constant: float  # m^3/(mol s)

    def __post_init__(self):
        if not self.rate_constant > 0:
            raise ValueError("rate constant must be positive")
        if self.reactant_a == self.reactant_b:
            raise ValueError("reactants must be distinct species")


class SignalProfile:
    """Piecewise-constant injection profile, a sum of weighted step onsets.

    ``steps`` is an ordered list of ``(onset_time, level_increment)`` pairs;
    the value at time t is the sum of increments whose onset is <= t.
    """

    __slots__ = ("steps", "_times", "_cumulative")

    def __init__(self, steps: Sequence[tuple] = ()):
        steps = tuple((float(t), float(a)) for t, a in steps)
        times = [t for t, _ in steps]
        if any(t < 0 for t in times):
            raise ValueError("onset times must be >= 0")
        if any(b < a for a, b in zip(times, times[1:])):
            raise ValueError("onset times must be non-decreasing")
        running = 0.0
        cumulative = []
        for _, inc in steps:
            running += inc
            if running < 0:
                raise ValueError("profile value must stay >= 0 for all t")
            cumulative.append(running)
        self.steps = steps
        self._times = times
        self._cumulative = cumulative

    def value(self, t: float) -> float:
        if t < 0:
            raise ValueError("time must be >= 0")
        i = bisect_right(self._times, t)
        return self._cumulative[i - 1] if i else 0.0

    def max_level(self) -> float:
        return max(self._cumulative, default=0.0)

    def final_level(self) -> float:
        return self._cumulative[-1] if self._cumulative else 0.0

    @classmethod
    def constant(cls, level: float, onset: float = 0.0) -> "SignalProfile":
        return cls([(onset, level)])

    @classmethod
    def pulse(cls, level: float, start: float, stop: float) -> "SignalProfile":
        return cls([(start, level), (stop, -level)])

    def __eq__(self, other) -> bool:
        return isinstance(other, SignalProfile) and self.steps == other.steps

    def __repr__(self) -> str:
        return f"SignalProfile({list(self.steps)!r})"


def eval_profile(profile: SignalProfile, t: float) -> float:
    """Concentration of an injected profile at time t (mol/m^3)."""
    return profile.value(t)


def converted_amount(a: float, b: float, k: float, dt: float) -> float:
    """Amount x converted by A + B -> P over dt, from the closed-form solution
    of dx/dt = k (a - x)(b - x) with x(0) = 0.

    Written so the exponential argument is always <= 0; the large-exponent
    limit lands on x -> min(a, b) without overflow.
    """
    lo = a if a < b else b
    hi = a if a >= b else b
    kdt = k * dt
    if lo <= 0.0 or kdt <= 0.0:
        return 0.0
    d = hi - lo
    if d > 0.0:
        em = -math.expm1(-kdt * d)  # 1 - exp(-k dt (hi-lo)), no cancellation
        x = hi * lo * em / (d + lo * em)
    else:
        x = lo * lo * kdt / (1.0 + lo * kdt)
    return x if x < lo else lo


def _require_nonnegative(**values):
    for name, v in values.items():
        if v < 0:
            raise ValueError(f"{name} must be >= 0, got {v!r}")


def annihilation_step(a: float, b: float, k: float, dt: float):
    """Advance A + B -> P by dt; returns (a', b', x) with x the converted amount.

    The difference a' - b' equals a - b to machine precision, since the same
    x is subtracted from both sides.
    """
    _require_nonnegative(a=a, b=b, k=k, dt=dt)
    x = converted_amount(a, b, k, dt)
    return a - x, b - x, x


def catalytic_step(cat: float, amp: float, k: float, dt: float):
    """Advance the catalytic conversion Cat + Amp -> Cat + P by dt.

    Returns (amp', o_gain); the catalyst concentration is unchanged.
    """
    _require_nonnegative(cat=cat, amp=amp, k=k, dt=dt)
    amp2 = amp * math.exp(-k * cat * dt)
    return amp2, amp - amp2


def profiles_from_mapping(mapping: Mapping[str, SignalProfile | Sequence]) -> dict:
    """Normalize a {species: profile-or-step-list} mapping to SignalProfiles."""
    out = {}
    for name, prof in mapping.items():
        out[name] = prof if isinstance(prof, SignalProfile) else SignalProfile(prof)
    return out
