"""Overlapping coalition game: resources, structures, values and payoffs."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Iterable, Mapping

import numpy as np

from .network import Network


class StructureError(ValueError):
    """A coalition structure violates one of its invariants.

    ``check`` names the violated invariant (e.g. ``"unit conservation"``).
    """

    def __init__(self, check: str, message: str):
        super().__init__(f"{check}: {message}")
        self.check = check


class SbsUnit(NamedTuple):
    owner: int
    index: int
    subchannel: int


@dataclass(frozen=True)
class PartialCoalition:
    id: int
    units: frozenset[SbsUnit]

    @classmethod
    def of(cls, id: int, units: Iterable[SbsUnit]) -> "PartialCoalition":
        return cls(id, frozenset(SbsUnit(*u) for u in units))

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted({u.owner for u in self.units}))

    def resources(self, sbs: int) -> frozenset[SbsUnit]:
        """R_i: the units SBS ``sbs`` dedicates to this coalition."""
        return frozenset(u for u in self.units if u.owner == sbs)

    @property
    def identity(self) -> frozenset[SbsUnit]:
        return self.units

    def __len__(self):
        return len(self.units)


@dataclass(frozen=True)
class CoalitionStructure:
    coalitions: tuple[PartialCoalition, ...]

    def __post_init__(self):
        object.__setattr__(self, "coalitions", tuple(sorted(self.coalitions, key=lambda c: c.id)))

    def __iter__(self):
        return iter(self.coalitions)

    def __len__(self):
        return len(self.coalitions)

    def coalition(self, cid: int) -> PartialCoalition:
        for c in self.coalitions:
            if c.id == cid:
                return c
        raise KeyError(cid)

    def coalition_of(self, unit: SbsUnit) -> PartialCoalition:
        for c in self.coalitions:
            if unit in c.units:
                return c
        raise KeyError(unit)

    def units(self) -> list[SbsUnit]:
        return sorted(u for c in self.coalitions for u in c.units)

    @classmethod
    def noncooperative(cls, net: Network) -> "CoalitionStructure":
        return cls(tuple(
            PartialCoalition.of(i, (SbsUnit(i, m, k) for m, k in enumerate(ts)))
            for i, ts in enumerate(net.topology.initial_subchannels)
        ))

    @classmethod
    def from_labels(cls, labels: np.ndarray, net: Network) -> "CoalitionStructure":
        groups: dict[int, list[SbsUnit]] = {}
        for i, ts in enumerate(net.topology.initial_subchannels):
            for m, k in enumerate(ts):
                groups.setdefault(int(labels[i, m]), []).append(SbsUnit(i, m, k))
        return cls(tuple(PartialCoalition.of(cid, us) for cid, us in groups.items()))

    def to_labels(self, n_sbs: int, units_per_sbs: int) -> np.ndarray:
        labels = np.full((n_sbs, units_per_sbs), -1, dtype=np.int64)
        for c in self.coalitions:
            for u in c.units:
                labels[u.owner, u.index] = c.id
        return labels

    def validate(self, net: Network) -> None:
        """Raise :class:`StructureError` unless every unit sits in exactly one coalition."""
        validate_units(
            [(c.id, list(c.units)) for c in self.coalitions],
            net.topology.initial_subchannels,
        )


def validate_units(coalitions: list[tuple[int, list]], initial_subchannels) -> None:
    """Check a raw list of (coalition id, unit triples); duplicates are allowed in the input."""
    ids = [cid for cid, _ in coalitions]
    if len(set(ids)) != len(ids):
        raise StructureError("coalition identity", "duplicate coalition id")
    seen: dict[tuple[int, int], int] = {}
    for cid, units in coalitions:
        if not units:
            raise StructureError("empty coalition", f"coalition {cid} has no units")
        for owner, index, sub in units:
            if not (0 <= owner < len(initial_subchannels)) or not (0 <= index < len(initial_subchannels[owner])):
                raise StructureError("unit ownership", f"unknown unit ({owner}, {index})")
            if initial_subchannels[owner][index] != sub:
                raise StructureError(
                    "unit ownership",
                    f"unit ({owner}, {index}) is bound to subchannel "
                    f"{initial_subchannels[owner][index]}, not {sub}",
                )
            if (owner, index) in seen:
                raise StructureError(
                    "unit conservation",
                    f"unit ({owner}, {index}) appears in coalitions {seen[owner, index]} and {cid}",
                )
            seen[owner, index] = cid
    for i, ts in enumerate(initial_subchannels):
        for m in range(len(ts)):
            if (i, m) not in seen:
                raise StructureError("unit conservation", f"unit ({i}, {m}) is not allocated")
    idents = [frozenset(map(tuple, units)) for _, units in coalitions]
    if len(set(idents)) != len(idents):
        raise StructureError("coalition identity", "two coalitions hold identical resources")


def resource_pool(coalition: PartialCoalition) -> frozenset[int]:
    return frozenset(u.subchannel for u in coalition.units)


def coalition_power_cost(coalition: PartialCoalition, net: Network) -> float:
    """Sum over members of the power needed to reach the farthest other member (mW)."""
    supp = coalition.support
    if len(supp) < 2:
        return 0.0
    bc = net.broadcast
    return sum(max(bc[i, j] for j in supp if j != i) for i in supp)


def fairness_shares(coalition: PartialCoalition) -> dict[int, float]:
    counts = {i: len(coalition.resources(i)) for i in coalition.support}
    total = sum(counts.values())
    return {i: c / total for i, c in counts.items()}


def _schedules(structure: CoalitionStructure, net: Network):
    from .scheduler import build_schedule

    return {c.id: build_schedule(c, net) for c in structure}


def coalition_utility(
    coalition: PartialCoalition,
    structure: CoalitionStructure,
    net: Network,
    schedules: Mapping | None = None,
) -> float:
    """Sum-rate of ``coalition`` under the interference of every other coalition in ``structure``."""
    if not coalition.units:
        return 0.0
    if schedules is None:
        schedules = _schedules(structure, net)
    own = schedules[coalition.id]
    if own.coalition_id != coalition.id or own.pool != tuple(sorted(resource_pool(coalition))):
        raise ValueError("schedule does not belong to this coalition")
    # SBSs transmitting on each subchannel in some other coalition
    others: dict[int, set[int]] = {}
    for cid, sched in schedules.items():
        if cid == coalition.id:
            continue
        for k, sbss in sched.active_sbs().items():
            others.setdefault(k, set()).update(sbss)

    g = net.gains
    p = net.sbs_power
    slots = own.slots
    scale = net.config.rate_scale
    total = 0.0
    cells = sorted(own.airtime_cells().items(), key=lambda kv: (kv[0][0], kv[0][2], kv[0][1]))
    for (i, u, k), count in cells:
        gamma = count / slots
        i_mbs = net.mbs_power[k] * g.mbs_sue[i, u]
        i_sbs = 0.0
        for j in sorted(others.get(k, ())):
            i_sbs += p[j] * g.sbs_sue[j, i, u]
        sinr = p[i] * g.sbs_sue[i, i, u] / (net.noise_mw + i_mbs + i_sbs)
        total += gamma * math.log2(1.0 + sinr) * scale
    return total


def coalition_value(
    coalition: PartialCoalition,
    structure: CoalitionStructure,
    net: Network,
    schedules: Mapping | None = None,
    p_lim_mw: float | None = None,
) -> float:
    if not coalition.units:
        return 0.0
    limit = net.config.p_lim_mw if p_lim_mw is None else p_lim_mw
    if coalition_power_cost(coalition, net) > limit:
        return 0.0
    return coalition_utility(coalition, structure, net, schedules)


@dataclass(frozen=True)
class Outcome:
    structure: CoalitionStructure
    imputation: dict[int, dict[int, float]]   # coalition id -> {sbs: x^i}
    coalition_values: dict[int, float]
    sbs_totals: np.ndarray
    system_value: float


def evaluate(structure: CoalitionStructure, net: Network) -> Outcome:
    """Values, imputation and per-SBS totals of a structure (reference Python path)."""
    schedules = _schedules(structure, net)
    values = {c.id: coalition_value(c, structure, net, schedules) for c in structure}
    imputation = {}
    totals = np.zeros(net.n_sbs)
    for c in structure:
        shares = fairness_shares(c)
        imputation[c.id] = {i: f * values[c.id] for i, f in shares.items()}
        for i, x in imputation[c.id].items():
            totals[i] += x
    return Outcome(
        structure=structure,
        imputation=imputation,
        coalition_values=values,
        sbs_totals=totals,
        system_value=sum(values[c.id] for c in structure),
    )


def sbs_payoff(sbs: int, coalition: PartialCoalition, structure: CoalitionStructure, net: Network) -> float:
    if sbs not in coalition.support:
        return 0.0
    return fairness_shares(coalition)[sbs] * coalition_value(coalition, structure, net)


def total_sbs_payoff(sbs: int, structure: CoalitionStructure, net: Network) -> float:
    return float(evaluate(structure, net).sbs_totals[sbs])


def structure_value(structure: CoalitionStructure, net: Network) -> float:
    return evaluate(structure, net).system_value
