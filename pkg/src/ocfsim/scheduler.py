"""TDMA schedule inside one coalition.

Cells of the coalition's pool (subchannel x slot) are dealt out in canonical
order: subchannels ascending, slots ascending. Members are served in order of
descending unit count, then ascending id, each taking a contiguous run of cells
sized by largest-remainder rounding of its fairness share.

Inside its run, an SBS serves the SUEs carried by the units it contributed,
switching SUE every ``tdma_slots`` cells and cycling. Airtime therefore follows
the units and cannot be steered towards a favourite SUE by moving units around.
"""
from __future__ import annotations

from dataclasses import dataclass

from .game import PartialCoalition, resource_pool
from .network import Network


def unit_sue(unit_index: int, sues_per_sbs: int) -> int:
    """SUE carried by unit m of an SBS; alone on T_i the SBS serves SUE m on its m-th subchannel."""
    return unit_index % sues_per_sbs


def largest_remainder(weights: list[int], total: int) -> list[int]:
    """Integer apportionment of ``total`` proportional to ``weights``.

    Ties in the remainder go to the earlier position.
    """
    wsum = sum(weights)
    base = [w * total // wsum for w in weights]
    rems = [w * total % wsum for w in weights]
    left = total - sum(base)
    for pos in sorted(range(len(weights)), key=lambda p: (-rems[p], p))[:left]:
        base[pos] += 1
    return base


@dataclass(frozen=True)
class CoalitionSchedule:
    coalition_id: int
    pool: tuple[int, ...]
    slots: int
    assignment: dict[tuple[int, int], tuple[int, int]]   # (subchannel, slot) -> (sbs, sue)

    def gamma(self) -> dict[tuple[int, int, int], float]:
        """Airtime fraction per (sbs, sue, subchannel)."""
        return {key: n / self.slots for key, n in self.airtime_cells().items()}

    def airtime_cells(self) -> dict[tuple[int, int, int], int]:
        out: dict[tuple[int, int, int], int] = {}
        for (k, _), (i, u) in self.assignment.items():
            out[i, u, k] = out.get((i, u, k), 0) + 1
        return out

    def cells_of(self, sbs: int) -> int:
        return sum(1 for i, _ in self.assignment.values() if i == sbs)

    def active_sbs(self) -> dict[int, frozenset[int]]:
        act: dict[int, set[int]] = {}
        for (k, _), (i, _) in self.assignment.items():
            act.setdefault(k, set()).add(i)
        return {k: frozenset(v) for k, v in act.items()}

    def rows(self):
        """Per-cell table in canonical order: (subchannel, slot, sbs, sue), idle cells as None."""
        for k in self.pool:
            for s in range(self.slots):
                i, u = self.assignment.get((k, s), (None, None))
                yield k, s, i, u


def build_schedule(coalition: PartialCoalition, net: Network) -> CoalitionSchedule:
    pool = tuple(sorted(resource_pool(coalition)))
    slots = net.config.tdma_slots
    cells = [(k, s) for k in pool for s in range(slots)]
    order = sorted(coalition.support, key=lambda i: (-len(coalition.resources(i)), i))
    quotas = largest_remainder([len(coalition.resources(i)) for i in order], len(cells))
    L = net.config.sues_per_sbs
    assignment = {}
    pos = 0
    for i, q in zip(order, quotas):
        sues = [unit_sue(u.index, L) for u in sorted(coalition.resources(i))]
        for t, (k, s) in enumerate(cells[pos:pos + q]):
            assignment[k, s] = (i, sues[(t // slots) % len(sues)])
        pos += q
    return CoalitionSchedule(coalition.id, pool, slots, assignment)
