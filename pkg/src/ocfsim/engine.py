"""Overlapping coalition formation by single-unit reallocation.

Starting from the noncooperative structure, each SBS unit in turn looks for
the first existing coalition it may switch to (switching order) and, failing
that, whether it should become independent (independent order). A move is
blocked when the coalition it would form is already in the unit's history.
The run ends after a full pass over all units applies no move.

The CF baseline runs the same loop but always moves all units of an SBS
together, so coalitions never overlap.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .game import CoalitionStructure, Outcome, SbsUnit, evaluate
from .kernel import make_kernel
from .network import Network

UnitKey = tuple[int, int]
Identity = frozenset[UnitKey]


class EngineError(RuntimeError):
    def __init__(self, message: str, trace: "EngineTrace | None" = None):
        super().__init__(message)
        self.trace = trace


@dataclass(frozen=True)
class Move:
    kind: str          # "switch" or "independent"
    sbs: int
    unit: int          # unit index, or -1 when every unit of the SBS moves (CF)
    source: int
    target: int


@dataclass(frozen=True)
class MoveDecision:
    move: Move
    accepted: bool
    reason: str
    labels: np.ndarray = field(repr=False)
    payoffs: np.ndarray = field(repr=False)
    value: float
    payoff_delta: float
    value_delta: float


@dataclass
class TraceRow:
    iteration: int
    move: Move | None
    system_value: float
    elapsed_s: float


@dataclass
class EngineTrace:
    rows: list[TraceRow] = field(default_factory=list)

    @property
    def values(self) -> list[float]:
        return [r.system_value for r in self.rows]

    @property
    def iterations(self) -> int:
        """Number of applied moves."""
        return len(self.rows) - 1


def _improves(new: float, old: float, tol: float) -> bool:
    return new > old + tol * max(1.0, abs(old))


def _not_worse(new: float, old: float, tol: float) -> bool:
    return new >= old - tol * max(1.0, abs(old))


class FormationEngine:
    """Mutable formation state over a label array ``labels[sbs, unit] -> coalition id``.

    ``tol`` is a relative guard so that floating-point reassociation of an
    unchanged value never counts as a strict improvement.
    """

    def __init__(
        self,
        net: Network,
        mode: str = "ocf",
        structure: CoalitionStructure | None = None,
        history: dict[UnitKey, set[Identity]] | None = None,
        backend: str | None = None,
        tol: float = 1e-12,
        max_moves: int | None = None,
        check_each_move: bool = False,
    ):
        if mode not in ("ocf", "cf"):
            raise ValueError(f"unknown mode {mode!r}")
        self.net = net
        self.mode = mode
        self.tol = tol
        self.check_each_move = check_each_move
        self.n = net.n_sbs
        self.m = net.units_per_sbs
        self.max_moves = max_moves if max_moves is not None else 10 * self.n * self.m * (self.n + 1)
        self.kernel = make_kernel(net, backend)
        if structure is None:
            self.labels = np.repeat(np.arange(self.n, dtype=np.int64)[:, None], self.m, axis=1)
            self.history = {(i, m): {self._members(i)} for i in range(self.n) for m in range(self.m)}
        else:
            structure.validate(net)
            self.labels = structure.to_labels(self.n, self.m)
            self.history = {k: set(v) for k, v in (history or {}).items()}
        if mode == "cf":
            for i in range(self.n):
                if len(set(self.labels[i].tolist())) > 1:
                    raise ValueError(f"SBS {i} is split across coalitions; not a CF structure")
        self.next_label = int(self.labels.max()) + 1 if self.labels.size else 0
        self.payoffs, _, self.value = self.kernel.evaluate(self.labels)
        self.trace = EngineTrace([TraceRow(0, None, self.value, 0.0)])

    # ---- structure helpers -------------------------------------------------

    def _members(self, label: int) -> Identity:
        rows, cols = np.nonzero(self.labels == label)
        return frozenset(zip(rows.tolist(), cols.tolist()))

    def _moved_units(self, sbs: int, unit: int) -> list[UnitKey]:
        if self.mode == "cf":
            return [(sbs, m) for m in range(self.m)]
        return [(sbs, unit)]

    def coalition_ids(self) -> list[int]:
        return sorted(set(self.labels.ravel().tolist()))

    def structure(self) -> CoalitionStructure:
        return CoalitionStructure.from_labels(self.labels, self.net)

    # ---- move tests ----------------------------------------------------------

    def _decide(self, move: Move, new_labels, new_identity: Identity, use_history: bool) -> MoveDecision:
        i = move.sbs
        payoffs, _, value = self.kernel.evaluate(new_labels)
        d_pay = payoffs[i] - self.payoffs[i]
        d_val = value - self.value

        def result(ok, reason):
            return MoveDecision(move, ok, reason, new_labels, payoffs, value, float(d_pay), float(d_val))

        if not _improves(payoffs[i], self.payoffs[i], self.tol):
            return result(False, "individual payoff does not increase")
        if not _improves(value, self.value, self.tol):
            return result(False, "system payoff does not increase")
        if move.kind == "switch":
            supp = sorted({s for s, _ in new_identity})
            if not _not_worse(float(payoffs[supp].sum()), float(self.payoffs[supp].sum()), self.tol):
                return result(False, "members of the joined coalition lose payoff")
        if use_history:
            key = self._moved_units(i, move.unit)[0]
            if new_identity in self.history.get(key, ()):
                return result(False, "coalition already in history")
        return result(True, "accepted")

    def try_switch(self, sbs: int, unit: int, target: int, use_history: bool = True) -> MoveDecision:
        source = int(self.labels[sbs, max(unit, 0)])
        if target == source:
            raise ValueError("target coalition is the current coalition")
        if target not in self.coalition_ids():
            raise KeyError(f"no coalition {target}")
        moved = self._moved_units(sbs, unit)
        new_labels = self.labels.copy()
        for s, m in moved:
            new_labels[s, m] = target
        identity = self._members(target) | frozenset(moved)
        move = Move("switch", sbs, -1 if self.mode == "cf" else unit, source, target)
        return self._decide(move, new_labels, identity, use_history)

    def try_independent(self, sbs: int, unit: int, use_history: bool = True) -> MoveDecision:
        source = int(self.labels[sbs, max(unit, 0)])
        moved = self._moved_units(sbs, unit)
        move = Move("independent", sbs, -1 if self.mode == "cf" else unit, source, self.next_label)
        if self._members(source) == frozenset(moved):
            return MoveDecision(move, False, "no-op: unit is already alone", self.labels,
                                self.payoffs, self.value, 0.0, 0.0)
        new_labels = self.labels.copy()
        for s, m in moved:
            new_labels[s, m] = self.next_label
        return self._decide(move, new_labels, frozenset(moved), use_history)

    def candidates(self, sbs: int, unit: int, use_history: bool = True):
        """All move decisions for one unit in scan order: switches by coalition id, then independent."""
        source = int(self.labels[sbs, max(unit, 0)])
        for target in self.coalition_ids():
            if target != source:
                yield self.try_switch(sbs, unit, target, use_history)
        yield self.try_independent(sbs, unit, use_history)

    def first_admissible(self, sbs: int, unit: int) -> MoveDecision | None:
        for d in self.candidates(sbs, unit):
            if d.accepted:
                return d
        return None

    def scan_units(self):
        for i in range(self.n):
            for m in range(self.m if self.mode == "ocf" else 1):
                yield i, m if self.mode == "ocf" else -1

    def admissible_moves(self, use_history: bool = True) -> list[MoveDecision]:
        """Exhaustive scan: every accepted move from the current structure."""
        return [d for i, m in self.scan_units() for d in self.candidates(i, m, use_history) if d.accepted]

    # ---- mutation ------------------------------------------------------------

    def apply(self, decision: MoveDecision, elapsed: float = 0.0) -> None:
        if not decision.accepted:
            raise ValueError("cannot apply a rejected move")
        move = decision.move
        moved = self._moved_units(move.sbs, move.unit)
        if move.kind == "independent":
            self.next_label += 1
        self.labels = decision.labels
        identity = self._members(move.target)
        for key in moved:
            self.history.setdefault(key, set()).add(identity)
        self.payoffs = decision.payoffs
        self.value = decision.value
        self.trace.rows.append(TraceRow(len(self.trace.rows), move, self.value, elapsed))
        if self.check_each_move:
            self.structure().validate(self.net)

    def run(self) -> CoalitionStructure:
        moves = 0
        while True:
            moved = False
            for i, m in self.scan_units():
                t0 = time.perf_counter()
                d = self.first_admissible(i, m)
                if d is None:
                    continue
                self.apply(d, time.perf_counter() - t0)
                moved = True
                moves += 1
                if moves > self.max_moves:
                    raise EngineError(f"iteration cap {self.max_moves} exceeded", self.trace)
            if not moved:
                break
        leftover = self.admissible_moves()
        if leftover:
            raise EngineError(f"final structure admits {len(leftover)} moves", self.trace)
        return self.structure()

    def history_export(self) -> dict[UnitKey, list[list[UnitKey]]]:
        return {k: sorted(sorted(ident) for ident in v) for k, v in sorted(self.history.items())}


def run_ocf(net: Network, **kwargs) -> tuple[CoalitionStructure, Outcome, EngineTrace]:
    engine = FormationEngine(net, "ocf", **kwargs)
    structure = engine.run()
    return structure, evaluate(structure, net), engine.trace


def run_cf_baseline(net: Network, **kwargs) -> tuple[CoalitionStructure, Outcome, EngineTrace]:
    engine = FormationEngine(net, "cf", **kwargs)
    structure = engine.run()
    return structure, evaluate(structure, net), engine.trace


def run_noncooperative(net: Network) -> Outcome:
    """Every SBS serves one SUE per owned subchannel, full time, with no coordination."""
    topo, cfg = net.topology, net.config
    from .scheduler import unit_sue

    owners: dict[int, list[int]] = {}
    for j, ts in enumerate(topo.initial_subchannels):
        for k in ts:
            owners.setdefault(k, []).append(j)
    g, p = net.gains, net.sbs_power
    rates = np.zeros(net.n_sbs)
    for i, ts in enumerate(topo.initial_subchannels):
        total = 0.0
        for m, k in enumerate(ts):
            u = unit_sue(m, cfg.sues_per_sbs)
            i_mbs = net.mbs_power[k] * g.mbs_sue[i, u]
            i_sbs = 0.0
            for j in owners[k]:
                if j != i:
                    i_sbs += p[j] * g.sbs_sue[j, i, u]
            total += math.log2(1.0 + p[i] * g.sbs_sue[i, i, u] / (net.noise_mw + i_mbs + i_sbs)) * cfg.rate_scale
        rates[i] = total
    structure = CoalitionStructure.noncooperative(net)
    return Outcome(
        structure=structure,
        imputation={i: {i: float(rates[i])} for i in range(net.n_sbs)},
        coalition_values={i: float(rates[i]) for i in range(net.n_sbs)},
        sbs_totals=rates,
        system_value=sum(float(r) for r in rates),
    )


def _engine_for(net, structure, history, mode):
    return FormationEngine(net, mode, structure=structure, history=history)


def _unit_pos(unit: SbsUnit | tuple) -> tuple[int, int]:
    return int(unit[0]), int(unit[1])


def check_switch(net: Network, structure: CoalitionStructure, unit, target: int,
                 history=None, mode: str = "ocf") -> MoveDecision:
    """Switching-order test for moving ``unit`` (an :class:`SbsUnit` or (sbs, index)) into ``target``."""
    i, m = _unit_pos(unit)
    eng = _engine_for(net, structure, history, mode)
    return eng.try_switch(i, m if mode == "ocf" else -1, target)


def check_independent(net: Network, structure: CoalitionStructure, unit,
                      history=None, mode: str = "ocf") -> MoveDecision:
    i, m = _unit_pos(unit)
    eng = _engine_for(net, structure, history, mode)
    return eng.try_independent(i, m if mode == "ocf" else -1)


def stability_violations(net: Network, structure: CoalitionStructure, history=None,
                         mode: str = "ocf") -> list[MoveDecision]:
    """Every admissible single-unit move from ``structure``; empty means stable."""
    return _engine_for(net, structure, history, mode).admissible_moves()
