"""Seeded parameter sweeps comparing OCF, CF and the noncooperative baseline.

Every (value, seed) pair gets one topology, and all requested algorithms run on
that same topology so comparisons are paired.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .engine import EngineError, run_cf_baseline, run_noncooperative, run_ocf
from .game import CoalitionStructure
from .network import NetworkConfig, make_network

ALGORITHMS = ("ocf", "cf", "noncoop")

# swept name -> NetworkConfig field
PARAMETERS = {
    "n_sbs": "n_sbs",
    "p_lim_dbm": "p_lim_dbm",
    "sbs_area_radius_km": "sbs_area_radius_km",
    "total_subchannels": "total_subchannels",
    "wall_variant": "wall_loss_sbs_sue_db",
}


class SweepError(RuntimeError):
    def __init__(self, value, seed: int, cause: Exception):
        super().__init__(f"sweep point {value!r}, seed {seed}: {cause}")
        self.value = value
        self.seed = seed
        self.cause = cause


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple
    replications: int = 20
    base_seed: int = 0
    algorithms: tuple[str, ...] = ALGORITHMS
    base: NetworkConfig = field(default_factory=NetworkConfig)
    traces: bool = False

    def __post_init__(self):
        if self.parameter not in PARAMETERS:
            raise ValueError(f"unknown sweep parameter {self.parameter!r}; choose from {sorted(PARAMETERS)}")
        object.__setattr__(self, "values", tuple(self.values))
        object.__setattr__(self, "algorithms", tuple(self.algorithms))
        if not self.values:
            raise ValueError("sweep value list is empty")
        if self.replications < 1:
            raise ValueError("replications must be at least 1")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ValueError(f"unknown algorithms {bad}; choose from {list(ALGORITHMS)}")
        for v in self.values:
            self.config_for(v, self.base_seed)   # fail early on invalid points

    @property
    def seeds(self) -> tuple[int, ...]:
        return tuple(self.base_seed + r for r in range(self.replications))

    def config_for(self, value, seed: int) -> NetworkConfig:
        return self.base.replace(**{PARAMETERS[self.parameter]: value, "seed": seed})


@dataclass(frozen=True)
class RunRecord:
    value: object
    algorithm: str
    seed: int
    system_payoff: float
    iterations: int
    sbs_payoffs: tuple[float, ...]
    max_coalitions: int
    mean_coalitions: float
    trace: tuple[float, ...] = ()


@dataclass(frozen=True)
class Aggregate:
    mean: float
    std: float
    n: int


@dataclass
class SweepResult:
    spec: SweepSpec
    records: list[RunRecord]

    def select(self, algorithm: str | None = None, value=None) -> list[RunRecord]:
        return [r for r in self.records
                if (algorithm is None or r.algorithm == algorithm) and (value is None or r.value == value)]

    def aggregate(self, metric: str = "system_payoff") -> dict[tuple, Aggregate]:
        """Mean and population standard deviation of ``metric`` per (value, algorithm)."""
        out = {}
        for v in self.spec.values:
            for a in self.spec.algorithms:
                xs = np.array([getattr(r, metric) for r in self.select(a, v)], dtype=float)
                out[v, a] = Aggregate(float(xs.mean()), float(xs.std()), len(xs))
        return out

    def cdf(self, algorithm: str, value=None) -> "CdfTable":
        return payoff_cdf(self.select(algorithm, value), algorithm)


@dataclass(frozen=True)
class CdfTable:
    algorithm: str
    x: np.ndarray      # sorted payoffs
    f: np.ndarray      # F(x) at each step
    mean: float

    def __call__(self, t: float) -> float:
        return float(np.searchsorted(self.x, t, side="right")) / len(self.x)


def payoff_cdf(results, algorithm: str) -> CdfTable:
    """Empirical CDF of per-SBS payoffs pooled over seeds.

    ``results`` is a :class:`SweepResult` or an iterable of :class:`RunRecord`.
    """
    records = results.select(algorithm) if isinstance(results, SweepResult) else list(results)
    xs = [p for r in records if r.algorithm == algorithm for p in r.sbs_payoffs]
    if not xs:
        raise ValueError(f"no per-SBS payoffs for algorithm {algorithm!r}")
    x = np.sort(np.array(xs, dtype=float))
    f = np.arange(1, len(x) + 1) / len(x)
    return CdfTable(algorithm, x, f, float(np.mean(x)))


def coalitions_per_sbs(structure: CoalitionStructure, n_sbs: int | None = None) -> tuple[int, float]:
    counts: dict[int, int] = {}
    for c in structure:
        for i in c.support:
            counts[i] = counts.get(i, 0) + 1
    if n_sbs is None:
        n_sbs = len(counts)
    if n_sbs == 0:
        return 0, 0.0
    per = [counts.get(i, 0) for i in range(n_sbs)]
    return max(per), sum(per) / n_sbs


def run_point(spec: SweepSpec, value, seed: int) -> list[RunRecord]:
    net = make_network(spec.config_for(value, seed))
    out = []
    for alg in spec.algorithms:
        try:
            if alg == "noncoop":
                outcome, iterations, trace = run_noncooperative(net), 0, ()
            else:
                runner = run_ocf if alg == "ocf" else run_cf_baseline
                _, outcome, tr = runner(net)
                iterations = tr.iterations
                trace = tuple(tr.values) if spec.traces else ()
        except EngineError as exc:
            raise SweepError(value, seed, exc) from exc
        mx, mean = coalitions_per_sbs(outcome.structure, net.n_sbs)
        out.append(RunRecord(
            value=value,
            algorithm=alg,
            seed=seed,
            system_payoff=float(outcome.system_value),
            iterations=iterations,
            sbs_payoffs=tuple(float(p) for p in outcome.sbs_totals),
            max_coalitions=mx,
            mean_coalitions=mean,
            trace=trace,
        ))
    return out


def _run_task(args):
    return run_point(*args)


def sweep(spec: SweepSpec, workers: int = 1) -> SweepResult:
    """Run every (value, seed) point; output order is independent of ``workers``."""
    tasks = [(spec, v, s) for v in spec.values for s in spec.seeds]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        chunks = [_run_task(t) for t in tasks]
    # tasks are built in (value, seed) order and map preserves it
    rank = {a: n for n, a in enumerate(spec.algorithms)}
    records = sorted((r for c in chunks for r in c),
                     key=lambda r: (spec.values.index(r.value), r.seed, rank[r.algorithm]))
    return SweepResult(spec, records)


def relative_gain(result: SweepResult, value, better: str, worse: str) -> float:
    agg = result.aggregate()
    b, w = agg[value, better].mean, agg[value, worse].mean
    return b / w - 1.0 if w else math.inf
