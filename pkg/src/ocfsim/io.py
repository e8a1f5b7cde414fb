"""Configuration loading and result persistence.

Text schemas (all JSON is written with sorted keys, one-space indent and floats
in shortest round-trip form):

topology.json
    {"schema": "ocfsim.topology/1", "mbs": [x, y], "sbs": [[x, y], ...],
     "sues": [[[x, y], ...], ...], "mues": [[x, y], ...],
     "initial_subchannels": [[k, ...], ...], "mue_subchannels": [k, ...],
     "total_subchannels": T}                      positions in metres

structure.json
    {"schema": "ocfsim.structure/1",
     "coalitions": [{"id": c, "units": [[sbs, unit, subchannel], ...]}, ...],
     "history": [{"unit": [sbs, unit], "coalitions": [[[sbs, unit], ...], ...]}, ...]}
    ``history`` is optional.

CSV files use "\\n" line endings and a header row:

trace.csv      iteration,kind,sbs,unit,from,to,system_payoff
schedule.csv   coalition,subchannel,slot,sbs,sue            (idle cells leave sbs/sue empty)
sweep.csv      <parameter>,algorithm,seed,system_payoff,iterations,max_coalitions,mean_coalitions
sbs.csv        <parameter>,algorithm,seed,sbs,payoff
summary.csv    <parameter>,algorithm,metric,mean,std,n
traces.csv     <parameter>,algorithm,seed,iteration,system_payoff
"""
from __future__ import annotations

import csv
import dataclasses
import hashlib
import io
import json
from pathlib import Path

import numpy as np
import yaml

from .game import CoalitionStructure, PartialCoalition, SbsUnit, validate_units
from .network import ConfigError, NetworkConfig, Topology

TOPOLOGY_SCHEMA = "ocfsim.topology/1"
STRUCTURE_SCHEMA = "ocfsim.structure/1"

# ---- config ---------------------------------------------------------------

_FIELDS = {f.name: f for f in dataclasses.fields(NetworkConfig)}


def _coerce(name: str, value):
    default = _FIELDS[name].default
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{name}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{name}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(f"{name}: expected {len(default)} numbers, got {value!r}")
        return tuple(float(v) for v in value)
    return value


def config_from_dict(data: dict | None, base: NetworkConfig | None = None) -> NetworkConfig:
    data = data or {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping of key: value pairs")
    unknown = sorted(set(data) - set(_FIELDS))
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(map(str, unknown))}")
    changes = {k: _coerce(k, v) for k, v in data.items()}
    return (base or NetworkConfig()).replace(**changes)


def config_to_dict(config: NetworkConfig) -> dict:
    out = dataclasses.asdict(config)
    out["mbs_position_km"] = list(config.mbs_position_km)
    return out


def _read_yaml(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc


def load_config(path) -> NetworkConfig:
    return config_from_dict(_read_yaml(path))


def dump_config(config: NetworkConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=True)


def config_hash(config: NetworkConfig) -> str:
    blob = json.dumps(config_to_dict(config), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


_SWEEP_KEYS = {"parameter", "values", "replications", "base_seed", "algorithms", "traces", "config"}


def sweep_spec_from_dict(data):
    from .experiments import SweepSpec

    if not isinstance(data, dict):
        raise ConfigError("sweep spec must be a mapping")
    unknown = sorted(set(data) - _SWEEP_KEYS)
    if unknown:
        raise ConfigError(f"unknown sweep key(s): {', '.join(map(str, unknown))}")
    for key in ("parameter", "values"):
        if key not in data:
            raise ConfigError(f"sweep spec is missing {key!r}")
    values = data["values"]
    if not isinstance(values, list):
        raise ConfigError("values must be a list")
    kwargs = dict(
        parameter=data["parameter"],
        values=tuple(values),
        base=config_from_dict(data.get("config")),
    )
    for key in ("replications", "base_seed", "traces"):
        if key in data:
            kwargs[key] = data[key]
    if "algorithms" in data:
        kwargs["algorithms"] = tuple(data["algorithms"])
    try:
        return SweepSpec(**kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc


def load_sweep_spec(path):
    return sweep_spec_from_dict(_read_yaml(path))


# ---- JSON -------------------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=1) + "\n"


def topology_to_dict(topo: Topology) -> dict:
    return {
        "schema": TOPOLOGY_SCHEMA,
        "mbs": topo.mbs.tolist(),
        "sbs": topo.sbs.tolist(),
        "sues": topo.sues.tolist(),
        "mues": topo.mues.tolist(),
        "initial_subchannels": [list(t) for t in topo.initial_subchannels],
        "mue_subchannels": list(topo.mue_subchannels),
        "total_subchannels": topo.total_subchannels,
    }


def topology_from_dict(d: dict) -> Topology:
    if d.get("schema") != TOPOLOGY_SCHEMA:
        raise ValueError(f"not a topology file (schema {d.get('schema')!r})")
    n = len(d["sbs"])
    sues = np.array(d["sues"], dtype=float)
    return Topology(
        mbs=np.array(d["mbs"], dtype=float),
        sbs=np.array(d["sbs"], dtype=float).reshape(n, 2),
        sues=sues.reshape(n, sues.shape[1] if n else 0, 2),
        mues=np.array(d["mues"], dtype=float).reshape(-1, 2),
        initial_subchannels=tuple(tuple(int(k) for k in t) for t in d["initial_subchannels"]),
        mue_subchannels=tuple(int(k) for k in d["mue_subchannels"]),
        total_subchannels=int(d["total_subchannels"]),
    )


def structure_to_dict(structure: CoalitionStructure, history: dict | None = None) -> dict:
    out = {
        "schema": STRUCTURE_SCHEMA,
        "coalitions": [{"id": c.id, "units": [list(u) for u in sorted(c.units)]} for c in structure],
    }
    if history is not None:
        out["history"] = [
            {"unit": list(k), "coalitions": sorted(sorted(list(x) for x in ident) for ident in v)}
            for k, v in sorted(history.items())
        ]
    return out


def structure_from_dict(d: dict, initial_subchannels=None):
    """Parse a structure file into (structure, history or None).

    With ``initial_subchannels`` the raw unit lists are validated first, so a
    duplicated unit is reported as such rather than silently merged.
    """
    if d.get("schema") != STRUCTURE_SCHEMA:
        raise ValueError(f"not a structure file (schema {d.get('schema')!r})")
    raw = [(int(c["id"]), [tuple(int(x) for x in u) for u in c["units"]]) for c in d["coalitions"]]
    if initial_subchannels is not None:
        validate_units(raw, initial_subchannels)
    structure = CoalitionStructure(tuple(PartialCoalition.of(cid, (SbsUnit(*u) for u in us)) for cid, us in raw))
    history = None
    if "history" in d:
        history = {
            tuple(int(x) for x in h["unit"]): {frozenset(tuple(int(x) for x in m) for m in ident)
                                              for ident in h["coalitions"]}
            for h in d["history"]
        }
    return structure, history


def write_json(path, obj) -> None:
    Path(path).write_text(_dumps(obj))


def read_json(path) -> dict:
    path = Path(path)
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON: {exc}") from exc


def outcome_to_dict(outcome, config: NetworkConfig, extra: dict | None = None) -> dict:
    from . import __version__

    d = {
        "version": __version__,
        "config": config_to_dict(config),
        "config_hash": config_hash(config),
        "system_payoff": outcome.system_value,
        "sbs_payoffs": [float(x) for x in outcome.sbs_totals],
        "coalition_values": [[cid, v] for cid, v in sorted(outcome.coalition_values.items())],
        "imputation": [[cid, [[i, x] for i, x in sorted(row.items())]]
                       for cid, row in sorted(outcome.imputation.items())],
    }
    d.update(extra or {})
    return d


# ---- CSV --------------------------------------------------------------------

def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def write_csv(path, header, rows) -> None:
    Path(path).write_text(csv_text(header, rows))


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


TRACE_HEADER = ["iteration", "kind", "sbs", "unit", "from", "to", "system_payoff"]


def trace_rows(trace):
    for r in trace.rows:
        m = r.move
        if m is None:
            yield [r.iteration, "start", None, None, None, None, r.system_value]
        else:
            yield [r.iteration, m.kind, m.sbs, m.unit, m.source, m.target, r.system_value]


def write_trace(path, trace) -> None:
    write_csv(path, TRACE_HEADER, trace_rows(trace))


SCHEDULE_HEADER = ["coalition", "subchannel", "slot", "sbs", "sue"]


def write_schedules(path, structure, net) -> None:
    from .scheduler import build_schedule

    rows = []
    for c in structure:
        for k, s, i, u in build_schedule(c, net).rows():
            rows.append([c.id, k, s, i, u])
    write_csv(path, SCHEDULE_HEADER, rows)


def write_sweep(out_dir, result) -> list[Path]:
    """Write sweep.csv, sbs.csv, summary.csv and, with traces, traces.csv."""
    out_dir = Path(out_dir)
    p = result.spec.parameter
    paths = []
    path = out_dir / "sweep.csv"
    write_csv(path, [p, "algorithm", "seed", "system_payoff", "iterations", "max_coalitions", "mean_coalitions"],
              ([r.value, r.algorithm, r.seed, r.system_payoff, r.iterations, r.max_coalitions, r.mean_coalitions]
               for r in result.records))
    paths.append(path)
    path = out_dir / "sbs.csv"
    write_csv(path, [p, "algorithm", "seed", "sbs", "payoff"],
              ([r.value, r.algorithm, r.seed, i, x] for r in result.records for i, x in enumerate(r.sbs_payoffs)))
    paths.append(path)
    rows = []
    for metric in ("system_payoff", "iterations", "max_coalitions", "mean_coalitions"):
        for (v, a), agg in result.aggregate(metric).items():
            rows.append([v, a, metric, agg.mean, agg.std, agg.n])
    path = out_dir / "summary.csv"
    write_csv(path, [p, "algorithm", "metric", "mean", "std", "n"], rows)
    paths.append(path)
    if result.spec.traces:
        path = out_dir / "traces.csv"
        write_csv(path, [p, "algorithm", "seed", "iteration", "system_payoff"],
                  ([r.value, r.algorithm, r.seed, t, x] for r in result.records if r.trace
                   for t, x in enumerate(r.trace)))
        paths.append(path)
    return paths
