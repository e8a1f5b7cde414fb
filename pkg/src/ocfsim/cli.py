"""Command-line front end: ``ocfsim run | sweep | validate | snapshot``.

Exit codes: 0 success, 1 usage, configuration or validation failure, 2 engine error.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import __version__
from . import io as oio
from .engine import EngineError, EngineTrace, FormationEngine, TraceRow, run_noncooperative, stability_violations
from .experiments import SweepError, coalitions_per_sbs, sweep
from .game import StructureError, evaluate
from .network import ConfigError, NetworkConfig, build_network, make_network
from .svg import line_plot, snapshot

OK, FAIL, ENGINE = 0, 1, 2


def _config(args) -> NetworkConfig:
    cfg = oio.load_config(args.config) if args.config else NetworkConfig()
    changes = {}
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "absolute_rate", False):
        changes["absolute_rate"] = True
    if getattr(args, "mbs_all_subchannels", False):
        changes["mbs_all_subchannels"] = True
    return cfg.replace(**changes) if changes else cfg


def _provenance(cfg: NetworkConfig, seeds) -> dict:
    return {"generator": f"ocfsim {__version__}", "config_hash": oio.config_hash(cfg), "seeds": list(seeds)}


def _solve(net, algorithm: str):
    if algorithm == "noncoop":
        outcome = run_noncooperative(net)
        trace = EngineTrace([TraceRow(0, None, outcome.system_value, 0.0)])
        return outcome.structure, outcome, trace, None
    eng = FormationEngine(net, algorithm)
    structure = eng.run()
    return structure, evaluate(structure, net), eng.trace, eng.history


def cmd_run(args) -> int:
    cfg = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    net = make_network(cfg)
    try:
        structure, outcome, trace, history = _solve(net, args.algorithm)
    except EngineError as exc:
        path = out / "trace.csv"
        if exc.trace is not None:
            oio.write_trace(path, exc.trace)
        print(f"error: {exc} (trace written to {path})", file=sys.stderr)
        return ENGINE
    mx, mean = coalitions_per_sbs(structure, net.n_sbs)
    oio.write_json(out / "topology.json", oio.topology_to_dict(net.topology))
    oio.write_json(out / "structure.json", oio.structure_to_dict(structure, history))
    oio.write_json(out / "outcome.json", oio.outcome_to_dict(outcome, cfg, {
        "algorithm": args.algorithm,
        "iterations": trace.iterations,
        "max_coalitions_per_sbs": mx,
        "mean_coalitions_per_sbs": mean,
    }))
    (out / "config.yaml").write_text(oio.dump_config(cfg))
    oio.write_trace(out / "trace.csv", trace)
    oio.write_schedules(out / "schedule.csv", structure, net)
    (out / "snapshot.svg").write_text(snapshot(net, structure, _provenance(cfg, [cfg.seed]),
                                               f"{args.algorithm.upper()} structure, N={net.n_sbs}"))
    print(f"algorithm        {args.algorithm}")
    print(f"system payoff    {outcome.system_value:.6f}")
    print(f"iterations       {trace.iterations}")
    print(f"coalitions       {len(structure)}")
    print(f"coalitions/SBS   max {mx}, mean {mean:.3f}")
    print(f"outputs          {out}")
    return OK


_AXIS = {
    "n_sbs": "Number of SBSs",
    "p_lim_dbm": "P_lim (dBm)",
    "sbs_area_radius_km": "SBS area radius (km)",
    "total_subchannels": "Total subchannels",
    "wall_variant": "SBS-SUE wall loss (dB)",
}


def _plots(result, out: Path) -> list[Path]:
    spec = result.spec
    p = spec.parameter
    prov = _provenance(spec.base, spec.seeds)
    prov["parameter"] = p
    written = []

    def save(name, text):
        path = out / name
        path.write_text(text)
        written.append(path)

    for metric, ylabel in (("system_payoff", "System payoff"), ("max_coalitions", "Max coalitions per SBS")):
        agg = result.aggregate(metric)
        series = {a.upper(): ([float(v) for v in spec.values], [agg[v, a].mean for v in spec.values],
                              [agg[v, a].std for v in spec.values])
                  for a in spec.algorithms}
        stem = "payoff" if metric == "system_payoff" else "coalitions"
        save(f"{stem}_vs_{p}.svg", line_plot(series, f"{ylabel} vs {_AXIS[p].lower()}", _AXIS[p], ylabel,
                                             dict(prov, metric=metric)))
    for v in spec.values:
        series = {}
        for a in spec.algorithms:
            cdf = result.cdf(a, v)
            series[f"{a.upper()} (mean {cdf.mean:.2f})"] = (cdf.x.tolist(), cdf.f.tolist())
        save(f"cdf_{p}_{v}.svg", line_plot(series, f"CDF of SBS payoff, {p}={v}", "Individual payoff", "CDF",
                                           dict(prov, value=v), step=True))
    if spec.traces:
        seed = spec.seeds[0]
        series = {}
        for v in spec.values:
            for a in spec.algorithms:
                for r in result.select(a, v):
                    if r.seed == seed and r.trace:
                        series[f"{a.upper()} {p}={v}"] = (list(range(len(r.trace))), list(r.trace))
        if series:
            save(f"trace_vs_iteration_{p}.svg", line_plot(series, "System payoff vs iterations", "Iteration",
                                                          "System payoff", dict(prov, seeds=[seed])))
    return written


def cmd_sweep(args) -> int:
    spec = oio.load_sweep_spec(args.spec)
    if args.absolute_rate or args.mbs_all_subchannels:
        from dataclasses import replace
        base = spec.base.replace(absolute_rate=spec.base.absolute_rate or args.absolute_rate,
                                 mbs_all_subchannels=spec.base.mbs_all_subchannels or args.mbs_all_subchannels)
        spec = replace(spec, base=base)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        result = sweep(spec, workers=args.workers)
    except SweepError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ENGINE
    paths = oio.write_sweep(out, result)
    paths += _plots(result, out)
    oio.write_json(out / "summary.json", {
        "version": __version__,
        "parameter": spec.parameter,
        "values": list(spec.values),
        "seeds": list(spec.seeds),
        "algorithms": list(spec.algorithms),
        "config": oio.config_to_dict(spec.base),
        "config_hash": oio.config_hash(spec.base),
        "aggregates": [[v, a, g.mean, g.std, g.n] for (v, a), g in result.aggregate().items()],
    })
    for (v, a), g in result.aggregate().items():
        print(f"{spec.parameter}={v} {a:8s} mean {g.mean:.4f}  std {g.std:.4f}  n={g.n}")
    print(f"wrote {len(paths) + 1} files to {out}")
    return OK


def cmd_validate(args) -> int:
    cfg = _config(args)
    topo = oio.topology_from_dict(oio.read_json(args.topology))
    try:
        net = build_network(topo, cfg)
    except ConfigError as exc:
        print(f"invalid: topology/config mismatch: {exc}", file=sys.stderr)
        return FAIL
    try:
        structure, history = oio.structure_from_dict(oio.read_json(args.structure), topo.initial_subchannels)
    except StructureError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return FAIL
    mode = "cf" if args.algorithm == "cf" else "ocf"
    try:
        moves = stability_violations(net, structure, history, mode)
    except ValueError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return FAIL
    if moves:
        m = moves[0].move
        print(f"unstable: stability violated, {len(moves)} admissible move(s); first: {m.kind} of unit "
              f"({m.sbs}, {m.unit}) from coalition {m.source} to {m.target}", file=sys.stderr)
        return FAIL
    print(f"valid and stable: {len(structure)} coalitions, system payoff {evaluate(structure, net).system_value:.6f}")
    return OK


def cmd_snapshot(args) -> int:
    cfg = _config(args)
    if args.structure or args.topology:
        if not (args.structure and args.topology):
            print("error: --structure and --topology must be given together", file=sys.stderr)
            return FAIL
        net = build_network(oio.topology_from_dict(oio.read_json(args.topology)), cfg)
        structure, _ = oio.structure_from_dict(oio.read_json(args.structure), net.topology.initial_subchannels)
        title = f"Coalition structure, N={net.n_sbs}"
    else:
        net = make_network(cfg)
        try:
            structure = _solve(net, args.algorithm)[0]
        except EngineError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return ENGINE
        title = f"{args.algorithm.upper()} structure, N={net.n_sbs}"
    out = Path(args.out)
    if out.parent:
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(snapshot(net, structure, _provenance(cfg, [cfg.seed]), title))
    print(f"wrote {out}")
    return OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ocfsim", description="Overlapping coalition formation for small cells.")
    ap.add_argument("--version", action="version", version=f"ocfsim {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, seed=True, algorithm=True):
        p.add_argument("--config", help="YAML config file (unknown keys are rejected)")
        if seed:
            p.add_argument("--seed", type=int, help="override the config seed")
        if algorithm:
            p.add_argument("--algorithm", choices=("ocf", "cf", "noncoop"), default="ocf")
        p.add_argument("--absolute-rate", action="store_true", help="report rates in bit/s instead of bit/s/Hz")
        p.add_argument("--mbs-all-subchannels", action="store_true", help="MBS interferes on every subchannel")

    p = sub.add_parser("run", help="form coalitions on one topology and write all outputs")
    common(p)
    p.add_argument("--out", default="out", help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a parameter sweep described by a YAML spec")
    p.add_argument("spec", help="sweep spec file")
    p.add_argument("--out", default="sweep-out", help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--absolute-rate", action="store_true")
    p.add_argument("--mbs-all-subchannels", action="store_true")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="check structure invariants and stability")
    p.add_argument("structure", help="structure.json")
    p.add_argument("topology", help="topology.json")
    common(p, seed=False)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("snapshot", help="render a coalition snapshot as SVG")
    common(p)
    p.add_argument("--structure", help="render this structure.json instead of running the engine")
    p.add_argument("--topology", help="topology.json matching --structure")
    p.add_argument("--out", default="snapshot.svg", help="output SVG path")
    p.set_defaults(func=cmd_snapshot)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return OK if exc.code == 0 else FAIL
    try:
        return args.func(args)
    except (ConfigError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return FAIL


if __name__ == "__main__":
    sys.exit(main())
