"""Compare the compiled and pure-Python structure evaluators.

    python benchmarks/bench_kernel.py [--n-sbs 10] [--evals 2000] [--runs 5]
"""
import argparse
import time

import numpy as np

from ocfsim.engine import FormationEngine
from ocfsim.kernel import COMPILED, make_kernel
from ocfsim.network import NetworkConfig, make_network


def bench_eval(net, backend, labels):
    k = make_kernel(net, backend)
    t0 = time.perf_counter()
    total = 0.0
    for lab in labels:
        total += k.evaluate(lab)[2]
    return time.perf_counter() - t0, total


def bench_runs(n_sbs, runs, backend):
    t0 = time.perf_counter()
    moves = 0
    for seed in range(runs):
        eng = FormationEngine(make_network(NetworkConfig(n_sbs=n_sbs, seed=seed)), backend=backend)
        eng.run()
        moves += eng.trace.iterations
    return time.perf_counter() - t0, moves


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n-sbs", type=int, default=10)
    ap.add_argument("--evals", type=int, default=2000)
    ap.add_argument("--runs", type=int, default=5)
    args = ap.parse_args()
    backends = ["python"] + (["compiled"] if COMPILED else [])
    if not COMPILED:
        print("compiled kernel not built; timing the fallback only")

    net = make_network(NetworkConfig(n_sbs=args.n_sbs, seed=0))
    rng = np.random.default_rng(0)
    labels = [rng.integers(0, rng.integers(1, 3 * args.n_sbs), size=(args.n_sbs, 4)) for _ in range(args.evals)]
    times = {}
    sums = {}
    for b in backends:
        times[b], sums[b] = bench_eval(net, b, labels)
        print(f"evaluate  {b:9s} {args.evals} structures  {times[b]:8.3f} s  "
              f"{1e6 * times[b] / args.evals:9.1f} us/structure")
    if COMPILED:
        print(f"evaluate  speedup {times['python'] / times['compiled']:.1f}x, "
              f"max |difference| in summed value {abs(sums['python'] - sums['compiled']):.3g}")
        run_t = {}
        for b in backends:
            run_t[b], moves = bench_runs(args.n_sbs, args.runs, b)
            print(f"run_ocf   {b:9s} {args.runs} seeds  {run_t[b]:8.3f} s  ({moves} moves)")
        print(f"run_ocf   speedup {run_t['python'] / run_t['compiled']:.1f}x")


if __name__ == "__main__":
    main()
