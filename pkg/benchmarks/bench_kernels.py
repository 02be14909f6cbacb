#!/usr/bin/env python3
"""Compare the numpy and compiled kernel backends on the hot paths.

Each scenario runs the same synthetic workload under both backends: one
full detection per model plus one training epoch over a small batch of
graphs. Run from the repository root after an editable install:

    python3 benchmarks/bench_kernels.py --nodes 84 --repeats 3
"""

import argparse
import time

import numpy as np

from xaidroid.apigraph.merge import ApiCallGraph
from xaidroid.errors import UsageError
from xaidroid.gam import GamConfig, GamModel, gam_predict, train_gam
from xaidroid.gat import GatConfig, GatModel, gat_predict, train_gat
from xaidroid.numkernel import set_backend


def synth_graph(n_nodes, rng, label, app_id):
    """Directed ring plus n random chords; every node stays reachable."""
    nodes = tuple(range(n_nodes))
    edges = {(i, (i + 1) % n_nodes) for i in range(n_nodes)}
    for _ in range(n_nodes):
        s, t = (int(v) for v in rng.integers(0, n_nodes, size=2))
        if s != t:
            edges.add((s, t))
    return ApiCallGraph(
        app_id=app_id, label=label, nodes=nodes, edges=tuple(sorted(edges)), methods=()
    )


def best_of(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def build_scenarios(args):
    rng = np.random.default_rng(args.seed)
    graphs = [
        synth_graph(args.nodes, rng, "malicious" if i % 2 else "benign", f"g{i}")
        for i in range(args.graphs)
    ]
    gam_config = GamConfig(step_size=args.steps, n_agents=args.agents, epochs=1, seed=0)
    gat_config = GatConfig(epochs=1, seed=0)
    gam_model = GamModel(args.nodes, gam_config)
    gat_model = GatModel(args.nodes, gat_config)
    return (
        ("gam predict", lambda: gam_predict(gam_model, graphs[0], gam_config)),
        ("gam train epoch", lambda: train_gam(gam_model, graphs, gam_config)),
        ("gat predict", lambda: gat_predict(gat_model, graphs[0], gat_config)),
        ("gat train epoch", lambda: train_gat(gat_model, graphs, gat_config)),
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nodes", type=int, default=84, help="nodes per graph")
    ap.add_argument("--graphs", type=int, default=8, help="graphs per training epoch")
    ap.add_argument("--steps", type=int, default=40, help="gam rollout length")
    ap.add_argument("--agents", type=int, default=10, help="gam agents")
    ap.add_argument("--repeats", type=int, default=3, help="take the best of N runs")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    scenarios = build_scenarios(args)
    results = {}
    backends = []
    for backend in ("py", "c"):
        try:
            set_backend(backend)
        except UsageError as exc:
            print(f"skipping backend {backend!r}: {exc}")
            continue
        backends.append(backend)
        for name, fn in scenarios:
            fn()  # warm up caches and lazy imports outside the timer
            results[(name, backend)] = best_of(fn, args.repeats)

    print(
        f"nodes={args.nodes} graphs={args.graphs} steps={args.steps} "
        f"agents={args.agents} repeats={args.repeats}"
    )
    header = f"{'scenario':<16}" + "".join(f"{b:>12}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for name, _ in scenarios:
        cells = "".join(f"{results[(name, b)] * 1e3:>10.2f}ms" for b in backends)
        line = f"{name:<16}{cells}"
        if len(backends) == 2:
            ratio = results[(name, "py")] / results[(name, "c")]
            line += f"{ratio:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
