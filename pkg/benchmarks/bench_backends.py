#!/usr/bin/env python3
"""Compare the numba kernels against the pure-Python fallback.

Each backend runs in its own subprocess (selected via QREPSIM_NO_NUMBA) and
reports two numbers: a microbenchmark of the raw walk kernel and the wall
time of a full desk-scale simulation. The metric rows of both simulations
are compared to prove the backends agree bit for bit.

Usage: python benchmarks/bench_backends.py [--nodes N] [--queries Q] [--walks W]
"""

import argparse
import json
import os
import subprocess
import sys

SCRIPT = r'''
import json, time
import numpy as np
from qrepsim import kernels
from qrepsim._jit import BACKEND
from qrepsim.model import generate_topology
from qrepsim.qrep import QRepParams
from qrepsim.sim import SimConfig, Simulation

walks = {walks}

ov = generate_topology(1000, 4.0, seed=1)
n = ov.node_count
up = np.ones(n, dtype=np.bool_)
holds = np.zeros(n, dtype=np.bool_)
holds[500] = True
edge_stamp = np.zeros(len(ov.indices), dtype=np.int64)
visit_stamp = np.zeros(n, dtype=np.int64)
state = kernels.seed_state(3)
visited = np.empty(37, dtype=np.int64)
paths = np.empty((6, 7), dtype=np.int64)
lens = np.empty(6, dtype=np.int64)

kernels.run_walk(ov.indptr, ov.indices, ov.edge_rev, up, holds, True, 0, 6, 6,
                 1, edge_stamp, visit_stamp, state, visited, paths, lens)
start = time.perf_counter()
for serial in range(2, walks + 2):
    kernels.run_walk(ov.indptr, ov.indices, ov.edge_rev, up, holds, True,
                     serial % n, 6, 6, serial, edge_stamp, visit_stamp,
                     state, visited, paths, lens)
micro = time.perf_counter() - start

cfg = SimConfig(node_count={nodes}, queries_per_node={queries},
                object_count=25, metrics_window_queries=4000,
                requester_copy=True, seed=11)
params = QRepParams(eta=0.9, delta=30.0, hello_ttl=4, hello_walkers=8)
sim = Simulation(cfg, params)          # built outside the timed region
start = time.perf_counter()
rows = sim.run()
elapsed = time.perf_counter() - start
print(json.dumps({{
    "backend": BACKEND,
    "micro_s": micro,
    "walks": walks,
    "sim_s": elapsed,
    "rows": [(r.window_index, r.queries_issued, r.queries_succeeded,
              f"{{r.success_rate:.12f}}", r.total_replicas) for r in rows],
}}))
'''


def run_backend(no_numba, nodes, queries, walks):
    env = dict(os.environ, QREPSIM_NO_NUMBA="1" if no_numba else "0")
    script = SCRIPT.format(nodes=nodes, queries=queries, walks=walks)
    out = subprocess.run([sys.executable, "-c", script], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--nodes", type=int, default=1000)
    parser.add_argument("--queries", type=int, default=60)
    parser.add_argument("--walks", type=int, default=20000)
    args = parser.parse_args()

    results = [run_backend(False, args.nodes, args.queries, args.walks),
               run_backend(True, args.nodes, args.queries, args.walks)]
    for r in results:
        per_walk = 1e6 * r["micro_s"] / r["walks"]
        print(f"{r['backend']:>7}: walk kernel {per_walk:8.1f} us/walk | "
              f"simulation {r['sim_s']:6.2f}s "
              f"({args.nodes} nodes, {args.queries} queries/node)")
    fast, slow = results
    if fast["rows"] != slow["rows"]:
        print("ERROR: backends disagree on simulation output")
        sys.exit(1)
    print(f"identical output across backends; "
          f"kernel speedup x{slow['micro_s'] / fast['micro_s']:.0f}, "
          f"end-to-end x{slow['sim_s'] / fast['sim_s']:.1f}")


if __name__ == "__main__":
    main()
