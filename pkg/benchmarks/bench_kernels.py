"""Compare the numba kernels with the plain numpy fallback.

Each mode runs in a fresh interpreter because the backend is chosen at
import time from ``AECLAB_NO_JIT``.  JIT compile time is excluded by a
warm-up call; the table reports the best of ``--repeat`` timings.

    python3 benchmarks/bench_kernels.py --repeat 5
"""
from __future__ import annotations

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def workloads():
    from aeclab import kernels
    from aeclab.aec import strong_masks
    from aeclab.catalog import get_entry
    from aeclab.iso import automorphisms
    from aeclab.structures import make_graph, make_unary

    rng = np.random.default_rng(7)
    empty7 = make_graph(7, [])
    cyc8 = make_graph(8, [(i, (i + 1) % 8) for i in range(8)])
    edges = [(i, j) for i in range(12) for j in range(i + 1, 12) if rng.random() < 0.2]
    g12 = make_graph(12, edges)
    adj = np.zeros((12, 12), dtype=np.uint8)
    for a, b in edges:
        adj[a, b] = adj[b, a] = 1
    u12 = make_unary([int(x) for x in rng.integers(0, 12, size=12)])
    e = u12.encoded
    cg = get_entry("CG").klass
    flags = strong_masks(cg, make_graph(10, [(0, 1), (1, 2), (3, 4), (5, 6), (6, 7), (7, 8)]))

    return {
        "iso_backtrack/aut(empty7)": lambda: len(automorphisms(empty7)),
        "iso_backtrack/aut(cycle8)": lambda: len(automorphisms(cyc8)),
        "iso_backtrack/aut(random12)": lambda: len(automorphisms(g12)),
        "superset_meet/2^10": lambda: int(kernels.superset_meet(flags, 10).sum()),
        "function_closure_all/n=12": lambda: int(kernels.function_closure_all(12, e.fun_arity, e.fun_off,
                                                                             e.fun_data).sum()),
        "component_closure_all/n=12": lambda: int(kernels.component_closure_all(adj).sum()),
    }


def run_current(repeat: int) -> dict:
    from aeclab import kernels

    out = {"numba": kernels.USE_NUMBA, "results": {}}
    for name, fn in workloads().items():
        value = fn()  # warm-up (and JIT compile)
        best = float("inf")
        for _ in range(repeat):
            t0 = time.perf_counter()
            fn()
            best = min(best, time.perf_counter() - t0)
        out["results"][name] = {"seconds": best, "value": value}
    return out


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--child", action="store_true", help=argparse.SUPPRESS)
    args = p.parse_args(argv)
    if args.child:
        print(json.dumps(run_current(args.repeat)))
        return 0
    runs = {}
    for label, flag in (("numba", "0"), ("numpy", "1")):
        env = dict(os.environ, AECLAB_NO_JIT=flag)
        proc = subprocess.run([sys.executable, __file__, "--child", "--repeat", str(args.repeat)],
                              env=env, capture_output=True, text=True, check=True)
        runs[label] = json.loads(proc.stdout.strip().splitlines()[-1])
    print(f"{'workload':<30} {'numba s':>10} {'numpy s':>10} {'speedup':>8}  agree")
    for name, jit in runs["numba"]["results"].items():
        py = runs["numpy"]["results"][name]
        speed = py["seconds"] / jit["seconds"] if jit["seconds"] > 0 else float("inf")
        print(f"{name:<30} {jit['seconds']:>10.5f} {py['seconds']:>10.5f} {speed:>8.1f}  "
              f"{jit['value'] == py['value']}")
    if not runs["numba"]["numba"]:
        print("note: numba was not importable; both columns ran the fallback")
    return 0


if __name__ == "__main__":
    sys.exit(main())
