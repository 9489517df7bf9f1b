#!/usr/bin/env python3
"""Compare the numba-compiled kernels against the pure-numpy fallback.

The same network integration runs once per backend (plus an untimed warm-up
for JIT compilation); results are checked for agreement before timings are
reported. Select the numpy path globally with FLUIDIC_PURE_NUMPY=1.

Usage:
    python benchmarks/bench_kernels.py [--gate AND] [--t-end 1.0] [--dx 5e-6]
"""

import argparse
import time

import numpy as np

import fluidic as f
import fluidic.kernels as kernels
from fluidic.transport import SolverConfig, simulate


def run(netlist, config, backend):
    previous = kernels.use_backend(backend)
    try:
        started = time.perf_counter()
        trace = simulate(netlist, config)
        elapsed = time.perf_counter() - started
    finally:
        kernels.use_backend(previous)
    return trace, elapsed


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--gate", default="AND",
                        choices=[k.value for k in f.GateKind])
    parser.add_argument("--t-end", type=float, default=1.0)
    parser.add_argument("--dx", type=float, default=5e-6)
    args = parser.parse_args()

    kind = f.GateKind(args.gate)
    netlist = f.build_gate(kind)
    config = SolverConfig(t_end=args.t_end, dx=args.dx)
    sim = f.NetworkSimulation(netlist, config)
    cells = sum(r.n_cells * len(r.species) for r in sim.order)
    print(f"gate {kind.value}: {len(netlist.channels)} channels, "
          f"{cells} species-cells, dt={sim.dt:.3e} s, "
          f"{sim.steps_total} steps for t_end={args.t_end} s")

    backends = ["numpy"]
    if kernels.HAS_NUMBA:
        backends.insert(0, "numba")
        run(netlist, SolverConfig(t_end=0.02, dx=args.dx), "numba")  # JIT warm-up
    else:
        print("numba unavailable; timing the numpy path only")

    results = {}
    traces = {}
    for backend in backends:
        traces[backend], results[backend] = run(netlist, config, backend)
        rate = sim.steps_total / results[backend]
        print(f"  {backend:>6}: {results[backend]:8.3f} s "
              f"({rate:,.0f} steps/s)")

    if len(backends) == 2:
        worst = max(
            float(np.abs(traces["numba"].series[k]
                         - traces["numpy"].series[k]).max())
            for k in traces["numba"].columns
        )
        print(f"  backend agreement: max |difference| = {worst:.3e}")
        print(f"  speedup: {results['numpy'] / results['numba']:.1f}x")


if __name__ == "__main__":
    main()
