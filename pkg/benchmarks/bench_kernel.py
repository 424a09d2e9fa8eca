#!/usr/bin/env python3
"""Compare the pure-Python and compiled simulation kernels.

Runs identical seeded raytracing workloads through both kernel
implementations and reports steps per second.  Step counts must match
exactly between kernels (same seeds, same semantics), so the timings
are like for like.

    python benchmarks/bench_kernel.py
    python benchmarks/bench_kernel.py --scene 30000x22500 --reps 2
"""

from __future__ import annotations

import argparse
import importlib
import sys
import time

from cpnsim.engine import SimState
from cpnsim.engine import _kernel as pure_kernel
from cpnsim.raytrace import SCENARIOS, ScenarioParams, SceneConfig, build_net
from cpnsim.stochastic import RngStream


def parse_dimensions(text: str) -> tuple[int, int]:
    w, h = text.lower().split("x")
    return int(w), int(h)


def one_run(kernel, scene, params, seed, step_limit):
    rng = RngStream(seed)
    net, marking = build_net(scene, params, rng)
    state = SimState(net, marking, rng)

    def stop(st, ev):
        return (ev is not None and type(ev).__name__ == "Fired"
                and ev.transition == "completeScene")

    start = time.perf_counter()
    kernel.run(net, state, stop, (), step_limit)
    return state.step_count, time.perf_counter() - start


def bench(kernel, scene, params, reps, step_limit):
    one_run(kernel, scene, params, seed=0, step_limit=step_limit)  # warm up
    steps, elapsed = 0, 0.0
    for seed in range(1, reps + 1):
        s, dt = one_run(kernel, scene, params, seed, step_limit)
        steps += s
        elapsed += dt
    return steps, elapsed


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--scene", type=parse_dimensions, default=(10_000, 7_500),
                        metavar="WxH", help="scene dimensions (default 10000x7500)")
    parser.add_argument("--complexity", type=int, default=36_500)
    parser.add_argument("--nodes", type=int, default=8)
    parser.add_argument("--scenario", choices=SCENARIOS, default="real")
    parser.add_argument("--reps", type=int, default=5,
                        help="timed runs per kernel (default 5)")
    parser.add_argument("--step-limit", type=int, default=5_000_000)
    args = parser.parse_args(argv)

    scene = SceneConfig(*args.scene, 1_000, 750, args.complexity)
    params = ScenarioParams(node_count=args.nodes, scenario=args.scenario)

    try:
        compiled_kernel = importlib.import_module("cpnsim.engine._kernel_c")
    except ImportError:
        compiled_kernel = None

    kernels = [("pure", pure_kernel)]
    if compiled_kernel is not None:
        kernels.append(("compiled", compiled_kernel))

    print(f"workload: {scene.label} {args.scenario} x{args.nodes} nodes, "
          f"{args.reps} runs per kernel")
    results = {}
    for name, kernel in kernels:
        steps, elapsed = bench(kernel, scene, params, args.reps, args.step_limit)
        results[name] = (steps, elapsed)
        print(f"  {name:8s} {steps:>9d} steps in {elapsed:6.2f} s "
              f"({steps / elapsed / 1000:7.1f}k steps/s)")

    if compiled_kernel is None:
        print("  compiled kernel not built; nothing to compare")
        return 1
    if results["pure"][0] != results["compiled"][0]:
        print("  step counts differ between kernels; timings not comparable")
        return 1
    speedup = results["pure"][1] / results["compiled"][1]
    print(f"  speedup  {speedup:.2f}x (compiled over pure)")
    return 0


if __name__ == "__main__":
    sys.exit(main())
