#!/usr/bin/env python3
"""Compare the compiled step kernel against the pure-Python fallback.

Two workloads dominated by the kernel:
  - reach: full reachable-state construction (symbolic cube expansion)
    for every controller level under the free-boolean abstraction;
  - steps: bulk concrete stepping of level 03 under random inputs.

Usage: python benchmarks/bench_engine.py [--steps N] [--repeat K]
"""
from __future__ import annotations

import argparse
import random
import time

from asmvent import initial_state, load
from asmvent.engine import compile_program, concrete_step, expand, get_backend
from asmvent.models import fast_timers_config
from asmvent.syntax import CLOCK_FUNCTION


def bench_reachability(kernel, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        started = time.perf_counter()
        for level in range(4):
            machine = load(level)
            prog = compile_program(machine, "free")
            init = prog.encode_state(initial_state(machine).controlled)
            seen = {init}
            frontier = [init]
            while frontier:
                nxt = []
                for vec in frontier:
                    for _cube, succ in expand(prog, vec, kernel=kernel):
                        if succ not in seen:
                            seen.add(succ)
                            nxt.append(succ)
                frontier = nxt
        best = min(best, time.perf_counter() - started)
    return best


def bench_steps(kernel, n_steps: int, repeat: int) -> float:
    machine = load(3, fast_timers_config())
    prog = compile_program(machine, "concrete")
    rng = random.Random(11)
    envs = []
    for i in range(n_steps):
        env = {}
        for f in machine.monitored_inputs():
            if f.codomain == "Boolean":
                env[f.name] = rng.random() < 0.5
            else:
                env[f.name] = rng.choice(machine.domains[f.codomain])
        env[CLOCK_FUNCTION] = i + 1
        envs.append((env, (i + 1) * 1000))
    best = float("inf")
    for _ in range(repeat):
        vec = prog.encode_state(initial_state(machine).controlled)
        started = time.perf_counter()
        for env, clock in envs:
            vec = concrete_step(prog, vec, env, clock=clock, kernel=kernel)
        best = min(best, time.perf_counter() - started)
    return best


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--steps", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = []
    for name in ("python", "compiled"):
        try:
            backends.append((name, get_backend(name)))
        except ImportError:
            print(f"{name}: not available")
    results = {}
    for name, kernel in backends:
        reach = bench_reachability(kernel, args.repeat)
        steps = bench_steps(kernel, args.steps, args.repeat)
        results[name] = (reach, steps)
        print(f"{name:>9}: reach(levels 00-03) {reach * 1000:8.1f} ms   "
              f"{args.steps} steps {steps * 1000:8.1f} ms "
              f"({args.steps / steps / 1000:.0f}k steps/s)")
    if len(results) == 2:
        py, cy = results["python"], results["compiled"]
        print(f"{'speedup':>9}: reach {py[0] / cy[0]:.1f}x   steps {py[1] / cy[1]:.1f}x")


if __name__ == "__main__":
    main()
