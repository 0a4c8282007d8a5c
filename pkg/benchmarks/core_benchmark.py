#!/usr/bin/env python3
"""Head-to-head benchmark of the pure-Python and compiled simulation cores.

Sweeps link rate (and one competing-flows case) and reports wall-clock time
plus delivery-event throughput for each core.  The two cores produce
byte-identical results (enforced by the test suite); the question here is
only how fast each chews through the schedule.

Usage:
    python benchmarks/core_benchmark.py [--duration-s 30] [--full]

``--full`` adds a multi-gigabit row (slow on the pure core).
"""

import argparse
import sys

from ccbench.engine import ExperimentConfig, FlowSpec, run
from ccbench.engine.core import available_cores
from ccbench.trace import constant_trace

SCENARIOS = [
    # (label, rate_mbps, protocols)
    ("50 Mbps, 1 cubic", 50, ("cubic",)),
    ("200 Mbps, 1 cubic", 200, ("cubic",)),
    ("400 Mbps, 2 flows", 400, ("cubic", "bbr")),
    ("1 Gbps, 2 flows", 1000, ("cubic", "cubic")),
]

FULL_SCENARIOS = [
    ("2.5 Gbps, 2 flows", 2500, ("cubic", "cubic")),
]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--duration-s", type=float, default=30.0)
    parser.add_argument("--full", action="store_true")
    args = parser.parse_args(argv)

    cores = [c for c in ("pure", "compiled") if c in available_cores()]
    if "compiled" not in cores:
        print("note: compiled core not built; benchmarking pure core only")

    scenarios = SCENARIOS + (FULL_SCENARIOS if args.full else [])
    header = f"{'scenario':24s} {'core':9s} {'wall':>8s} {'deliveries':>12s} {'events/s':>12s} {'speedup':>8s}"
    print(header)
    print("-" * len(header))
    for label, rate, protocols in scenarios:
        config = ExperimentConfig(
            trace=constant_trace(rate, 10_000),
            flows=tuple(FlowSpec.make(p) for p in protocols),
            duration_s=args.duration_s,
        )
        base_time = None
        for core in cores:
            res = run(config, core=core)
            events = int(res.link_delivered)
            speedup = ""
            if base_time is None:
                base_time = res.runtime_s  # pure core sets the baseline
            else:
                speedup = f"{base_time / res.runtime_s:7.1f}x"
            print(
                f"{label:24s} {core:9s} {res.runtime_s:7.2f}s {events:>12,} "
                f"{events / res.runtime_s:>12,.0f} {speedup:>8s}"
            )
    return 0


if __name__ == "__main__":
    sys.exit(main())
