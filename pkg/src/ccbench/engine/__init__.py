"""Deterministic discrete-event engine wiring flows, controllers and the link."""

from __future__ import annotations

import time
from concurrent.futures import ProcessPoolExecutor
from typing import List, Sequence

import numpy as np

from ccbench.cc import make_controller
from ccbench.engine.config import BufferSpec, ExperimentConfig, FlowSpec, parse_buffer
from ccbench.engine.core import available_cores, resolve_core
from ccbench.engine.result import FlowStats, RunResult
from ccbench.errors import ConfigInvalid
from ccbench.trace import capacity_over_window


def run(config: ExperimentConfig, core: str = "auto") -> RunResult:
    """Execute one experiment; deterministic for a fixed (config, seed, trace)."""
    trace = config.load_trace()
    counts = trace.counts_per_ms()
    duration_ms = config.duration_ms
    buffer_packets = config.buffer.resolve(trace, config.min_rtt_ms)
    controllers = []
    start_ms = []
    for idx, spec in enumerate(config.flows):
        params = spec.params_dict()
        params.setdefault("initial_rtt_us", 2 * config.prop_delay_ms * 1000)
        params.setdefault("packet_bytes", trace.packet_bytes)
        params.setdefault("max_cwnd", float(config.max_cwnd_packets))
        controllers.append(
            make_controller(spec.protocol, params, config.controller_seed(idx))
        )
        start_ms.append(int(round(spec.start_s * 1000)))

    core_name, core_mod = resolve_core(core)
    t_start = time.perf_counter()
    raw = core_mod.simulate(
        counts,
        trace.duration_ms,
        duration_ms,
        config.prop_delay_ms,
        -1 if buffer_packets is None else buffer_packets,
        trace.packet_bytes,
        controllers,
        start_ms,
        float(config.max_cwnd_packets),
        config.log_decisions,
    )
    runtime = time.perf_counter() - t_start

    flows = [
        FlowStats(
            flow_id=f,
            protocol=config.flows[f].protocol,
            sent=raw["sent"][f],
            delivered=raw["delivered"][f],
            dropped=raw["dropped"][f],
            lost_detected=raw["lost"][f],
            inflight_end=raw["inflight_end"][f],
            bytes_delivered=raw["delivered"][f] * trace.packet_bytes,
        )
        for f in range(len(config.flows))
    ]

    def as_np(key, dtype):
        return np.asarray(raw[key], dtype=dtype)

    return RunResult(
        config=config,
        seed=config.seed,
        flows=flows,
        d_flow=as_np("d_flow", np.int64),
        d_seq=as_np("d_seq", np.int64),
        d_sent_us=as_np("d_sent", np.int64),
        d_acked_us=as_np("d_acked", np.int64),
        q_time_us=as_np("q_time", np.int64),
        q_len=as_np("q_len", np.int64),
        dec_time_us=as_np("dec_time", np.int64),
        dec_flow=as_np("dec_flow", np.int64),
        dec_cwnd=as_np("dec_cwnd", np.float64),
        dec_rate_pps=as_np("dec_rate", np.float64),
        dec_mode=list(raw["dec_mode"]),
        link_offers=raw["link_offers"],
        link_dropped=raw["link_dropped"],
        link_delivered=raw["link_delivered"],
        queue_end=raw["queue_end"],
        duration_us=duration_ms * 1000,
        prop_delay_us=config.prop_delay_ms * 1000,
        packet_bytes=trace.packet_bytes,
        capacity_bps=capacity_over_window(trace, duration_ms),
        runtime_s=runtime,
        core=core_name,
    )


def _run_with_seed(args):
    config, seed, core = args
    return run(config.with_seed(seed), core=core)


def run_batch(
    config: ExperimentConfig,
    n_runs: int,
    seeds: Sequence[int],
    jobs: int = 1,
    core: str = "auto",
) -> List[RunResult]:
    """Independent repetitions; output order follows ``seeds`` at any parallelism."""
    if n_runs < 1:
        raise ConfigInvalid("n_runs must be >= 1")
    if len(seeds) != n_runs:
        raise ConfigInvalid("need exactly one seed per run")
    tasks = [(config, seed, core) for seed in seeds]
    if jobs <= 1 or n_runs == 1:
        return [_run_with_seed(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_with_seed, tasks))


__all__ = [
    "BufferSpec",
    "ExperimentConfig",
    "FlowSpec",
    "FlowStats",
    "RunResult",
    "available_cores",
    "parse_buffer",
    "run",
    "run_batch",
]
