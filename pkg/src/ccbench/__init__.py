"""Trace-driven bottleneck emulation and congestion-control evaluation toolkit.

The package replays per-millisecond channel traces through a deterministic
discrete-event bottleneck, drives pluggable congestion controllers over it,
and computes throughput/delay/harm/fairness statistics from the event logs.
"""

from ccbench.trace import (
    ChannelTrace,
    ProbeLog,
    average_capacity,
    constant_trace,
    onoff_trace,
    parse_trace,
    probe_log_to_trace,
    serialize_trace,
    step_trace,
)
from ccbench.link import BottleneckLink, bdp_packets, buffer_from_bdp
from ccbench.engine import ExperimentConfig, FlowSpec, RunResult, run, run_batch

__version__ = "0.1.0"

__all__ = [
    "ChannelTrace",
    "ProbeLog",
    "average_capacity",
    "constant_trace",
    "onoff_trace",
    "parse_trace",
    "probe_log_to_trace",
    "serialize_trace",
    "step_trace",
    "BottleneckLink",
    "bdp_packets",
    "buffer_from_bdp",
    "ExperimentConfig",
    "FlowSpec",
    "RunResult",
    "run",
    "run_batch",
]
