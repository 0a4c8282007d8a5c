"""Experiment configuration: trace, flows, buffer sizing, timing, seed."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Tuple, Union

from ccbench import trace as trace_mod
from ccbench.cc import PROTOCOLS
from ccbench.errors import ConfigInvalid, TraceLoadError
from ccbench.link import bdp_packets
from ccbench.trace import ChannelTrace

INFINITE = "inf"
BDP_MULTIPLE = "bdp"
PACKETS = "pkts"


@dataclass(frozen=True)
class BufferSpec:
    """Bottleneck buffer size: infinite, a BDP multiple, or literal packets."""

    kind: str = INFINITE
    value: float = 0.0

    def __post_init__(self):
        if self.kind not in (INFINITE, BDP_MULTIPLE, PACKETS):
            raise ConfigInvalid(f"unknown buffer kind {self.kind!r}")
        if self.kind != INFINITE and self.value <= 0:
            raise ConfigInvalid("buffer value must be positive")

    def resolve(self, trace: ChannelTrace, min_rtt_ms: float) -> Optional[int]:
        """Concrete packet count, or None for an infinite buffer."""
        if self.kind == INFINITE:
            return None
        if self.kind == PACKETS:
            return max(1, int(round(self.value)))
        return max(1, round(self.value * bdp_packets(trace, min_rtt_ms)))

    def __str__(self):
        if self.kind == INFINITE:
            return "inf"
        if self.kind == PACKETS:
            return f"pkts:{int(self.value)}"
        return f"bdp:{self.value:g}"


def parse_buffer(text: str) -> BufferSpec:
    """Parse ``inf``, ``bdp:X`` or ``pkts:N``."""
    text = text.strip().lower()
    if text in ("inf", "infinite"):
        return BufferSpec(INFINITE)
    for prefix, kind in (("bdp:", BDP_MULTIPLE), ("pkts:", PACKETS)):
        if text.startswith(prefix):
            try:
                return BufferSpec(kind, float(text[len(prefix):]))
            except ValueError:
                break
    raise ConfigInvalid(f"cannot parse buffer spec {text!r}")


@dataclass(frozen=True)
class FlowSpec:
    protocol: str
    params: Tuple[Tuple[str, float], ...] = ()
    start_s: float = 0.0

    @staticmethod
    def make(protocol: str, params: Optional[dict] = None, start_s: float = 0.0):
        items = tuple(sorted((params or {}).items()))
        return FlowSpec(protocol, items, start_s)

    def params_dict(self) -> dict:
        return dict(self.params)


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything one run needs; identical configs plus seeds give identical results."""

    trace: Union[ChannelTrace, str]
    flows: Tuple[FlowSpec, ...]
    buffer: BufferSpec = BufferSpec(INFINITE)
    prop_delay_ms: int = 10
    duration_s: float = 180.0
    seed: int = 0
    sampling_window_s: float = 1.0
    # sender socket-buffer clamp on the window, ~4 MB of 1500 B packets
    max_cwnd_packets: int = 2800
    log_decisions: bool = True

    def __post_init__(self):
        if isinstance(self.flows, list):
            object.__setattr__(self, "flows", tuple(self.flows))
        if not self.flows:
            raise ConfigInvalid("need at least one flow")
        if self.duration_s <= 0:
            raise ConfigInvalid("duration_s must be positive")
        if self.prop_delay_ms < 1:
            raise ConfigInvalid("prop_delay_ms must be >= 1 (the schedule is ms-grained)")
        if self.sampling_window_s <= 0:
            raise ConfigInvalid("sampling_window_s must be positive")
        if self.max_cwnd_packets < 1:
            raise ConfigInvalid("max_cwnd_packets must be >= 1")
        for spec in self.flows:
            if spec.protocol not in PROTOCOLS:
                raise ConfigInvalid(f"unknown protocol {spec.protocol!r}")
            if not 0 <= spec.start_s < self.duration_s:
                raise ConfigInvalid("flow start_s must lie inside the run duration")

    @property
    def min_rtt_ms(self) -> int:
        return 2 * self.prop_delay_ms

    @property
    def duration_ms(self) -> int:
        return int(round(self.duration_s * 1000))

    def load_trace(self) -> ChannelTrace:
        if isinstance(self.trace, ChannelTrace):
            return self.trace
        try:
            return trace_mod.load_trace(self.trace)
        except OSError as exc:
            raise TraceLoadError(f"cannot read trace {self.trace!r}: {exc}") from exc

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=seed)

    def controller_seed(self, flow_index: int) -> int:
        # stable per-flow derivation so batch seeds stay independent
        return (self.seed * 1_000_003 + flow_index * 7919 + 1) & (2**63 - 1)

    def describe(self) -> dict:
        """JSON-friendly echo for run metadata."""
        trace_desc = self.trace if isinstance(self.trace, str) else repr(self.trace)
        return {
            "trace": trace_desc,
            "flows": [
                {"protocol": f.protocol, "params": dict(f.params), "start_s": f.start_s}
                for f in self.flows
            ],
            "buffer": str(self.buffer),
            "prop_delay_ms": self.prop_delay_ms,
            "duration_s": self.duration_s,
            "seed": self.seed,
            "sampling_window_s": self.sampling_window_s,
            "max_cwnd_packets": self.max_cwnd_packets,
        }
