"""Channel traces: per-millisecond packet delivery schedules.

A trace is the list of millisecond marks at which the bottleneck may release
one MTU-sized packet; the on-disk format is one non-negative integer per
line, nondecreasing (the format used by mm-link style replay tools).  This
module parses, serializes, synthesizes and summarizes traces, and converts
probe-receiver arrival logs into traces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ccbench.errors import (
    DecreasingTimestamp,
    EmptyLog,
    EmptyTrace,
    NonNumericLine,
    RateTooHighForPacketSize,
)

DEFAULT_PACKET_BYTES = 1500
BITS_PER_BYTE = 8

# per-ms opportunity counts are held in int32 arrays by the engine
_MAX_PACKETS_PER_MS = 2**31 - 1


@dataclass(frozen=True, eq=False)
class ChannelTrace:
    """Immutable delivery-opportunity schedule.

    ``opportunities`` holds one millisecond timestamp per deliverable packet,
    sorted nondecreasing; repeated values mean several packets in the same
    millisecond.  ``duration_ms`` may extend past the last opportunity
    (trailing outage).
    """

    opportunities: np.ndarray
    duration_ms: int
    packet_bytes: int = DEFAULT_PACKET_BYTES

    def __post_init__(self):
        opps = np.asarray(self.opportunities, dtype=np.int64)
        opps.setflags(write=False)
        object.__setattr__(self, "opportunities", opps)
        if self.packet_bytes <= 0:
            raise ValueError("packet_bytes must be positive")
        if self.duration_ms <= 0:
            raise ValueError("duration_ms must be positive")
        if opps.size:
            if opps[0] < 0:
                raise ValueError("opportunity timestamps must be non-negative")
            if np.any(np.diff(opps) < 0):
                raise ValueError("opportunities must be nondecreasing")
            if opps[-1] >= self.duration_ms:
                raise ValueError("duration_ms must exceed the last opportunity")

    def __eq__(self, other):
        if not isinstance(other, ChannelTrace):
            return NotImplemented
        return (
            self.duration_ms == other.duration_ms
            and self.packet_bytes == other.packet_bytes
            and np.array_equal(self.opportunities, other.opportunities)
        )

    def __repr__(self):
        return (
            f"ChannelTrace({self.opportunities.size} opportunities, "
            f"{self.duration_ms} ms, {self.packet_bytes} B)"
        )

    @property
    def n_opportunities(self) -> int:
        return int(self.opportunities.size)

    def counts_per_ms(self) -> np.ndarray:
        """Packets deliverable in each millisecond, as an int32 array."""
        counts = np.bincount(self.opportunities, minlength=self.duration_ms)
        if counts.size and counts.max() > _MAX_PACKETS_PER_MS:
            raise RateTooHighForPacketSize(
                f"{counts.max()} packets in one ms exceeds the int32 schedule"
            )
        return counts.astype(np.int32)


@dataclass(frozen=True, eq=False)
class ProbeLog:
    """Receive timestamps (microseconds) of fixed-size probe packets."""

    arrivals: np.ndarray
    packet_bytes: int = DEFAULT_PACKET_BYTES

    def __post_init__(self):
        arr = np.asarray(self.arrivals, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "arrivals", arr)
        if self.packet_bytes <= 0:
            raise ValueError("packet_bytes must be positive")
        if arr.size and np.any(np.diff(arr) < 0):
            raise ValueError("arrivals must be nondecreasing")


def parse_trace(text: str, packet_bytes: int = DEFAULT_PACKET_BYTES) -> ChannelTrace:
    """Parse trace-file content (one ms timestamp per line, blank lines ignored)."""
    stamps = []
    prev = -1
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if not line.isdigit():
            raise NonNumericLine(line_no, line)
        value = int(line)
        if value < prev:
            raise DecreasingTimestamp(line_no)
        prev = value
        stamps.append(value)
    if not stamps:
        raise EmptyTrace("trace file contains no opportunities")
    return ChannelTrace(np.array(stamps, dtype=np.int64), stamps[-1] + 1, packet_bytes)


def serialize_trace(trace: ChannelTrace) -> str:
    """Inverse of :func:`parse_trace`; one timestamp per line, LF-terminated."""
    if trace.n_opportunities == 0:
        raise EmptyTrace("an empty trace has no file representation")
    return "\n".join(str(int(t)) for t in trace.opportunities) + "\n"


def load_trace(path, packet_bytes: int = DEFAULT_PACKET_BYTES) -> ChannelTrace:
    with open(path, "r", encoding="ascii") as fh:
        return parse_trace(fh.read(), packet_bytes)


def save_trace(trace: ChannelTrace, path) -> None:
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(serialize_trace(trace))


def parse_probe_log(text: str, packet_bytes: int = DEFAULT_PACKET_BYTES) -> ProbeLog:
    """Parse a probe log: one arrival timestamp (integer microseconds) per line."""
    stamps = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if not line.isdigit():
            raise NonNumericLine(line_no, line)
        stamps.append(int(line))
    return ProbeLog(np.array(stamps, dtype=np.int64), packet_bytes)


def load_probe_log(path, packet_bytes: int = DEFAULT_PACKET_BYTES) -> ProbeLog:
    with open(path, "r", encoding="ascii") as fh:
        return parse_probe_log(fh.read(), packet_bytes)


def probe_log_to_trace(log: ProbeLog, bin_ms: int = 1) -> ChannelTrace:
    """Convert probe arrivals into a trace: one opportunity per received packet.

    An arrival at t µs becomes an opportunity at ``floor(t/1000/bin_ms) * bin_ms``;
    timestamps are shifted by whole bins so the first arrival lands in bin 0
    (sub-millisecond phase is preserved).
    """
    if log.arrivals.size == 0:
        raise EmptyLog("cannot convert an empty probe log")
    if bin_ms < 1:
        raise ValueError("bin_ms must be >= 1")
    bin_us = 1000 * bin_ms
    base = (log.arrivals[0] // bin_us) * bin_us
    bins = ((log.arrivals - base) // bin_us) * bin_ms
    duration = int(bins[-1]) + bin_ms
    return ChannelTrace(bins, duration, log.packet_bytes)


def average_capacity(trace: ChannelTrace) -> float:
    """Mean capacity over the whole trace, in bits per second."""
    bits = trace.n_opportunities * trace.packet_bytes * BITS_PER_BYTE
    return bits / (trace.duration_ms / 1000.0)


def capacity_over_window(trace: ChannelTrace, window_ms: int) -> float:
    """Mean capacity in bits per second over ``window_ms`` of looped replay."""
    if window_ms <= 0:
        raise ValueError("window_ms must be positive")
    loops, rem = divmod(window_ms, trace.duration_ms)
    count = loops * trace.n_opportunities
    if rem:
        count += int(np.searchsorted(trace.opportunities, rem, side="left"))
    return count * trace.packet_bytes * BITS_PER_BYTE / (window_ms / 1000.0)


def _emit_segment(
    out: list, rate_mbps: float, start_ms: int, length_ms: int, packet_bytes: int
) -> None:
    # Bresenham-style accumulator: carry fractional packets between
    # milliseconds so the long-run average matches the requested rate exactly.
    bits_per_s = round(rate_mbps * 1e6)
    if bits_per_s < 0:
        raise ValueError("rate must be >= 0")
    threshold = packet_bytes * BITS_PER_BYTE * 1000
    if bits_per_s // threshold > _MAX_PACKETS_PER_MS:
        raise RateTooHighForPacketSize(
            f"{rate_mbps} Mbps exceeds the per-ms packet schedule limit"
        )
    acc = 0
    for m in range(start_ms, start_ms + length_ms):
        acc += bits_per_s
        k, acc = divmod(acc, threshold)
        if k:
            out.extend([m] * k)


def constant_trace(
    rate_mbps: float, duration_ms: int, packet_bytes: int = DEFAULT_PACKET_BYTES
) -> ChannelTrace:
    """Constant-rate trace; total opportunities == floor(rate * T / packet bits)."""
    if duration_ms <= 0:
        raise ValueError("duration_ms must be positive")
    out: list = []
    _emit_segment(out, rate_mbps, 0, duration_ms, packet_bytes)
    return ChannelTrace(np.array(out, dtype=np.int64), duration_ms, packet_bytes)


def step_trace(
    segments: Sequence[tuple], packet_bytes: int = DEFAULT_PACKET_BYTES
) -> ChannelTrace:
    """Piecewise-constant trace from (rate_mbps, duration_ms) segments."""
    if not segments:
        raise ValueError("need at least one segment")
    out: list = []
    at = 0
    for rate_mbps, length_ms in segments:
        if length_ms <= 0:
            raise ValueError("segment durations must be positive")
        _emit_segment(out, rate_mbps, at, length_ms, packet_bytes)
        at += length_ms
    return ChannelTrace(np.array(out, dtype=np.int64), at, packet_bytes)


def onoff_trace(
    on_rate_mbps: float,
    on_ms: int,
    off_ms: int,
    duration_ms: int,
    packet_bytes: int = DEFAULT_PACKET_BYTES,
) -> ChannelTrace:
    """Alternating on/off trace modeling abrupt connectivity outages."""
    if on_ms <= 0 or off_ms <= 0 or duration_ms <= 0:
        raise ValueError("durations must be positive")
    segments = []
    at = 0
    while at < duration_ms:
        on_len = min(on_ms, duration_ms - at)
        segments.append((on_rate_mbps, on_len))
        at += on_len
        if at < duration_ms:
            off_len = min(off_ms, duration_ms - at)
            segments.append((0.0, off_len))
            at += off_len
    return step_trace(segments, packet_bytes)


def trace_from_counts(
    counts: Iterable[int], packet_bytes: int = DEFAULT_PACKET_BYTES
) -> ChannelTrace:
    """Build a trace from per-ms packet counts (convenience for tests/tools)."""
    counts = np.asarray(list(counts), dtype=np.int64)
    if counts.size == 0:
        raise ValueError("need at least one millisecond of counts")
    if np.any(counts < 0):
        raise ValueError("counts must be non-negative")
    stamps = np.repeat(np.arange(counts.size, dtype=np.int64), counts)
    return ChannelTrace(stamps, int(counts.size), packet_bytes)
