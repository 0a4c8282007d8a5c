"""Trace-driven bottleneck link: FIFO DropTail queue drained on the trace schedule.

The queue is counted in packets.  Draining happens at millisecond marks: at
millisecond ``m`` the link releases up to ``opportunities_at(m mod trace
length)`` packets, all stamped with egress time ``m * 1000`` µs.  Unused
opportunities are not banked.  Receiver-side arrival adds one propagation
delay; the acknowledgment path is uncontended and adds one more.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import List, Optional, Tuple

from ccbench.errors import ClockRegression
from ccbench.trace import ChannelTrace, average_capacity

DEFAULT_PROP_DELAY_MS = 10

US_PER_MS = 1000


@dataclass(frozen=True)
class Packet:
    flow_id: int
    seq: int
    size_bytes: int
    sent_at: int  # simulation time, µs


class BottleneckLink:
    """FIFO DropTail queue fed by senders and drained by the trace schedule.

    ``buffer_packets=None`` means an infinite buffer.  The trace wraps around
    when a run outlasts it.
    """

    def __init__(
        self,
        trace: ChannelTrace,
        buffer_packets: Optional[int] = None,
        prop_delay_ms: int = DEFAULT_PROP_DELAY_MS,
    ):
        if buffer_packets is not None and buffer_packets < 1:
            raise ValueError("buffer_packets must be >= 1 (or None for infinite)")
        if prop_delay_ms < 0:
            raise ValueError("prop_delay_ms must be >= 0")
        self.trace = trace
        self.buffer_packets = buffer_packets
        self.prop_delay_ms = prop_delay_ms
        self._counts = trace.counts_per_ms()
        self._queue: deque = deque()
        self._next_ms = 0
        self._last_enqueue_us = 0
        self.enqueued = 0
        self.delivered = 0
        self.dropped = 0

    @property
    def queue_len(self) -> int:
        return len(self._queue)

    def opportunities_at(self, ms: int) -> int:
        return int(self._counts[ms % self.trace.duration_ms])

    def enqueue(self, packet: Packet, now_us: int) -> bool:
        """Offer a packet to the queue; returns True if accepted, False if dropped.

        ``enqueued`` counts every offered packet, so the conservation identity
        ``enqueued == delivered + dropped + queue_len`` holds at all times.
        """
        if now_us < self._last_enqueue_us:
            raise ClockRegression(f"enqueue at {now_us} after {self._last_enqueue_us}")
        self._last_enqueue_us = now_us
        self.enqueued += 1
        if self.buffer_packets is not None and len(self._queue) >= self.buffer_packets:
            self.dropped += 1
            return False
        self._queue.append(packet)
        return True

    def advance_to(self, ms: int) -> List[Tuple[Packet, int]]:
        """Drain every millisecond mark up to and including ``ms``.

        Returns (packet, egress_time_us) pairs in release order.  Egress at
        mark ``m`` is ``m * 1000``; receiver arrival adds the propagation
        delay on top.
        """
        if ms < self._next_ms - 1:
            raise ClockRegression(f"advance_to({ms}) after ms {self._next_ms - 1}")
        released: List[Tuple[Packet, int]] = []
        duration = self.trace.duration_ms
        while self._next_ms <= ms:
            m = self._next_ms
            n = min(len(self._queue), int(self._counts[m % duration]))
            egress = m * US_PER_MS
            for _ in range(n):
                released.append((self._queue.popleft(), egress))
            self.delivered += n
            self._next_ms += 1
        return released

    def conservation_ok(self) -> bool:
        return self.enqueued == self.delivered + self.dropped + len(self._queue)


def bdp_packets(trace: ChannelTrace, min_rtt_ms: float) -> int:
    """Bandwidth-delay product of the trace in whole packets (at least 1)."""
    if min_rtt_ms <= 0:
        raise ValueError("min_rtt_ms must be positive")
    bits = average_capacity(trace) * min_rtt_ms / 1000.0
    packets = round(bits / (trace.packet_bytes * 8))
    return max(1, packets)


def buffer_from_bdp(trace: ChannelTrace, min_rtt_ms: float, multiple: float) -> int:
    """Buffer size as a BDP multiple, rounded to whole packets (at least 1)."""
    if multiple <= 0:
        raise ValueError("multiple must be positive")
    return max(1, round(multiple * bdp_packets(trace, min_rtt_ms)))
