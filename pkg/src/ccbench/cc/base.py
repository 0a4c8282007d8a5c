"""Shared congestion-controller machinery.

Every controller is a per-flow state machine driven by three callbacks
(``on_ack``, ``on_loss``, ``on_tick``) and queried for ``cwnd_packets`` and
``pacing_rate_pps`` (0 means window-limited only).  Callbacks never raise;
duplicate or stale ACK notifications are ignored via sequence tracking.
"""

from __future__ import annotations

import math
import random
from collections import deque
from typing import Dict, Optional

INITIAL_CWND_PACKETS = 10.0
DEFAULT_INITIAL_RTT_US = 20_000


class CongestionController:
    """Base class; subclasses override the callbacks and queries."""

    protocol = "base"
    PARAM_DEFAULTS: Dict[str, float] = {}

    # parameters every controller understands; max_cwnd mirrors the sender
    # socket-buffer clamp real stacks impose on window growth
    _COMMON_DEFAULTS = {
        "initial_cwnd": INITIAL_CWND_PACKETS,
        "initial_rtt_us": DEFAULT_INITIAL_RTT_US,
        "packet_bytes": 1500,
        "max_cwnd": 1e12,
    }

    def __init__(self, params: Optional[dict] = None, seed: Optional[int] = None):
        merged = dict(self._COMMON_DEFAULTS)
        merged.update(self.PARAM_DEFAULTS)
        params = dict(params or {})
        unknown = set(params) - set(merged)
        if unknown:
            raise ValueError(
                f"{self.protocol}: unknown parameters {sorted(unknown)}"
            )
        merged.update(params)
        self.params = merged
        self._rng = random.Random(seed)
        self._last_seq = -1
        self._recovery_exit_seq = -1
        self._srtt_us = 0.0

    # -- callback interface -------------------------------------------------

    def on_ack(self, seq: int, rtt_us: int, now_us: int) -> None:
        raise NotImplementedError

    def on_loss(self, seq: int, now_us: int) -> None:
        raise NotImplementedError

    def on_tick(self, now_us: int) -> None:
        pass

    # -- queries ------------------------------------------------------------

    def cwnd_packets(self) -> float:
        raise NotImplementedError

    def pacing_rate_pps(self) -> float:
        return 0.0

    def mode_name(self) -> str:
        return ""

    # -- helpers for subclasses ----------------------------------------------

    def _accept_ack(self, seq: int, rtt_us: int) -> bool:
        """Sequence/dup filtering plus smoothed-RTT upkeep; False for stale ACKs."""
        if seq <= self._last_seq:
            return False
        self._last_seq = seq
        if self._srtt_us == 0.0:
            self._srtt_us = float(rtt_us)
        else:
            self._srtt_us += (rtt_us - self._srtt_us) / 8.0
        return True

    def _is_loss_event(self, seq: int) -> bool:
        """Coalesce a burst of per-packet loss notifications into one event.

        Packets up to roughly one window past the highest ACKed sequence were
        already in flight when the window was reduced; their losses belong to
        the same event.
        """
        if seq <= self._recovery_exit_seq:
            return False
        window = max(1, int(math.ceil(self.cwnd_packets())))
        self._recovery_exit_seq = max(self._last_seq, seq) + window
        return True

    def _clamp_cwnd(self, cwnd: float) -> float:
        return min(cwnd, float(self.params["max_cwnd"]))

    @property
    def srtt_us(self) -> float:
        return self._srtt_us if self._srtt_us > 0 else float(self.params["initial_rtt_us"])


class SlidingMin:
    """Minimum over a trailing time window, via a monotonic deque."""

    def __init__(self, window_us: int):
        self.window_us = window_us
        self._q: deque = deque()  # (time_us, value), values increasing

    def push(self, now_us: int, value: float) -> None:
        q = self._q
        while q and q[-1][1] >= value:
            q.pop()
        q.append((now_us, value))
        lo = now_us - self.window_us
        while q and q[0][0] < lo:
            q.popleft()

    def current(self) -> Optional[float]:
        return self._q[0][1] if self._q else None


class SlidingMax:
    """Maximum over a trailing index window (e.g. round-trip counts)."""

    def __init__(self, window: int):
        self.window = window
        self._q: deque = deque()  # (index, value), values decreasing

    def push(self, index: int, value: float) -> None:
        q = self._q
        while q and q[-1][1] <= value:
            q.pop()
        q.append((index, value))
        lo = index - self.window
        while q and q[0][0] <= lo:
            q.popleft()

    def current(self) -> Optional[float]:
        return self._q[0][1] if self._q else None
