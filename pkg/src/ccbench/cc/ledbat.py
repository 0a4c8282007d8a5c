"""Scavenger controller holding queuing delay at a fixed target.

A linear controller moves the window proportionally to how far the measured
queuing delay (RTT minus a base-delay estimate) sits from the target.  The
base delay is re-measured by periodic slowdowns: the window collapses to the
minimum for two round trips so the queue drains and a clean sample can be
taken, after which the linear ramp starts over.  The slowdowns are what make
the protocol yield capacity to competing traffic.
"""

from __future__ import annotations

from collections import deque

from ccbench.cc.base import CongestionController


class Ledbat(CongestionController):
    protocol = "ledbat"
    PARAM_DEFAULTS = {
        "target_ms": 25.0,
        "gain": 1.0,
        "min_cwnd": 2.0,
        "slowdown_interval_us": 5_000_000,
        "current_filter": 4,  # min over this many recent RTT samples
    }

    def __init__(self, params=None, seed=None):
        super().__init__(params, seed)
        self.cwnd = float(self.params["initial_cwnd"])
        self.base_delay_us = float("inf")
        self._recent = deque(maxlen=int(self.params["current_filter"]))
        self._slow_start = True
        self._in_slowdown = False
        self._slowdown_ref_us = -1
        self._slowdown_start_us = 0
        self._slowdown_min_us = float("inf")

    def on_ack(self, seq, rtt_us, now_us):
        if not self._accept_ack(seq, rtt_us):
            return
        if self._slowdown_ref_us < 0:
            self._slowdown_ref_us = now_us
        if rtt_us < self.base_delay_us:
            self.base_delay_us = float(rtt_us)
        self._recent.append(rtt_us)
        if self._in_slowdown:
            self._slowdown_min_us = min(self._slowdown_min_us, float(rtt_us))
            return

        target_us = self.params["target_ms"] * 1000.0
        current_us = min(self._recent)
        queuing_us = max(0.0, current_us - self.base_delay_us)
        if self._slow_start:
            if queuing_us < 0.5 * target_us:
                self.cwnd = self._clamp_cwnd(self.cwnd + 1.0)
                return
            # halve once on exit so the doubling overshoot drains immediately
            self._slow_start = False
            self.cwnd = max(float(self.params["min_cwnd"]), self.cwnd / 2.0)
        off_target = (target_us - queuing_us) / target_us
        self.cwnd += self.params["gain"] * off_target / self.cwnd
        self.cwnd = max(float(self.params["min_cwnd"]), self._clamp_cwnd(self.cwnd))

    def on_loss(self, seq, now_us):
        if not self._is_loss_event(seq):
            return
        self.cwnd = max(float(self.params["min_cwnd"]), self.cwnd / 2.0)
        self._slow_start = False

    def on_tick(self, now_us):
        if self._slowdown_ref_us < 0:
            return
        if not self._in_slowdown:
            if now_us - self._slowdown_ref_us >= self.params["slowdown_interval_us"]:
                self._in_slowdown = True
                self._slowdown_start_us = now_us
                self._slowdown_min_us = float("inf")
                self.cwnd = float(self.params["min_cwnd"])
                self._slow_start = False
        else:
            if now_us - self._slowdown_start_us >= 2 * self.srtt_us:
                if self._slowdown_min_us < float("inf"):
                    self.base_delay_us = self._slowdown_min_us
                self._in_slowdown = False
                self._slowdown_ref_us = now_us

    def cwnd_packets(self):
        return self.cwnd

    def mode_name(self):
        if self._in_slowdown:
            return "slowdown"
        return "slow_start" if self._slow_start else "linear"
