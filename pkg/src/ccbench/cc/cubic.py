"""Cubic window growth around the last loss point.

After a loss the window drops to beta * w_max and then follows
``w_max + C * (t - K)^3`` with ``K = cbrt(w_max * (1 - beta) / C)``, giving
the concave approach / convex probe shape of the deployed algorithm.
"""

from __future__ import annotations

import math

from ccbench.cc.base import CongestionController


class Cubic(CongestionController):
    protocol = "cubic"
    PARAM_DEFAULTS = {
        "c": 0.4,          # packets per second cubed
        "beta": 0.7,
        "ssthresh": float("inf"),
        "min_cwnd": 1.0,
    }

    def __init__(self, params=None, seed=None):
        super().__init__(params, seed)
        self.cwnd = float(self.params["initial_cwnd"])
        self.ssthresh = float(self.params["ssthresh"])
        self.w_max = 0.0
        self.k = 0.0
        self.epoch_start_us = -1

    def on_ack(self, seq, rtt_us, now_us):
        if not self._accept_ack(seq, rtt_us):
            return
        if self.cwnd < self.ssthresh:
            self.cwnd = self._clamp_cwnd(self.cwnd + 1.0)
            return
        c = self.params["c"]
        if self.epoch_start_us < 0:
            self.epoch_start_us = now_us
            if self.cwnd < self.w_max:
                self.k = ((self.w_max - self.cwnd) / c) ** (1.0 / 3.0)
            else:
                self.k = 0.0
                self.w_max = self.cwnd
        t = (now_us - self.epoch_start_us) / 1e6
        target = self.w_max + c * (t - self.k) ** 3
        if target > self.cwnd:
            self.cwnd += (target - self.cwnd) / self.cwnd
        else:
            # inside the plateau: probe gently instead of stalling
            self.cwnd += 0.01 / self.cwnd
        self.cwnd = self._clamp_cwnd(self.cwnd)

    def on_loss(self, seq, now_us):
        if not self._is_loss_event(seq):
            return
        beta = self.params["beta"]
        self.w_max = self.cwnd
        self.cwnd = max(float(self.params["min_cwnd"]), self.cwnd * beta)
        self.ssthresh = self.cwnd
        self.epoch_start_us = -1

    def cwnd_packets(self):
        return self.cwnd

    def mode_name(self):
        return "slow_start" if self.cwnd < self.ssthresh else "cubic"
