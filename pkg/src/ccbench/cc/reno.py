"""Classic AIMD controller: slow start plus additive-increase congestion avoidance."""

from __future__ import annotations

from ccbench.cc.base import CongestionController


class Reno(CongestionController):
    protocol = "reno"
    PARAM_DEFAULTS = {"ssthresh": float("inf"), "min_cwnd": 1.0}

    def __init__(self, params=None, seed=None):
        super().__init__(params, seed)
        self.cwnd = float(self.params["initial_cwnd"])
        self.ssthresh = float(self.params["ssthresh"])

    def on_ack(self, seq, rtt_us, now_us):
        if not self._accept_ack(seq, rtt_us):
            return
        if self.cwnd < self.ssthresh:
            self.cwnd += 1.0
        else:
            self.cwnd += 1.0 / self.cwnd
        self.cwnd = self._clamp_cwnd(self.cwnd)

    def on_loss(self, seq, now_us):
        if not self._is_loss_event(seq):
            return
        self.cwnd = max(float(self.params["min_cwnd"]), self.cwnd / 2.0)
        self.ssthresh = self.cwnd

    def cwnd_packets(self):
        return self.cwnd

    def mode_name(self):
        return "slow_start" if self.cwnd < self.ssthresh else "avoidance"
