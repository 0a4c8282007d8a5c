"""Delay-based controller steering toward a target rate of 1/(delta * queuing delay).

Queuing delay is the excess of the standing RTT (minimum over the last
half-smoothed-RTT) above the minimum RTT estimate.  The window moves toward
the target by velocity/(delta * cwnd) per ACK, with the velocity doubling
after three round trips of consistent direction.
"""

from __future__ import annotations

from ccbench.cc.base import CongestionController, SlidingMin


class Copa(CongestionController):
    protocol = "copa"
    PARAM_DEFAULTS = {
        "delta": 0.5,
        "min_rtt_window_us": 10_000_000,
        "min_cwnd": 2.0,
    }

    def __init__(self, params=None, seed=None):
        super().__init__(params, seed)
        self.cwnd = float(self.params["initial_cwnd"])
        self._min_rtt = SlidingMin(int(self.params["min_rtt_window_us"]))
        self._standing = SlidingMin(int(self.params["initial_rtt_us"]) // 2)
        self.velocity = 1.0
        self._direction = 0
        self._same_direction_rtts = 0
        self._rtt_boundary_us = -1
        self._cwnd_at_boundary = 0.0
        self._slow_start = True

    def _target_rate_pps(self) -> float:
        standing = self._standing.current()
        min_rtt = self._min_rtt.current()
        if standing is None or min_rtt is None:
            return float("inf")
        queuing_us = standing - min_rtt
        if queuing_us <= 0:
            return float("inf")
        return 1e6 / (self.params["delta"] * queuing_us)

    def on_ack(self, seq, rtt_us, now_us):
        if not self._accept_ack(seq, rtt_us):
            return
        self._min_rtt.push(now_us, float(rtt_us))
        self._standing.window_us = max(1, int(self._srtt_us / 2))
        self._standing.push(now_us, float(rtt_us))

        standing = self._standing.current()
        target = self._target_rate_pps()
        current = self.cwnd * 1e6 / standing if standing else 0.0
        delta = self.params["delta"]

        if self._slow_start:
            if current < target:
                self.cwnd += 1.0  # doubles once per RTT
            else:
                self._slow_start = False
        if not self._slow_start:
            if current < target:
                self.cwnd += self.velocity / (delta * self.cwnd)
            else:
                self.cwnd -= self.velocity / (delta * self.cwnd)
                self.cwnd = max(float(self.params["min_cwnd"]), self.cwnd)
        self.cwnd = self._clamp_cwnd(self.cwnd)

        if self._rtt_boundary_us < 0:
            self._rtt_boundary_us = now_us
            self._cwnd_at_boundary = self.cwnd
        elif now_us - self._rtt_boundary_us >= self._srtt_us:
            direction = 1 if self.cwnd > self._cwnd_at_boundary else -1
            if direction == self._direction:
                self._same_direction_rtts += 1
                if self._same_direction_rtts >= 3:
                    self.velocity *= 2.0
            else:
                self._direction = direction
                self._same_direction_rtts = 0
                self.velocity = 1.0
            # keep per-RTT window change at most a doubling/halving
            self.velocity = min(self.velocity, max(1.0, delta * self.cwnd))
            self._rtt_boundary_us = now_us
            self._cwnd_at_boundary = self.cwnd

    def on_loss(self, seq, now_us):
        if not self._is_loss_event(seq):
            return
        self.cwnd = max(float(self.params["min_cwnd"]), self.cwnd / 2.0)
        self._slow_start = False

    def cwnd_packets(self):
        return self.cwnd

    def mode_name(self):
        return "slow_start" if self._slow_start else "steady"
