"""Rate controllers driven by per-monitor-interval utility measurements.

Both controllers pace at an explicit rate and re-decide once per monitor
interval (one smoothed RTT).  Because ACKs trail sends by one RTT, the
measurements collected during interval k+1 are attributed to the rate paced
during interval k.  Allegro hill-climbs with a fixed multiplicative step:
every rate change is exactly *(1 + step) or *(1 - step), sized by whether
utility improved.  Vivace estimates the utility gradient from a pair of
probe intervals (rate nudged up then down, order randomized per pair) and
moves along the gradient with confidence amplification.
"""

from __future__ import annotations

import math
from collections import deque

from ccbench.cc.base import CongestionController


class _IntervalStats:
    __slots__ = ("acked", "lost", "start_us", "end_us", "rtts", "times")

    def __init__(self, start_us: int):
        self.start_us = start_us
        self.end_us = start_us
        self.acked = 0
        self.lost = 0
        self.rtts: list = []
        self.times: list = []

    @property
    def loss_rate(self) -> float:
        seen = self.acked + self.lost
        return self.lost / seen if seen else 0.0

    @property
    def goodput_pps(self) -> float:
        span = self.end_us - self.start_us
        return self.acked * 1e6 / span if span > 0 else 0.0

    @property
    def rtt_gradient(self) -> float:
        """Queue-growth estimate in seconds per second.

        The bottleneck releases packets on millisecond marks, so raw RTT
        samples carry a sawtooth of up to one ms; the per-half minima cancel
        most of it and a deadband of one quantum over the measurement span
        absorbs the rest.  Sustained overshoot grows the queue (and the RTT,
        and with it the interval length), so a real signal escapes the
        deadband within a few intervals.
        """
        n = len(self.rtts)
        if n < 4:
            return 0.0
        half = n // 2
        lo_first = min(self.rtts[:half])
        lo_second = min(self.rtts[half:])
        t_first = sum(self.times[:half]) / half
        t_second = sum(self.times[half:]) / (n - half)
        spacing = t_second - t_first
        if spacing <= 0:
            return 0.0
        grad = (lo_second - lo_first) / spacing
        deadband = 1000.0 / spacing  # one ms release quantum over the span
        return 0.0 if abs(grad) < deadband else grad


class MonitorIntervalController(CongestionController):
    """Pacing plus lag-aware measurement scaffolding for the rate controllers."""

    PARAM_DEFAULTS = {"min_rate_pps": 2.0, "cwnd_headroom": 2.0}

    def __init__(self, params=None, seed=None):
        super().__init__(params, seed)
        initial_rtt = float(self.params["initial_rtt_us"])
        self.rate_pps = float(self.params["initial_cwnd"]) * 1e6 / initial_rtt
        self._mi: _IntervalStats | None = None
        self._mi_start_us = -1
        # (tag, rate) of intervals already paced whose ACKs are still in flight
        self._pending: deque = deque()

    def on_ack(self, seq, rtt_us, now_us):
        if not self._accept_ack(seq, rtt_us):
            return
        mi = self._mi
        if mi is not None:
            mi.acked += 1
            mi.rtts.append(rtt_us)
            mi.times.append(now_us)

    def on_loss(self, seq, now_us):
        if self._mi is not None:
            self._mi.lost += 1

    def on_tick(self, now_us):
        if self._mi_start_us < 0:
            self._mi_start_us = now_us
            self._mi = _IntervalStats(now_us)
            self._pending.append(self._next_action(now_us))
            return
        if now_us - self._mi_start_us < self.srtt_us:
            return
        finished = self._mi
        finished.end_us = now_us
        # ACKs seen in the just-finished interval belong to the sends of the
        # interval before it, hence attribution lags the action queue by two.
        if len(self._pending) >= 2:
            tag, rate = self._pending.popleft()
            self._on_measurement(tag, rate, finished, now_us)
        self._pending.append(self._next_action(now_us))
        self._mi_start_us = now_us
        self._mi = _IntervalStats(now_us)

    def _next_action(self, now_us: int):
        """Pick (tag, rate) for the interval about to run; sets ``rate_pps``."""
        raise NotImplementedError

    def _on_measurement(self, tag, rate_pps, stats: _IntervalStats, now_us: int):
        raise NotImplementedError

    def _set_rate(self, rate_pps: float) -> float:
        self.rate_pps = max(float(self.params["min_rate_pps"]), rate_pps)
        return self.rate_pps

    def cwnd_packets(self):
        # pacing does the control work; the window is a safety backstop
        cap = self.params["cwnd_headroom"] * self.rate_pps * self.srtt_us / 1e6
        return max(4.0, cap)

    def pacing_rate_pps(self):
        return self.rate_pps


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


class Allegro(MonitorIntervalController):
    protocol = "allegro"
    PARAM_DEFAULTS = dict(MonitorIntervalController.PARAM_DEFAULTS)
    PARAM_DEFAULTS.update({
        "step": 0.05,
        "sigmoid_alpha": 100.0,
        "loss_threshold": 0.05,
    })

    def __init__(self, params=None, seed=None):
        super().__init__(params, seed)
        self._prev_utility = None
        self._prev_rate = None
        self._direction = 1

    def _utility(self, rate_pps: float, stats: _IntervalStats) -> float:
        # throughput term gated by a loss sigmoid; loss-free intervals score
        # exactly the attempted rate, so the climb is noise-free until the
        # bottleneck starts dropping
        loss = stats.loss_rate
        gate = _sigmoid(
            -self.params["sigmoid_alpha"] * (loss - self.params["loss_threshold"])
        )
        return rate_pps * (1.0 - loss) * gate - rate_pps * loss

    def _next_action(self, now_us):
        # one fixed-step move per interval; the decision below retunes direction
        return "step", self.rate_pps

    def _on_measurement(self, tag, rate_pps, stats, now_us):
        if stats.acked == 0 and stats.lost == 0:
            return  # nothing observed; hold course
        utility = self._utility(rate_pps, stats)
        if self._prev_utility is not None and rate_pps != self._prev_rate:
            # follow the sign of the measured utility slope; robust to the
            # measurement lag, unlike comparing raw consecutive utilities
            slope = (utility - self._prev_utility) / (rate_pps - self._prev_rate)
            if slope > 0:
                self._direction = 1
            elif slope < 0:
                self._direction = -1
        self._prev_utility = utility
        self._prev_rate = rate_pps
        self._set_rate(self.rate_pps * (1.0 + self._direction * self.params["step"]))

    def mode_name(self):
        return "climb" if self._direction > 0 else "descend"


class Vivace(MonitorIntervalController):
    protocol = "vivace"
    PARAM_DEFAULTS = dict(MonitorIntervalController.PARAM_DEFAULTS)
    PARAM_DEFAULTS.update({
        "exponent": 0.9,
        "rtt_coef": 900.0,
        "loss_coef": 11.35,
        "probe_frac": 0.05,
        "step_mbps": 0.5,
        "max_step_frac": 0.3,
        "confidence_cap": 8.0,
    })

    def __init__(self, params=None, seed=None):
        super().__init__(params, seed)
        self._base_rate = self.rate_pps
        self._cycle = 0  # 0: pace high probe, 1: pace low probe, 2: pace base
        self._up_first = True
        self._u_first = 0.0
        self._u_second = 0.0
        self._confidence = 1.0
        self._last_sign = 0

    def _mbps(self, rate_pps: float) -> float:
        return rate_pps * self.params["packet_bytes"] * 8 / 1e6

    def _utility(self, rate_pps: float, stats: _IntervalStats) -> float:
        x = self._mbps(rate_pps)
        rtt_grad = max(0.0, stats.rtt_gradient)
        return (
            x ** self.params["exponent"]
            - self.params["rtt_coef"] * x * rtt_grad
            - self.params["loss_coef"] * x * stats.loss_rate
        )

    def _probe_pair(self):
        frac = self.params["probe_frac"]
        hi = self._base_rate * (1.0 + frac)
        lo = self._base_rate * (1.0 - frac)
        return (hi, lo) if self._up_first else (lo, hi)

    def _next_action(self, now_us):
        if self._cycle == 0:
            self._up_first = self._rng.random() < 0.5
            self._cycle = 1
            return "probe1", self._set_rate(self._probe_pair()[0])
        if self._cycle == 1:
            self._cycle = 2
            return "probe2", self._set_rate(self._probe_pair()[1])
        self._cycle = 0
        return "base", self._set_rate(self._base_rate)

    def _on_measurement(self, tag, rate_pps, stats, now_us):
        if tag == "probe1":
            self._u_first = self._utility(rate_pps, stats)
            return
        if tag != "probe2":
            return
        self._u_second = self._utility(rate_pps, stats)
        first, second = self._probe_pair()
        if self._up_first:
            u_hi, u_lo, r_hi, r_lo = self._u_first, self._u_second, first, second
        else:
            u_hi, u_lo, r_hi, r_lo = self._u_second, self._u_first, second, first
        dr_mbps = self._mbps(r_hi) - self._mbps(r_lo)
        gradient = (u_hi - u_lo) / dr_mbps if dr_mbps > 0 else 0.0
        sign = 1 if gradient > 0 else (-1 if gradient < 0 else 0)
        if sign != 0 and sign == self._last_sign:
            self._confidence = min(self._confidence * 2.0, self.params["confidence_cap"])
        else:
            self._confidence = 1.0
        self._last_sign = sign

        delta_mbps = self.params["step_mbps"] * self._confidence * gradient
        cap = self.params["max_step_frac"] * self._mbps(self._base_rate)
        delta_mbps = max(-cap, min(cap, delta_mbps))
        bits_per_packet = self.params["packet_bytes"] * 8
        self._base_rate = max(
            float(self.params["min_rate_pps"]),
            self._base_rate + delta_mbps * 1e6 / bits_per_packet,
        )

    def mode_name(self):
        return ("probe_hi", "probe_lo", "move")[self._cycle]
