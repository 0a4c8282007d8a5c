"""Model-based controller: windowed bottleneck-bandwidth and min-RTT estimates.

Four operating modes: STARTUP (exponential gain until the bandwidth estimate
plateaus), DRAIN (inverse gain to empty the startup queue), PROBE_BW (an
eight-phase pacing-gain cycle of 1.25, 0.75, then six unity phases, one
round-trip each), and PROBE_RTT (in-flight squeezed to four packets on a
10-second cadence to re-measure the propagation delay).  The congestion
window is capped at twice the estimated bandwidth-delay product outside
startup.
"""

from __future__ import annotations

import math

from ccbench.cc.base import CongestionController, SlidingMax

STARTUP = "startup"
DRAIN = "drain"
PROBE_BW = "probe_bw"
PROBE_RTT = "probe_rtt"

HIGH_GAIN = 2.885  # 2/ln(2)
PROBE_BW_GAINS = (1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0)


def bbr_target_cwnd(btlbw_pps: float, rtprop_s: float, gain: float) -> int:
    """Window target in packets: ceil(gain x bandwidth x propagation RTT)."""
    if btlbw_pps <= 0 or rtprop_s <= 0:
        raise ValueError("btlbw_pps and rtprop_s must be positive")
    return int(math.ceil(gain * btlbw_pps * rtprop_s))


class Bbr(CongestionController):
    protocol = "bbr"
    PARAM_DEFAULTS = {
        "cwnd_gain": 2.0,
        "startup_gain": HIGH_GAIN,
        "bw_window_rounds": 10,
        "probe_rtt_interval_us": 10_000_000,
        "probe_rtt_duration_us": 200_000,
        "min_cwnd": 4.0,
        "full_bw_growth": 1.25,
        "full_bw_rounds": 3,
    }

    def __init__(self, params=None, seed=None):
        super().__init__(params, seed)
        self.mode = STARTUP
        self._bw_filter = SlidingMax(int(self.params["bw_window_rounds"]))
        self.rtprop_us = 0.0
        self._round_start_us = -1
        self._round_acked = 0
        self._round_idx = 0
        self._full_bw = 0.0
        self._full_bw_count = 0
        self._full_bw_reached = False
        self._drain_start_us = 0
        self._phase_idx = 0
        self._phase_start_us = 0
        self._probe_rtt_ref_us = -1  # start of the 10 s cadence
        self._probe_rtt_start_us = 0
        self._probe_rtt_min_us = float("inf")
        self._last_rtt_us = 0.0

    # -- estimates ------------------------------------------------------------

    @property
    def btlbw_pps(self) -> float:
        return self._bw_filter.current() or 0.0

    def _bdp_packets(self) -> float:
        if self.btlbw_pps <= 0 or self.rtprop_us <= 0:
            return 0.0
        return self.btlbw_pps * self.rtprop_us / 1e6

    # -- callbacks --------------------------------------------------------------

    def on_ack(self, seq, rtt_us, now_us):
        if not self._accept_ack(seq, rtt_us):
            return
        self._last_rtt_us = float(rtt_us)
        if self._probe_rtt_ref_us < 0:
            self._probe_rtt_ref_us = now_us
        if self.rtprop_us <= 0 or rtt_us < self.rtprop_us:
            self.rtprop_us = float(rtt_us)
        if self.mode == PROBE_RTT and rtt_us < self._probe_rtt_min_us:
            self._probe_rtt_min_us = float(rtt_us)

        if self._round_start_us < 0:
            self._round_start_us = now_us
        self._round_acked += 1
        elapsed = now_us - self._round_start_us
        if elapsed >= self._srtt_us and elapsed > 0:
            sample = self._round_acked * 1e6 / elapsed
            self._round_idx += 1
            self._bw_filter.push(self._round_idx, sample)
            self._round_start_us = now_us
            self._round_acked = 0
            if self.mode == STARTUP:
                self._check_full_bw()

    def on_loss(self, seq, now_us):
        # loss is not treated as a congestion signal
        pass

    def on_tick(self, now_us):
        if self.mode == STARTUP and self._full_bw_reached:
            self.mode = DRAIN
            self._drain_start_us = now_us
        if self.mode == DRAIN:
            drained = self.rtprop_us > 0 and self._last_rtt_us <= 1.25 * self.rtprop_us
            if drained or now_us - self._drain_start_us >= 4 * self.srtt_us:
                self._enter_probe_bw(now_us)
        if self.mode == PROBE_BW:
            if now_us - self._phase_start_us >= max(self.rtprop_us, 1000.0):
                self._phase_idx = (self._phase_idx + 1) % len(PROBE_BW_GAINS)
                self._phase_start_us = now_us
        if (
            self.mode != PROBE_RTT
            and self._probe_rtt_ref_us >= 0
            and now_us - self._probe_rtt_ref_us >= self.params["probe_rtt_interval_us"]
        ):
            self.mode = PROBE_RTT
            self._probe_rtt_start_us = now_us
            self._probe_rtt_min_us = float("inf")
        elif self.mode == PROBE_RTT:
            duration = max(self.params["probe_rtt_duration_us"], self.srtt_us)
            if now_us - self._probe_rtt_start_us >= duration:
                if self._probe_rtt_min_us < float("inf"):
                    self.rtprop_us = self._probe_rtt_min_us
                self._probe_rtt_ref_us = now_us
                if self._full_bw_reached:
                    self._enter_probe_bw(now_us)
                else:
                    self.mode = STARTUP

    # -- mode helpers ------------------------------------------------------------

    def _check_full_bw(self):
        bw = self.btlbw_pps
        if bw >= self._full_bw * self.params["full_bw_growth"]:
            self._full_bw = bw
            self._full_bw_count = 0
            return
        self._full_bw_count += 1
        if self._full_bw_count >= self.params["full_bw_rounds"]:
            self._full_bw_reached = True

    def _enter_probe_bw(self, now_us):
        self.mode = PROBE_BW
        self._phase_idx = 0
        self._phase_start_us = now_us

    # -- queries -------------------------------------------------------------------

    def cwnd_packets(self):
        min_cwnd = float(self.params["min_cwnd"])
        if self.mode == PROBE_RTT:
            return min_cwnd
        bdp = self._bdp_packets()
        if bdp <= 0:
            return float(self.params["initial_cwnd"])
        gain = self.params["startup_gain"] if self.mode == STARTUP else self.params["cwnd_gain"]
        return max(min_cwnd, math.ceil(gain * bdp))

    def pacing_rate_pps(self):
        bw = self.btlbw_pps
        if bw <= 0:
            return 0.0
        if self.mode == STARTUP:
            gain = self.params["startup_gain"]
        elif self.mode == DRAIN:
            gain = 1.0 / self.params["startup_gain"]
        elif self.mode == PROBE_RTT:
            gain = 1.0
        else:
            gain = PROBE_BW_GAINS[self._phase_idx]
        return gain * bw

    def mode_name(self):
        return self.mode
