"""Run results: per-flow event logs plus their on-disk CSV form.

Every delivered packet is logged with its send time and the (deterministic)
time its ACK reaches the sender; receiver-side arrival is the ACK time minus
one propagation delay.  CSV emission is canonical (fixed column orders,
``repr``-exact floats) so identical runs produce byte-identical files.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from typing import List

import numpy as np


@dataclass
class FlowStats:
    flow_id: int
    protocol: str
    sent: int
    delivered: int
    dropped: int
    lost_detected: int
    inflight_end: int
    bytes_delivered: int


@dataclass
class RunResult:
    config: "ExperimentConfig"
    seed: int
    flows: List[FlowStats]
    # one entry per delivered packet, in delivery order
    d_flow: np.ndarray
    d_seq: np.ndarray
    d_sent_us: np.ndarray
    d_acked_us: np.ndarray
    # queue occupancy, sampled once per ms when it changes
    q_time_us: np.ndarray
    q_len: np.ndarray
    # controller decision log, sampled once per ms when it changes
    dec_time_us: np.ndarray
    dec_flow: np.ndarray
    dec_cwnd: np.ndarray
    dec_rate_pps: np.ndarray
    dec_mode: List[str]
    link_offers: int
    link_dropped: int
    link_delivered: int
    queue_end: int
    duration_us: int
    prop_delay_us: int
    packet_bytes: int
    capacity_bps: float  # trace average over the (looped) run window
    runtime_s: float
    core: str

    # -- derived views -------------------------------------------------------

    def arrival_us(self) -> np.ndarray:
        """Receiver-side arrival times of delivered packets."""
        return self.d_acked_us - self.prop_delay_us

    def flow_mask(self, flow_id: int) -> np.ndarray:
        return self.d_flow == flow_id

    def delay_samples_us(self, flow_id: int) -> np.ndarray:
        m = self.flow_mask(flow_id)
        return self.d_acked_us[m] - self.d_sent_us[m]

    # -- serialization ---------------------------------------------------------

    def write_dir(self, path: str) -> None:
        """Write delays/throughput/queue/decisions CSVs plus meta.json."""
        from ccbench import metrics  # local import to avoid a cycle

        os.makedirs(path, exist_ok=True)
        with open(os.path.join(path, "delays.csv"), "w", newline="") as fh:
            fh.write("flow,seq,sent_us,acked_us\n")
            for f, s, snt, ack in zip(
                self.d_flow, self.d_seq, self.d_sent_us, self.d_acked_us
            ):
                fh.write(f"{f},{s},{snt},{ack}\n")
        window = self.config.sampling_window_s
        with open(os.path.join(path, "throughput.csv"), "w", newline="") as fh:
            fh.write("flow,second,bits\n")
            for st in self.flows:
                series = metrics.throughput_series(self, st.flow_id, window)
                for k, bits in enumerate(series):
                    fh.write(f"{st.flow_id},{k * window:g},{bits}\n")
        with open(os.path.join(path, "queue.csv"), "w", newline="") as fh:
            fh.write("time_us,packets\n")
            for t, q in zip(self.q_time_us, self.q_len):
                fh.write(f"{t},{q}\n")
        with open(os.path.join(path, "decisions.csv"), "w", newline="") as fh:
            fh.write("time_us,flow,cwnd,pacing_rate_pps,mode\n")
            for t, f, c, r, mo in zip(
                self.dec_time_us, self.dec_flow, self.dec_cwnd, self.dec_rate_pps,
                self.dec_mode,
            ):
                fh.write(f"{t},{f},{c!r},{r!r},{mo}\n")
        meta = {
            "config": self.config.describe(),
            "seed": self.seed,
            "core": self.core,
            "capacity_bps": self.capacity_bps,
            "counters": {
                "link_offers": self.link_offers,
                "link_delivered": self.link_delivered,
                "link_dropped": self.link_dropped,
                "queue_end": self.queue_end,
            },
            "flows": [
                {
                    "flow": st.flow_id,
                    "protocol": st.protocol,
                    "sent": st.sent,
                    "delivered": st.delivered,
                    "dropped": st.dropped,
                    "lost_detected": st.lost_detected,
                    "inflight_end": st.inflight_end,
                    "bytes_delivered": st.bytes_delivered,
                }
                for st in self.flows
            ],
            "summary": [
                {
                    "flow": s.flow_id,
                    "protocol": s.protocol,
                    "mean_tput_bps": s.mean_throughput_bps,
                    "mean_delay_us": s.mean_delay_us,
                    "p95_delay_us": s.p95_delay_us,
                    "utilization": s.utilization,
                    "drops": s.drops,
                }
                for s in (
                    metrics.summarize_flow(self, st.flow_id) for st in self.flows
                )
            ],
        }
        with open(os.path.join(path, "meta.json"), "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")
