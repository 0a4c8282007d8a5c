"""Pure-Python simulation core.

One tick per millisecond; all per-tick work happens at the tick's start time
``t0 = m * 1000`` µs in a fixed phase order, so a compiled core following the
same order reproduces results bit for bit:

  1. ACKs whose return time falls on this tick, in delivery (FIFO) order.
     Each ACK updates the sender's smoothed RTT, advances gap-based loss
     detection (a skipped packet is declared lost after three later ACKs),
     and is forwarded to the controller.
  2. Per flow, ascending id: retransmission-timeout check (all outstanding
     packets presumed lost if no ACK progress for max(200 ms, 2 x srtt)),
     then the controller's clock tick.
  3. Per flow, ascending id: refresh cached cwnd/pacing decisions, then emit
     every send due at t0 (window-opened sends, plus paced sends whose clock
     falls inside microsecond t0).  Same-microsecond arrivals therefore hit
     the queue in flow-id, then sequence order.
  4. Link drain: release min(queue length, opportunities at m mod trace
     length) packets, all stamped egress t0; unused opportunities are lost.
     ACKs are scheduled 2 x propagation delay later.
  5. Paced sends strictly inside (t0, t0 + 1 ms), merged across flows by
     (microsecond, flow id); they meet the queue before the next drain.

Senders are bulk sources: they keep the window/pacing budget full forever.
Sequence numbers are never reused; a loss is recorded and fresh data is sent
instead, which keeps per-flow delivery order identical to send order.
"""

from __future__ import annotations

from array import array
from collections import deque

RTO_FLOOR_US = 200_000
DUP_ACK_THRESHOLD = 3  # the revealing ACK plus two more


class _FlowState:
    __slots__ = (
        "ctl", "start_ms", "next_seq", "outstanding", "gapped", "ack_idx",
        "srtt", "last_progress", "pace_ns", "interval_ns", "rate", "cwnd_eff",
        "sent", "delivered", "dropped", "lost",
        "log_cwnd", "log_rate", "log_mode",
    )

    def __init__(self, ctl, start_ms):
        self.ctl = ctl
        self.start_ms = start_ms
        self.next_seq = 0
        self.outstanding = deque()  # (seq, sent_us), seq ascending
        self.gapped = deque()       # (seq, ack_idx when first skipped)
        self.ack_idx = 0
        self.srtt = 0
        self.last_progress = start_ms * 1000
        self.pace_ns = start_ms * 1_000_000
        self.interval_ns = 0
        self.rate = 0.0
        self.cwnd_eff = 0.0
        self.sent = 0
        self.delivered = 0
        self.dropped = 0
        self.lost = 0
        self.log_cwnd = -1.0
        self.log_rate = -1.0
        self.log_mode = None

    def inflight(self):
        return len(self.outstanding) + len(self.gapped)


def simulate(
    counts,            # per-ms opportunity schedule (one trace period)
    trace_ms,          # schedule length in ms
    duration_ms,       # run length in ms
    prop_ms,           # one-way propagation delay in ms (>= 1)
    buffer_packets,    # -1 for infinite
    packet_bytes,
    controllers,       # one per flow
    start_ms_list,
    max_cwnd,
    log_decisions,
):
    n_flows = len(controllers)
    flows = [_FlowState(controllers[f], start_ms_list[f]) for f in range(n_flows)]
    prop_us = prop_ms * 1000
    ack_delay_us = 2 * prop_us

    queue = deque()     # (flow, seq, sent_us)
    pipeline = deque()  # (ack_tick_ms, flow, seq, sent_us)
    link_offers = 0
    link_dropped = 0
    link_delivered = 0

    d_flow = array("q")
    d_seq = array("q")
    d_sent = array("q")
    d_acked = array("q")
    q_time = array("q")
    q_len = array("q")
    dec_time = array("q")
    dec_flow = array("q")
    dec_cwnd = array("d")
    dec_rate = array("d")
    dec_mode = []
    last_qlen = -1

    counts = [int(c) for c in counts]

    def send(st, f, at_us):
        nonlocal link_offers, link_dropped
        seq = st.next_seq
        st.next_seq = seq + 1
        st.sent += 1
        if not st.outstanding and not st.gapped:
            # restart the retransmission timer when sending after idle
            st.last_progress = at_us
        st.outstanding.append((seq, at_us))
        link_offers += 1
        if 0 <= buffer_packets <= len(queue):
            st.dropped += 1
            link_dropped += 1
        else:
            queue.append((f, seq, at_us))
        if st.rate > 0.0:
            ns = at_us * 1000
            if st.pace_ns < ns:
                st.pace_ns = ns
            st.pace_ns += st.interval_ns

    for m in range(duration_ms):
        t0 = m * 1000

        # -- phase 1: ACK arrivals ----------------------------------------
        while pipeline and pipeline[0][0] == m:
            _, f, seq, sent_us = pipeline.popleft()
            st = flows[f]
            ctl = st.ctl
            rtt = t0 - sent_us
            if st.srtt == 0:
                st.srtt = rtt
            else:
                st.srtt += (rtt - st.srtt) >> 3
            st.last_progress = t0
            st.ack_idx += 1
            out = st.outstanding
            gapped = st.gapped
            while out and out[0][0] < seq:
                gapped.append((out.popleft()[0], st.ack_idx))
            if out and out[0][0] == seq:
                out.popleft()
            ctl.on_ack(seq, rtt, t0)
            matured = st.ack_idx - (DUP_ACK_THRESHOLD - 1)
            while gapped and gapped[0][1] <= matured:
                lost_seq = gapped.popleft()[0]
                st.lost += 1
                ctl.on_loss(lost_seq, t0)

        # -- phase 2: timeouts and controller clocks -----------------------
        for f in range(n_flows):
            st = flows[f]
            if m < st.start_ms:
                continue
            if st.outstanding or st.gapped:
                rto = st.srtt * 2
                if rto < RTO_FLOOR_US:
                    rto = RTO_FLOOR_US
                if t0 - st.last_progress >= rto:
                    for seq_, _ in st.gapped:
                        st.lost += 1
                        st.ctl.on_loss(seq_, t0)
                    for seq_, _ in st.outstanding:
                        st.lost += 1
                        st.ctl.on_loss(seq_, t0)
                    st.gapped.clear()
                    st.outstanding.clear()
                    st.last_progress = t0
            st.ctl.on_tick(t0)

        # -- phase 3: decision refresh and sends due at t0 ------------------
        for f in range(n_flows):
            st = flows[f]
            if m < st.start_ms:
                continue
            ctl = st.ctl
            cwnd = ctl.cwnd_packets()
            rate = ctl.pacing_rate_pps()
            st.cwnd_eff = cwnd if cwnd < max_cwnd else max_cwnd
            st.rate = rate
            if rate > 0.0:
                iv = int(1e9 / rate)
                st.interval_ns = iv if iv >= 1 else 1
            if log_decisions:
                mode = ctl.mode_name()
                if cwnd != st.log_cwnd or rate != st.log_rate or mode != st.log_mode:
                    st.log_cwnd = cwnd
                    st.log_rate = rate
                    st.log_mode = mode
                    dec_time.append(t0)
                    dec_flow.append(f)
                    dec_cwnd.append(cwnd)
                    dec_rate.append(rate)
                    dec_mode.append(mode)
            if rate > 0.0:
                limit_ns = (t0 + 1) * 1000
                while st.inflight() < st.cwnd_eff and st.pace_ns < limit_ns:
                    send(st, f, t0)
            else:
                while st.inflight() < st.cwnd_eff:
                    send(st, f, t0)

        # -- phase 4: drain on the trace schedule ---------------------------
        n = counts[m % trace_ms]
        qn = len(queue)
        if n > qn:
            n = qn
        if n:
            ack_tick = m + 2 * prop_ms
            for _ in range(n):
                f, seq, sent_us = queue.popleft()
                flows[f].delivered += 1
                d_flow.append(f)
                d_seq.append(seq)
                d_sent.append(sent_us)
                d_acked.append(t0 + ack_delay_us)
                pipeline.append((ack_tick, f, seq, sent_us))
            link_delivered += n
        qn = len(queue)
        if qn != last_qlen:
            last_qlen = qn
            q_time.append(t0)
            q_len.append(qn)

        # -- phase 5: paced sends inside the tick ---------------------------
        t1_us = t0 + 1000
        while True:
            best_us = t1_us
            best_f = -1
            for f in range(n_flows):
                st = flows[f]
                if m < st.start_ms or st.rate <= 0.0:
                    continue
                if st.inflight() >= st.cwnd_eff:
                    continue
                us = st.pace_ns // 1000
                if us < best_us:
                    best_us = us
                    best_f = f
            if best_f < 0:
                break
            send(flows[best_f], best_f, best_us)

    return {
        "d_flow": d_flow,
        "d_seq": d_seq,
        "d_sent": d_sent,
        "d_acked": d_acked,
        "q_time": q_time,
        "q_len": q_len,
        "dec_time": dec_time,
        "dec_flow": dec_flow,
        "dec_cwnd": dec_cwnd,
        "dec_rate": dec_rate,
        "dec_mode": dec_mode,
        "sent": [st.sent for st in flows],
        "delivered": [st.delivered for st in flows],
        "dropped": [st.dropped for st in flows],
        "lost": [st.lost for st in flows],
        "inflight_end": [st.inflight() for st in flows],
        "link_offers": link_offers,
        "link_dropped": link_dropped,
        "link_delivered": link_delivered,
        "queue_end": len(queue),
    }
