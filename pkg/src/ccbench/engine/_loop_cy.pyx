# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled simulation core.

Mirrors ``_loop_py.simulate`` phase for phase (see that module for the tick
algorithm); the test suite holds the two cores to byte-identical output.
All time bookkeeping is integer microseconds/nanoseconds and the smoothed
RTT uses an arithmetic shift, so there is no floating-point divergence to
chase between the interpreted and compiled paths.
"""

from libc.stdlib cimport free, malloc
from libc.string cimport memcpy

import numpy as np

cdef long long RTO_FLOOR_US = 200_000
cdef long long DUP_ACK_EXTRA = 2  # losses mature two ACKs after the gap is revealed


cdef class _Ring:
    """FIFO ring of records, each ``width`` int64 fields."""
    cdef long long* buf
    cdef Py_ssize_t cap
    cdef Py_ssize_t head
    cdef Py_ssize_t count
    cdef int width

    def __cinit__(self, int width, Py_ssize_t cap0=64):
        self.width = width
        self.cap = cap0
        self.head = 0
        self.count = 0
        self.buf = <long long*>malloc(cap0 * width * sizeof(long long))
        if self.buf == NULL:
            raise MemoryError()

    def __dealloc__(self):
        if self.buf != NULL:
            free(self.buf)

    cdef void _grow(self):
        cdef Py_ssize_t newcap = self.cap * 2
        cdef long long* nb = <long long*>malloc(newcap * self.width * sizeof(long long))
        if nb == NULL:
            raise MemoryError()
        cdef Py_ssize_t i, idx
        for i in range(self.count):
            idx = (self.head + i) % self.cap
            memcpy(nb + i * self.width, self.buf + idx * self.width,
                   self.width * sizeof(long long))
        free(self.buf)
        self.buf = nb
        self.cap = newcap
        self.head = 0

    cdef inline long long* push(self):
        if self.count == self.cap:
            self._grow()
        cdef Py_ssize_t idx = (self.head + self.count) % self.cap
        self.count += 1
        return self.buf + idx * self.width

    cdef inline long long* front(self):
        return self.buf + self.head * self.width

    cdef inline long long* at(self, Py_ssize_t i):
        return self.buf + ((self.head + i) % self.cap) * self.width

    cdef inline void pop(self):
        self.head = (self.head + 1) % self.cap
        self.count -= 1

    cdef inline void clear(self):
        self.head = 0
        self.count = 0


cdef class _I64Vec:
    cdef long long* buf
    cdef Py_ssize_t cap
    cdef Py_ssize_t n

    def __cinit__(self, Py_ssize_t cap0=1024):
        self.cap = cap0
        self.n = 0
        self.buf = <long long*>malloc(cap0 * sizeof(long long))
        if self.buf == NULL:
            raise MemoryError()

    def __dealloc__(self):
        if self.buf != NULL:
            free(self.buf)

    cdef inline void append(self, long long v):
        cdef long long* nb
        if self.n == self.cap:
            self.cap *= 2
            nb = <long long*>malloc(self.cap * sizeof(long long))
            if nb == NULL:
                raise MemoryError()
            memcpy(nb, self.buf, self.n * sizeof(long long))
            free(self.buf)
            self.buf = nb
        self.buf[self.n] = v
        self.n += 1

    def to_numpy(self):
        arr = np.empty(self.n, dtype=np.int64)
        cdef long long[::1] mv = arr
        if self.n:
            memcpy(&mv[0], self.buf, self.n * sizeof(long long))
        return arr


cdef class _F64Vec:
    cdef double* buf
    cdef Py_ssize_t cap
    cdef Py_ssize_t n

    def __cinit__(self, Py_ssize_t cap0=1024):
        self.cap = cap0
        self.n = 0
        self.buf = <double*>malloc(cap0 * sizeof(double))
        if self.buf == NULL:
            raise MemoryError()

    def __dealloc__(self):
        if self.buf != NULL:
            free(self.buf)

    cdef inline void append(self, double v):
        cdef double* nb
        if self.n == self.cap:
            self.cap *= 2
            nb = <double*>malloc(self.cap * sizeof(double))
            if nb == NULL:
                raise MemoryError()
            memcpy(nb, self.buf, self.n * sizeof(double))
            free(self.buf)
            self.buf = nb
        self.buf[self.n] = v
        self.n += 1

    def to_numpy(self):
        arr = np.empty(self.n, dtype=np.float64)
        cdef double[::1] mv = arr
        if self.n:
            memcpy(&mv[0], self.buf, self.n * sizeof(double))
        return arr


cdef class _Flow:
    cdef object ctl
    cdef object on_ack_m, on_loss_m, on_tick_m, cwnd_m, rate_m, mode_m
    cdef long long start_ms, next_seq, ack_idx, srtt, last_progress
    cdef long long pace_ns, interval_ns
    cdef long long sent, delivered, dropped, lost
    cdef double rate, cwnd_eff, log_cwnd, log_rate
    cdef object log_mode
    cdef _Ring outstanding  # (seq, sent_us)
    cdef _Ring gapped       # (seq, ack_idx at first skip)

    def __init__(self, ctl, long long start_ms):
        self.ctl = ctl
        self.on_ack_m = ctl.on_ack
        self.on_loss_m = ctl.on_loss
        self.on_tick_m = ctl.on_tick
        self.cwnd_m = ctl.cwnd_packets
        self.rate_m = ctl.pacing_rate_pps
        self.mode_m = ctl.mode_name
        self.start_ms = start_ms
        self.next_seq = 0
        self.ack_idx = 0
        self.srtt = 0
        self.last_progress = start_ms * 1000
        self.pace_ns = start_ms * 1_000_000
        self.interval_ns = 0
        self.sent = 0
        self.delivered = 0
        self.dropped = 0
        self.lost = 0
        self.rate = 0.0
        self.cwnd_eff = 0.0
        self.log_cwnd = -1.0
        self.log_rate = -1.0
        self.log_mode = None
        self.outstanding = _Ring(2)
        self.gapped = _Ring(2)

    cdef inline long long inflight(self):
        return self.outstanding.count + self.gapped.count


cdef inline void _send(
    _Flow st,
    long long f,
    long long at_us,
    _Ring queue,
    long long buffer_packets,
    long long* link_offers,
    long long* link_dropped,
):
    cdef long long seq = st.next_seq
    cdef long long ns
    cdef long long* rec
    st.next_seq = seq + 1
    st.sent += 1
    if st.outstanding.count == 0 and st.gapped.count == 0:
        # restart the retransmission timer when sending after idle
        st.last_progress = at_us
    rec = st.outstanding.push()
    rec[0] = seq
    rec[1] = at_us
    link_offers[0] += 1
    if 0 <= buffer_packets and buffer_packets <= queue.count:
        st.dropped += 1
        link_dropped[0] += 1
    else:
        rec = queue.push()
        rec[0] = f
        rec[1] = seq
        rec[2] = at_us
    if st.rate > 0.0:
        ns = at_us * 1000
        if st.pace_ns < ns:
            st.pace_ns = ns
        st.pace_ns += st.interval_ns


def simulate(
    counts,
    long long trace_ms,
    long long duration_ms,
    long long prop_ms,
    long long buffer_packets,
    long long packet_bytes,
    controllers,
    start_ms_list,
    double max_cwnd,
    bint log_decisions,
):
    cdef int[::1] sched = np.ascontiguousarray(counts, dtype=np.int32)
    cdef Py_ssize_t n_flows = len(controllers)
    cdef list flows = [
        _Flow(controllers[f], start_ms_list[f]) for f in range(n_flows)
    ]

    cdef long long prop_us = prop_ms * 1000
    cdef long long ack_delay_us = 2 * prop_us

    cdef _Ring queue = _Ring(3, 1024)     # (flow, seq, sent_us)
    cdef _Ring pipeline = _Ring(4, 1024)  # (ack_tick, flow, seq, sent_us)
    cdef long long link_offers = 0
    cdef long long link_dropped = 0
    cdef long long link_delivered = 0

    cdef _I64Vec d_flow = _I64Vec(65536)
    cdef _I64Vec d_seq = _I64Vec(65536)
    cdef _I64Vec d_sent = _I64Vec(65536)
    cdef _I64Vec d_acked = _I64Vec(65536)
    cdef _I64Vec q_time = _I64Vec()
    cdef _I64Vec q_len = _I64Vec()
    cdef _I64Vec dec_time = _I64Vec()
    cdef _I64Vec dec_flow = _I64Vec()
    cdef _F64Vec dec_cwnd = _F64Vec()
    cdef _F64Vec dec_rate = _F64Vec()
    cdef list dec_mode = []
    cdef long long last_qlen = -1

    cdef long long m, t0, t1_ns, rtt, seq, sent_us, lost_seq, ack_tick
    cdef long long n, qn, i, rto, best_us, us, iv, matured
    cdef long long f, best_f
    cdef _Flow st
    cdef long long* rec
    cdef double cwnd, rate
    cdef object mode

    for m in range(duration_ms):
        t0 = m * 1000

        # -- phase 1: ACK arrivals ----------------------------------------
        while pipeline.count > 0 and pipeline.front()[0] == m:
            rec = pipeline.front()
            f = rec[1]
            seq = rec[2]
            sent_us = rec[3]
            pipeline.pop()
            st = <_Flow>flows[f]
            rtt = t0 - sent_us
            if st.srtt == 0:
                st.srtt = rtt
            else:
                st.srtt += (rtt - st.srtt) >> 3
            st.last_progress = t0
            st.ack_idx += 1
            while st.outstanding.count > 0 and st.outstanding.front()[0] < seq:
                lost_seq = st.outstanding.front()[0]
                st.outstanding.pop()
                rec = st.gapped.push()
                rec[0] = lost_seq
                rec[1] = st.ack_idx
            if st.outstanding.count > 0 and st.outstanding.front()[0] == seq:
                st.outstanding.pop()
            st.on_ack_m(seq, rtt, t0)
            matured = st.ack_idx - DUP_ACK_EXTRA
            while st.gapped.count > 0 and st.gapped.front()[1] <= matured:
                lost_seq = st.gapped.front()[0]
                st.gapped.pop()
                st.lost += 1
                st.on_loss_m(lost_seq, t0)

        # -- phase 2: timeouts and controller clocks -----------------------
        for f in range(n_flows):
            st = <_Flow>flows[f]
            if m < st.start_ms:
                continue
            if st.outstanding.count > 0 or st.gapped.count > 0:
                rto = st.srtt * 2
                if rto < RTO_FLOOR_US:
                    rto = RTO_FLOOR_US
                if t0 - st.last_progress >= rto:
                    for i in range(st.gapped.count):
                        st.lost += 1
                        st.on_loss_m(st.gapped.at(i)[0], t0)
                    for i in range(st.outstanding.count):
                        st.lost += 1
                        st.on_loss_m(st.outstanding.at(i)[0], t0)
                    st.gapped.clear()
                    st.outstanding.clear()
                    st.last_progress = t0
            st.on_tick_m(t0)

        # -- phase 3: decision refresh and sends due at t0 ------------------
        for f in range(n_flows):
            st = <_Flow>flows[f]
            if m < st.start_ms:
                continue
            cwnd = st.cwnd_m()
            rate = st.rate_m()
            st.cwnd_eff = cwnd if cwnd < max_cwnd else max_cwnd
            st.rate = rate
            if rate > 0.0:
                iv = <long long>(1e9 / rate)
                st.interval_ns = iv if iv >= 1 else 1
            if log_decisions:
                mode = st.mode_m()
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
                t1_ns = (t0 + 1) * 1000
                while st.inflight() < st.cwnd_eff and st.pace_ns < t1_ns:
                    _send(st, f, t0, queue, buffer_packets,
                          &link_offers, &link_dropped)
            else:
                while st.inflight() < st.cwnd_eff:
                    _send(st, f, t0, queue, buffer_packets,
                          &link_offers, &link_dropped)

        # -- phase 4: drain on the trace schedule ---------------------------
        n = sched[m % trace_ms]
        qn = queue.count
        if n > qn:
            n = qn
        if n > 0:
            ack_tick = m + 2 * prop_ms
            for i in range(n):
                rec = queue.front()
                f = rec[0]
                seq = rec[1]
                sent_us = rec[2]
                queue.pop()
                (<_Flow>flows[f]).delivered += 1
                d_flow.append(f)
                d_seq.append(seq)
                d_sent.append(sent_us)
                d_acked.append(t0 + ack_delay_us)
                rec = pipeline.push()
                rec[0] = ack_tick
                rec[1] = f
                rec[2] = seq
                rec[3] = sent_us
            link_delivered += n
        qn = queue.count
        if qn != last_qlen:
            last_qlen = qn
            q_time.append(t0)
            q_len.append(qn)

        # -- phase 5: paced sends inside the tick ---------------------------
        while True:
            best_us = t0 + 1000
            best_f = -1
            for f in range(n_flows):
                st = <_Flow>flows[f]
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
            _send(<_Flow>flows[best_f], best_f, best_us, queue, buffer_packets,
                  &link_offers, &link_dropped)

    return {
        "d_flow": d_flow.to_numpy(),
        "d_seq": d_seq.to_numpy(),
        "d_sent": d_sent.to_numpy(),
        "d_acked": d_acked.to_numpy(),
        "q_time": q_time.to_numpy(),
        "q_len": q_len.to_numpy(),
        "dec_time": dec_time.to_numpy(),
        "dec_flow": dec_flow.to_numpy(),
        "dec_cwnd": dec_cwnd.to_numpy(),
        "dec_rate": dec_rate.to_numpy(),
        "dec_mode": dec_mode,
        "sent": [(<_Flow>flows[f]).sent for f in range(n_flows)],
        "delivered": [(<_Flow>flows[f]).delivered for f in range(n_flows)],
        "dropped": [(<_Flow>flows[f]).dropped for f in range(n_flows)],
        "lost": [(<_Flow>flows[f]).lost for f in range(n_flows)],
        "inflight_end": [(<_Flow>flows[f]).inflight() for f in range(n_flows)],
        "link_offers": link_offers,
        "link_dropped": link_dropped,
        "link_delivered": link_delivered,
        "queue_end": queue.count,
    }
