import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ccbench.errors import (
    DecreasingTimestamp,
    EmptyLog,
    EmptyTrace,
    NonNumericLine,
)
from ccbench.trace import (
    ChannelTrace,
    ProbeLog,
    average_capacity,
    capacity_over_window,
    constant_trace,
    onoff_trace,
    parse_trace,
    probe_log_to_trace,
    serialize_trace,
    step_trace,
    trace_from_counts,
)

PACKET_BITS = 1500 * 8


class TestParse:
    def test_basic(self):
        tr = parse_trace("0\n0\n1\n")
        assert list(tr.opportunities) == [0, 0, 1]
        assert tr.duration_ms == 2

    def test_blank_lines_ignored(self):
        tr = parse_trace("\n3\n\n5\n\n")
        assert list(tr.opportunities) == [3, 5]
        assert tr.duration_ms == 6

    def test_decreasing_reports_line(self):
        with pytest.raises(DecreasingTimestamp) as info:
            parse_trace("5\n3\n")
        assert info.value.line_no == 2

    def test_non_numeric_reports_line(self):
        with pytest.raises(NonNumericLine) as info:
            parse_trace("1\nx\n")
        assert info.value.line_no == 2
        with pytest.raises(NonNumericLine):
            parse_trace("-1\n")

    def test_empty_rejected(self):
        with pytest.raises(EmptyTrace):
            parse_trace("")
        with pytest.raises(EmptyTrace):
            parse_trace("\n\n")

    def test_bulk_constant_file(self):
        # 60k lines, 4 per ms over 15 s, built independently of the generator
        lines = "\n".join(str(ms) for ms in range(15000) for _ in range(4))
        tr = parse_trace(lines + "\n")
        assert tr.n_opportunities == 60000
        assert tr.duration_ms == 15000
        assert tr == constant_trace(48, 15000)


class TestSerialize:
    def test_inverse_of_parse(self):
        tr = trace_from_counts([2, 1])
        assert serialize_trace(tr) == "0\n0\n1\n"

    def test_empty_refused(self):
        tr = constant_trace(0, 1000)
        with pytest.raises(EmptyTrace):
            serialize_trace(tr)

    @settings(max_examples=200, deadline=None)
    @given(
        st.lists(st.integers(min_value=0, max_value=50), min_size=1, max_size=200),
        st.integers(min_value=0, max_value=100),
    )
    def test_round_trip(self, deltas, extra):
        stamps = np.cumsum(deltas)
        tr = ChannelTrace(stamps, int(stamps[-1]) + 1, 1500)
        assert parse_trace(serialize_trace(tr)) == tr


class TestInvariants:
    def test_nondecreasing_required(self):
        with pytest.raises(ValueError):
            ChannelTrace(np.array([3, 1]), 10)

    def test_duration_must_cover(self):
        with pytest.raises(ValueError):
            ChannelTrace(np.array([5]), 5)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            ChannelTrace(np.array([-1]), 5)

    def test_immutable(self):
        tr = constant_trace(12, 100)
        with pytest.raises(ValueError):
            tr.opportunities[0] = 7


class TestProbeConversion:
    def test_binning(self):
        log = ProbeLog(np.array([400, 700, 1200]))
        tr = probe_log_to_trace(log)
        assert list(tr.opportunities) == [0, 0, 1]

    def test_single_arrival(self):
        tr = probe_log_to_trace(ProbeLog(np.array([0])))
        assert list(tr.opportunities) == [0]
        assert tr.duration_ms == 1

    def test_normalization(self):
        # same spacing, shifted origin: identical traces
        a = probe_log_to_trace(ProbeLog(np.array([0, 1500, 2500])))
        b = probe_log_to_trace(ProbeLog(np.array([7000, 8500, 9500])))
        assert a == b

    def test_empty_rejected(self):
        with pytest.raises(EmptyLog):
            probe_log_to_trace(ProbeLog(np.array([], dtype=np.int64)))

    def test_count_preserved(self):
        arrivals = np.cumsum(np.arange(1, 500) * 37)
        tr = probe_log_to_trace(ProbeLog(arrivals))
        assert tr.n_opportunities == arrivals.size

    def test_60s_250us_spacing_gives_48mbps(self):
        arrivals = np.arange(240_000, dtype=np.int64) * 250
        tr = probe_log_to_trace(ProbeLog(arrivals))
        # oracle: brute-force bin counter over the synthetic log
        bins = {}
        for t in arrivals:
            bins[t // 1000] = bins.get(t // 1000, 0) + 1
        assert set(bins.values()) == {4}
        assert tr.n_opportunities == 240_000
        assert average_capacity(tr) == pytest.approx(48e6, rel=0.005)

    def test_coarser_bins(self):
        log = ProbeLog(np.array([0, 4200, 11_000]))
        tr = probe_log_to_trace(log, bin_ms=5)
        assert list(tr.opportunities) == [0, 0, 10]
        assert tr.duration_ms == 15


class TestCapacity:
    def test_constant_48(self):
        assert average_capacity(constant_trace(48, 1000)) == 48e6

    def test_outage_zero(self):
        assert average_capacity(constant_trace(0, 1000)) == 0.0

    def test_gigabit_density(self):
        # ~1 Gbps needs ~83.3 opportunities per ms
        tr = constant_trace(1000, 1000)
        assert tr.n_opportunities / tr.duration_ms == pytest.approx(83.33, rel=0.01)

    def test_windowed_capacity_loops(self):
        tr = constant_trace(24, 1000)
        assert capacity_over_window(tr, 3000) == pytest.approx(24e6)
        assert capacity_over_window(tr, 1500) == pytest.approx(24e6, rel=0.01)


class TestGenerators:
    def test_constant_48_exact(self):
        tr = constant_trace(48, 1000)
        assert np.array_equal(tr.counts_per_ms(), np.full(1000, 4, dtype=np.int32))

    def test_fractional_rate_alternates(self):
        tr = constant_trace(18, 1000)
        counts = tr.counts_per_ms()
        assert tr.n_opportunities == 1500  # floor(rate * T / packet bits)
        assert set(counts.tolist()) == {1, 2}
        assert counts[:4].tolist() == [1, 2, 1, 2]

    def test_total_matches_floor_formula(self):
        for rate, dur in [(7.3, 997), (0.9, 5000), (133.7, 1234)]:
            tr = constant_trace(rate, dur)
            expected = int(round(rate * 1e6) * dur // (PACKET_BITS * 1000))
            assert tr.n_opportunities == expected

    @settings(max_examples=100, deadline=None)
    @given(
        st.floats(min_value=1.0, max_value=500.0, allow_nan=False),
        st.integers(min_value=200, max_value=5000),
    )
    def test_rate_accuracy_property(self, rate, dur):
        tr = constant_trace(rate, dur)
        if tr.n_opportunities >= 100:
            assert average_capacity(tr) == pytest.approx(rate * 1e6, rel=0.01)

    def test_step_segments(self):
        tr = step_trace([(48, 100), (12, 100)])
        counts = tr.counts_per_ms()
        assert counts[:100].sum() == 400
        assert counts[100:].sum() == 100
        assert tr.duration_ms == 200

    def test_onoff_windows(self):
        tr = onoff_trace(48, 100, 50, 300)
        counts = tr.counts_per_ms()
        assert counts[:100].sum() == 400
        assert counts[100:150].sum() == 0
        assert counts[150:250].sum() == 400
        assert counts[250:].sum() == 0

    def test_generated_traces_satisfy_invariants(self):
        for tr in (
            constant_trace(7.7, 333),
            step_trace([(5, 50), (0, 20), (95, 30)]),
            onoff_trace(20, 7, 3, 100),
        ):
            opps = tr.opportunities
            assert np.all(np.diff(opps) >= 0)
            if opps.size:
                assert opps[-1] < tr.duration_ms
