"""The pure and compiled cores must agree bit for bit.

Every scenario runs through both `simulate` implementations and the full
result surface is compared, including the CSV renderings.
"""

import filecmp

import numpy as np
import pytest

from ccbench.engine import ExperimentConfig, FlowSpec, run
from ccbench.engine.config import BufferSpec
from ccbench.engine.core import available_cores
from ccbench.trace import constant_trace, onoff_trace, step_trace

needs_compiled = pytest.mark.skipif(
    "compiled" not in available_cores(), reason="compiled core not built"
)

SCENARIOS = {
    "solo-cubic": ExperimentConfig(
        trace=constant_trace(48, 5000), flows=(FlowSpec.make("cubic"),), duration_s=8
    ),
    "bbr-vs-cubic-shallow": ExperimentConfig(
        trace=step_trace([(48, 1000), (16, 1000), (64, 1000)]),
        flows=(FlowSpec.make("bbr"), FlowSpec.make("cubic")),
        buffer=BufferSpec("bdp", 1),
        duration_s=9,
    ),
    "pcc-pair-seeded": ExperimentConfig(
        trace=constant_trace(30, 4000),
        flows=(FlowSpec.make("allegro"), FlowSpec.make("vivace")),
        buffer=BufferSpec("bdp", 5),
        duration_s=8,
        seed=77,
    ),
    "scavengers-outage": ExperimentConfig(
        trace=onoff_trace(24, 700, 300, 2000),
        flows=(FlowSpec.make("copa"), FlowSpec.make("ledbat")),
        buffer=BufferSpec("pkts", 40),
        duration_s=7,
    ),
    "trio-staggered": ExperimentConfig(
        trace=constant_trace(36, 3000),
        flows=(
            FlowSpec.make("reno"),
            FlowSpec.make("bbr", start_s=1.0),
            FlowSpec.make("vivace", start_s=2.0),
        ),
        duration_s=6,
        seed=5,
    ),
}


@needs_compiled
@pytest.mark.parametrize("name", sorted(SCENARIOS))
def test_cores_bit_identical(name):
    cfg = SCENARIOS[name]
    a = run(cfg, core="pure")
    b = run(cfg, core="compiled")
    for attr in (
        "d_flow", "d_seq", "d_sent_us", "d_acked_us",
        "q_time_us", "q_len", "dec_time_us", "dec_flow",
        "dec_cwnd", "dec_rate_pps",
    ):
        assert np.array_equal(getattr(a, attr), getattr(b, attr)), attr
    assert a.dec_mode == b.dec_mode
    assert a.queue_end == b.queue_end
    assert a.link_offers == b.link_offers
    assert a.link_dropped == b.link_dropped
    for fa, fb in zip(a.flows, b.flows):
        assert (fa.sent, fa.delivered, fa.dropped, fa.lost_detected) == (
            fb.sent, fb.delivered, fb.dropped, fb.lost_detected
        )


@needs_compiled
def test_csv_outputs_bit_identical(tmp_path):
    cfg = SCENARIOS["bbr-vs-cubic-shallow"]
    run(cfg, core="pure").write_dir(tmp_path / "pure")
    run(cfg, core="compiled").write_dir(tmp_path / "compiled")
    for name in ("delays.csv", "throughput.csv", "queue.csv", "decisions.csv"):
        assert filecmp.cmp(tmp_path / "pure" / name, tmp_path / "compiled" / name,
                           shallow=False), name
