"""Analysis quantities: throughput/delay summaries, harm, fairness, significance.

All functions are pure and operate on immutable run results.  Harm compares a
flow's performance under competition against its solo performance; the
self-harm of a protocol against its own kind is the deployability threshold
the harm is judged against.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
from scipy import stats as sps

from ccbench.errors import (
    AllZero,
    DegenerateSamples,
    InsufficientRuns,
    UnknownFlow,
    ZeroBaseline,
)


class MetricKind(Enum):
    MORE_IS_BETTER = "more_is_better"   # e.g. throughput
    LESS_IS_BETTER = "less_is_better"   # e.g. delay


@dataclass(frozen=True)
class FlowSummary:
    flow_id: int
    protocol: str
    mean_throughput_bps: float
    utilization: float
    mean_delay_us: float
    p50_delay_us: float
    p95_delay_us: float
    p99_delay_us: float
    delivered_bytes: int
    drops: int


@dataclass(frozen=True)
class HarmBaseline:
    mean: float
    ci_lo: float
    ci_hi: float
    n: int


@dataclass(frozen=True)
class HarmReport:
    metric_kind: MetricKind
    solo: float
    competing: float
    harm_pct: float
    baseline: Optional[HarmBaseline] = None

    @property
    def zone(self) -> str:
        """Deployability zone: red once harm exceeds the baseline's upper CI."""
        if self.baseline is None:
            return "unknown"
        return "red" if self.harm_pct > self.baseline.ci_hi else "green"


@dataclass(frozen=True)
class SignificanceReport:
    p_value: float
    stars: str
    test_id: str
    n_a: int
    n_b: int


def throughput_series(result, flow_id: int, window_s: float = 1.0) -> np.ndarray:
    """Received bits per window, by receiver-side arrival time.

    The series spans every delivered packet (including those still crossing
    the propagation leg when the run ends), so its sum equals the flow's
    total delivered bits.
    """
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    if flow_id not in {st.flow_id for st in result.flows}:
        raise UnknownFlow(f"flow {flow_id} not in result")
    mask = result.d_flow == flow_id
    arrivals = (result.d_acked_us[mask] - result.prop_delay_us) / 1e6
    window_count = int(math.ceil(result.duration_us / 1e6 / window_s))
    if arrivals.size:
        window_count = max(window_count, int(arrivals.max() // window_s) + 1)
    bins = np.floor(arrivals / window_s).astype(np.int64)
    packets = np.bincount(bins, minlength=window_count)
    return packets * result.packet_bytes * 8


def mean_throughput_bps(result, flow_id: int) -> float:
    """Delivered bits per second over the run window (arrivals inside it)."""
    mask = result.d_flow == flow_id
    arrivals = result.d_acked_us[mask] - result.prop_delay_us
    inside = int(np.count_nonzero(arrivals < result.duration_us))
    return inside * result.packet_bytes * 8 / (result.duration_us / 1e6)


def summarize_flow(result, flow_id: int) -> FlowSummary:
    st = next((s for s in result.flows if s.flow_id == flow_id), None)
    if st is None:
        raise UnknownFlow(f"flow {flow_id} not in result")
    delays = result.delay_samples_us(flow_id)
    tput = mean_throughput_bps(result, flow_id)
    if delays.size:
        mean_d, p50, p95, p99 = (
            float(delays.mean()),
            float(np.percentile(delays, 50)),
            float(np.percentile(delays, 95)),
            float(np.percentile(delays, 99)),
        )
    else:
        mean_d = p50 = p95 = p99 = 0.0
    return FlowSummary(
        flow_id=flow_id,
        protocol=st.protocol,
        mean_throughput_bps=tput,
        utilization=tput / result.capacity_bps if result.capacity_bps > 0 else 0.0,
        mean_delay_us=mean_d,
        p50_delay_us=p50,
        p95_delay_us=p95,
        p99_delay_us=p99,
        delivered_bytes=st.bytes_delivered,
        drops=st.dropped,
    )


def harm(x: float, y: float, kind: MetricKind) -> float:
    """Percent harm to a flow whose solo performance was ``x`` and is now ``y``."""
    if x == 0:
        raise ZeroBaseline("solo performance is zero")
    if kind is MetricKind.MORE_IS_BETTER:
        return (x - y) / x * 100.0
    return (y - x) / x * 100.0


def harm_report(
    x: float, y: float, kind: MetricKind, baseline: Optional[HarmBaseline] = None
) -> HarmReport:
    return HarmReport(kind, x, y, harm(x, y, kind), baseline)


def self_harm_baseline(
    solo_values: Sequence[float],
    paired_values: Sequence[float],
    kind: MetricKind,
    confidence: float = 0.95,
) -> HarmBaseline:
    """Harm of each same-kind competing flow against the solo mean, with CI."""
    if len(solo_values) < 1 or len(paired_values) < 1:
        raise InsufficientRuns("need at least one solo and one paired value")
    solo_mean = float(np.mean(solo_values))
    harms = np.array([harm(solo_mean, y, kind) for y in paired_values])
    mean = float(harms.mean())
    n = harms.size
    if n < 2 or float(harms.std(ddof=1)) == 0.0:
        return HarmBaseline(mean, mean, mean, n)
    half = float(
        sps.t.ppf((1 + confidence) / 2, n - 1) * harms.std(ddof=1) / math.sqrt(n)
    )
    return HarmBaseline(mean, mean - half, mean + half, n)


def jain_index(throughputs: Sequence[float]) -> float:
    """(Σx)² / (n·Σx²); 1 for equal shares, 1/n for a single hog."""
    x = np.asarray(throughputs, dtype=float)
    if x.size == 0:
        raise ValueError("need at least one throughput")
    if np.any(x < 0):
        raise ValueError("throughputs must be non-negative")
    denom = float((x**2).sum())
    if denom == 0.0:
        raise AllZero("all throughputs are zero")
    return float(x.sum() ** 2 / (x.size * denom))


def stars_for_p(p: float) -> str:
    """Star coding with strict thresholds at 0.05 / 0.01 / 0.001."""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return "n.s."


def significance(samples_a: Sequence[float], samples_b: Sequence[float]) -> SignificanceReport:
    """Two-sided Welch t-test between two sample sets, star-coded.

    Deterministic repetitions can make a sample set exactly constant; zero
    variance on both sides is resolved by the means (identical means read as
    indistinguishable, different means as perfect separation) instead of
    refusing the comparison.
    """
    a = np.asarray(samples_a, dtype=float)
    b = np.asarray(samples_b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise DegenerateSamples("need at least two samples per set")
    var_a = float(a.var(ddof=1))
    var_b = float(b.var(ddof=1))
    if var_a == 0.0 and var_b == 0.0:
        p = 1.0 if float(a.mean()) == float(b.mean()) else 0.0
    else:
        p = float(sps.ttest_ind(a, b, equal_var=False).pvalue)
        if math.isnan(p):
            raise DegenerateSamples("t-test undefined for these samples")
    return SignificanceReport(p, stars_for_p(p), "welch-t-two-sided", a.size, b.size)


def summary_rows(result, trace_label: str = "") -> List[dict]:
    """Per-flow rows for summary.csv."""
    rows = []
    for st in result.flows:
        s = summarize_flow(result, st.flow_id)
        rows.append(
            {
                "flow": st.flow_id,
                "protocol": s.protocol,
                "trace": trace_label,
                "buffer": str(result.config.buffer),
                "seed": result.seed,
                "mean_tput_bps": s.mean_throughput_bps,
                "mean_delay_us": s.mean_delay_us,
                "utilization": s.utilization,
                "drops": s.drops,
            }
        )
    return rows
