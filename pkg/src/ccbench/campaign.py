"""Batch campaigns: config files in, run directories and aggregate CSVs out.

A campaign file is plain ``key = value`` text (``#`` comments, repeatable
keys form lists)::

    seed = 7
    runs = 20
    duration_s = 60
    delay_ms = 10
    trace = traces/city.trace        # a file, or synth:constant:48:60000
    flows = cubic                    # one entry per tuple axis
    flows = bbr+cubic                # '+' builds competing flows
    flows = cubic{beta=0.5}          # {k=v,...} overrides controller params
    buffer = inf
    buffer = bdp:10

Tuples are the cross product traces x flows x buffers; every tuple runs
``runs`` times with seeds derived as
``seed * 1_000_003 + tuple_index * 10_007 + run_index``.  Aggregate CSVs are
recomputed from the per-run directories after they are written, so they can
always be regenerated from disk alone.
"""

from __future__ import annotations

import json
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import combinations
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ccbench import metrics
from ccbench.engine import ExperimentConfig, FlowSpec, run
from ccbench.engine.config import BufferSpec, parse_buffer
from ccbench.errors import BadCampaignFile, CCBenchError
from ccbench.trace import ChannelTrace, constant_trace, onoff_trace, step_trace


def parse_trace_spec(text: str):
    """A trace axis entry: a file path, or ``synth:kind:...`` for generators."""
    if not text.startswith("synth:"):
        return text
    parts = text.split(":")
    kind = parts[1]
    try:
        if kind == "constant":
            _, _, rate, dur = parts
            return constant_trace(float(rate), int(dur))
        if kind == "onoff":
            _, _, rate, on, off, dur = parts
            return onoff_trace(float(rate), int(on), int(off), int(dur))
        if kind == "step":
            segs = [
                (float(r), int(d))
                for r, d in (seg.split("x") for seg in parts[2].split(","))
            ]
            return step_trace(segs)
    except (ValueError, IndexError) as exc:
        raise BadCampaignFile(f"bad synthetic trace spec {text!r}: {exc}") from exc
    raise BadCampaignFile(f"unknown synthetic trace kind {kind!r}")


_FLOW_RE = re.compile(r"^(?P<name>[a-z0-9_]+)(?:\{(?P<params>[^}]*)\})?$")


def parse_flows(text: str) -> Tuple[FlowSpec, ...]:
    """Parse ``cubic``, ``bbr+cubic`` or ``cubic{beta=0.5}+bbr``."""
    specs = []
    for token in text.split("+"):
        m = _FLOW_RE.match(token.strip())
        if not m:
            raise BadCampaignFile(f"cannot parse flow spec {token!r}")
        params = {}
        if m.group("params"):
            for kv in m.group("params").split(","):
                if "=" not in kv:
                    raise BadCampaignFile(f"bad parameter override {kv!r}")
                k, v = kv.split("=", 1)
                params[k.strip()] = float(v)
        specs.append(FlowSpec.make(m.group("name"), params))
    if not specs:
        raise BadCampaignFile("empty flow spec")
    return tuple(specs)


def flows_label(flows: Sequence[FlowSpec]) -> str:
    return "+".join(f.protocol for f in flows)


@dataclass(frozen=True)
class CampaignTuple:
    index: int
    label: str
    trace_label: str
    trace: object  # ChannelTrace or path
    flows: Tuple[FlowSpec, ...]
    buffer: BufferSpec


@dataclass
class Campaign:
    tuples: List[CampaignTuple]
    runs: int = 20
    seed: int = 0
    duration_s: float = 180.0
    delay_ms: int = 10
    jobs: int = 1
    sampling_window_s: float = 1.0
    max_cwnd_packets: int = 2800

    def run_seed(self, tuple_index: int, run_index: int) -> int:
        return self.seed * 1_000_003 + tuple_index * 10_007 + run_index

    def config_for(self, tup: CampaignTuple, run_index: int) -> ExperimentConfig:
        return ExperimentConfig(
            trace=tup.trace,
            flows=tup.flows,
            buffer=tup.buffer,
            prop_delay_ms=self.delay_ms,
            duration_s=self.duration_s,
            seed=self.run_seed(tup.index, run_index),
            sampling_window_s=self.sampling_window_s,
            max_cwnd_packets=self.max_cwnd_packets,
        )


_SCALARS = {
    "seed": int,
    "runs": int,
    "duration_s": float,
    "delay_ms": int,
    "jobs": int,
    "sampling_window_s": float,
    "max_cwnd": int,
}


def _sanitize(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.+-]+", "_", text)


def build_campaign(
    traces: Sequence[str],
    flows: Sequence[str],
    buffers: Sequence[str],
    **kwargs,
) -> Campaign:
    """Expand the tuple axes; pure function of its arguments."""
    if not traces:
        raise BadCampaignFile("campaign needs at least one trace")
    if not flows:
        raise BadCampaignFile("campaign needs at least one flows entry")
    if not buffers:
        raise BadCampaignFile("campaign needs at least one buffer entry")
    tuples = []
    idx = 0
    for trace_text in traces:
        trace = parse_trace_spec(trace_text)
        trace_label = _sanitize(
            os.path.splitext(os.path.basename(trace_text))[0]
            if not trace_text.startswith("synth:")
            else trace_text.replace("synth:", "")
        )
        for flow_text in flows:
            flow_specs = parse_flows(flow_text)
            for buffer_text in buffers:
                buf = parse_buffer(buffer_text)
                label = (
                    f"t{idx:03d}__{trace_label}__"
                    f"{_sanitize(flows_label(flow_specs))}__{_sanitize(str(buf))}"
                )
                tuples.append(
                    CampaignTuple(idx, label, trace_label, trace, flow_specs, buf)
                )
                idx += 1
    return Campaign(tuples, **kwargs)


def parse_campaign(text: str) -> Campaign:
    traces: List[str] = []
    flows: List[str] = []
    buffers: List[str] = []
    scalars: Dict[str, object] = {}
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadCampaignFile(f"line {line_no}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "trace":
            traces.append(value)
        elif key == "flows":
            flows.append(value)
        elif key == "buffer":
            buffers.append(value)
        elif key in _SCALARS:
            try:
                scalars[key] = _SCALARS[key](value)
            except ValueError as exc:
                raise BadCampaignFile(f"line {line_no}: bad value for {key}") from exc
        else:
            raise BadCampaignFile(f"line {line_no}: unknown key {key!r}")
    if not buffers:
        buffers = ["inf"]
    kwargs = dict(scalars)
    if "max_cwnd" in kwargs:
        kwargs["max_cwnd_packets"] = kwargs.pop("max_cwnd")
    return build_campaign(traces, flows, buffers, **kwargs)


def load_campaign(path: str) -> Campaign:
    with open(path, "r") as fh:
        return parse_campaign(fh.read())


# -- execution ----------------------------------------------------------------


def _execute_one(args):
    campaign, tup, run_index, out_dir, core = args
    config = campaign.config_for(tup, run_index)
    result = run(config, core=core)
    run_dir = os.path.join(out_dir, tup.label, f"run{run_index:03d}")
    result.write_dir(run_dir)
    return run_dir


def execute_campaign(
    campaign: Campaign, out_dir: str, core: str = "auto", progress=None
) -> dict:
    """Run every tuple x repetition; failures are recorded, not fatal.

    Returns the manifest (also written to ``manifest.json``).
    """
    os.makedirs(out_dir, exist_ok=True)
    tasks = [
        (campaign, tup, r, out_dir, core)
        for tup in campaign.tuples
        for r in range(campaign.runs)
    ]
    statuses: Dict[str, dict] = {
        tup.label: {
            "label": tup.label,
            "trace": tup.trace_label,
            "flows": flows_label(tup.flows),
            "buffer": str(tup.buffer),
            "seeds": [campaign.run_seed(tup.index, r) for r in range(campaign.runs)],
            "status": "ok",
            "errors": [],
        }
        for tup in campaign.tuples
    }

    def record(task, outcome, error=None):
        label = task[1].label
        if error is not None:
            statuses[label]["status"] = "failed"
            statuses[label]["errors"].append(str(error))
        if progress:
            progress(label, task[2], error)

    if campaign.jobs <= 1:
        for task in tasks:
            try:
                record(task, _execute_one(task))
            except CCBenchError as exc:
                record(task, None, exc)
    else:
        with ProcessPoolExecutor(max_workers=campaign.jobs) as pool:
            futures = [(task, pool.submit(_execute_one, task)) for task in tasks]
            for task, fut in futures:
                try:
                    record(task, fut.result())
                except CCBenchError as exc:
                    record(task, None, exc)

    manifest = {
        "runs": campaign.runs,
        "seed": campaign.seed,
        "duration_s": campaign.duration_s,
        "delay_ms": campaign.delay_ms,
        "tuples": list(statuses.values()),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    aggregate_out_dir(out_dir)
    return manifest


# -- aggregation from disk ------------------------------------------------------


def load_run_meta(run_dir: str) -> dict:
    with open(os.path.join(run_dir, "meta.json")) as fh:
        return json.load(fh)


def iter_run_dirs(out_dir: str):
    for tuple_dir in sorted(os.listdir(out_dir)):
        tpath = os.path.join(out_dir, tuple_dir)
        if not os.path.isdir(tpath):
            continue
        for run_dir in sorted(os.listdir(tpath)):
            rpath = os.path.join(tpath, run_dir)
            if os.path.isfile(os.path.join(rpath, "meta.json")):
                yield tuple_dir, run_dir, rpath


def _tuple_key(meta: dict) -> tuple:
    cfg = meta["config"]
    protos = "+".join(f["protocol"] for f in cfg["flows"])
    return (cfg["trace"], cfg["buffer"], protos)


def aggregate_out_dir(out_dir: str) -> None:
    """(Re)write summary.csv, harm.csv and significance.csv from run dirs."""
    # collect per-run per-flow summaries
    by_key: Dict[tuple, List[dict]] = {}
    summary_lines = []
    for tuple_dir, run_dir, rpath in iter_run_dirs(out_dir):
        meta = load_run_meta(rpath)
        key = _tuple_key(meta)
        by_key.setdefault(key, []).append(meta)
        for fs in meta["summary"]:
            summary_lines.append(
                f"{fs['protocol']},{meta['config']['trace']},{meta['config']['buffer']},"
                f"{meta['seed']},{fs['flow']},{fs['mean_tput_bps']!r},"
                f"{fs['mean_delay_us']!r},{fs['utilization']!r},{fs['drops']}"
            )
    with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
        fh.write(
            "protocol,trace,buffer,seed,flow,mean_tput_bps,mean_delay_us,"
            "utilization,drops\n"
        )
        for line in summary_lines:
            fh.write(line + "\n")

    # index solo / paired tuples by (trace, buffer)
    solo: Dict[tuple, Dict[str, dict]] = {}
    pairs: Dict[tuple, List[tuple]] = {}
    for (trace, buffer, protos), metas in by_key.items():
        names = protos.split("+")
        scope = (trace, buffer)
        if len(names) == 1:
            solo.setdefault(scope, {})[names[0]] = _flow_samples(metas, 0)
        else:
            pairs.setdefault(scope, []).append((names, metas))

    harm_rows = []
    for scope, entries in pairs.items():
        solos = solo.get(scope, {})
        baselines = _self_harm_baselines(entries, solos)
        for names, metas in entries:
            for pos, victim in enumerate(names):
                if victim not in solos:
                    continue
                competitors = "+".join(n for i, n in enumerate(names) if i != pos)
                paired = _flow_samples(metas, pos)
                for kind, metric in (
                    (metrics.MetricKind.MORE_IS_BETTER, "tput"),
                    (metrics.MetricKind.LESS_IS_BETTER, "delay"),
                ):
                    solo_mean = float(np.mean(solos[victim][metric]))
                    if solo_mean == 0:
                        continue
                    harms = [
                        metrics.harm(solo_mean, y, kind) for y in paired[metric]
                    ]
                    base = baselines.get((victim, metric))
                    mean_harm = float(np.mean(harms))
                    zone = ""
                    b_mean = b_lo = b_hi = ""
                    if base is not None:
                        zone = "red" if mean_harm > base.ci_hi else "green"
                        b_mean, b_lo, b_hi = (
                            repr(base.mean), repr(base.ci_lo), repr(base.ci_hi)
                        )
                    harm_rows.append(
                        f"{scope[0]},{scope[1]},{victim},{competitors},{metric},"
                        f"{mean_harm!r},{b_mean},{b_lo},{b_hi},{zone}"
                    )
    with open(os.path.join(out_dir, "harm.csv"), "w", newline="") as fh:
        fh.write(
            "trace,buffer,victim,competitors,metric,harm_pct,"
            "baseline_mean,baseline_lo,baseline_hi,zone\n"
        )
        for line in harm_rows:
            fh.write(line + "\n")

    sig_rows = []
    for scope, protos in solo.items():
        for a, b in combinations(sorted(protos), 2):
            for metric in ("tput", "delay"):
                sa, sb = protos[a][metric], protos[b][metric]
                if len(sa) < 2 or len(sb) < 2:
                    continue
                rep = metrics.significance(sa, sb)
                sig_rows.append(
                    f"{scope[0]},{scope[1]},{a},{b},{metric},"
                    f"{rep.p_value!r},{rep.stars}"
                )
    with open(os.path.join(out_dir, "significance.csv"), "w", newline="") as fh:
        fh.write("trace,buffer,proto_a,proto_b,metric,p,stars\n")
        for line in sig_rows:
            fh.write(line + "\n")


def _flow_samples(metas: List[dict], position: int) -> Dict[str, list]:
    tput, delay = [], []
    for meta in metas:
        fs = meta["summary"][position]
        tput.append(fs["mean_tput_bps"])
        delay.append(fs["mean_delay_us"])
    return {"tput": tput, "delay": delay}


def _self_harm_baselines(entries, solos) -> Dict[tuple, metrics.HarmBaseline]:
    """Self-harm (P vs P) baselines per victim protocol and metric."""
    out: Dict[tuple, metrics.HarmBaseline] = {}
    for names, metas in entries:
        if len(set(names)) != 1 or names[0] not in solos:
            continue
        victim = names[0]
        for kind, metric in (
            (metrics.MetricKind.MORE_IS_BETTER, "tput"),
            (metrics.MetricKind.LESS_IS_BETTER, "delay"),
        ):
            paired_values = []
            for pos in range(len(names)):
                paired_values.extend(_flow_samples(metas, pos)[metric])
            out[(victim, metric)] = metrics.self_harm_baseline(
                solos[victim][metric], paired_values, kind
            )
    return out


# -- buffer sweep ---------------------------------------------------------------


def sweep_buffer(
    trace,
    flows: Tuple[FlowSpec, ...],
    multiples: Sequence[float],
    runs: int = 10,
    duration_s: float = 60.0,
    delay_ms: int = 10,
    seed: int = 0,
    jobs: int = 1,
    core: str = "auto",
) -> List[dict]:
    """Per-flow shares and delays across bottleneck sizes in BDP multiples."""
    if len(multiples) < 2:
        raise BadCampaignFile("sweep needs at least two BDP multiples")
    rows = []
    for mi, mult in enumerate(multiples):
        results = []
        for r in range(runs):
            config = ExperimentConfig(
                trace=trace,
                flows=flows,
                buffer=BufferSpec("bdp", float(mult)),
                prop_delay_ms=delay_ms,
                duration_s=duration_s,
                seed=seed * 1_000_003 + mi * 10_007 + r,
            )
            results.append(run(config, core=core))
        n_flows = len(flows)
        tputs = np.array(
            [
                [metrics.mean_throughput_bps(res, f) for f in range(n_flows)]
                for res in results
            ]
        )
        delays = np.array(
            [
                [metrics.summarize_flow(res, f).mean_delay_us for f in range(n_flows)]
                for res in results
            ]
        )
        total = tputs.sum(axis=1, keepdims=True)
        shares = np.where(total > 0, tputs / total, 0.0)
        row = {"multiple": float(mult)}
        for f in range(n_flows):
            row[f"flow{f}_protocol"] = flows[f].protocol
            row[f"flow{f}_share"] = float(shares[:, f].mean())
            row[f"flow{f}_tput_bps"] = float(tputs[:, f].mean())
            row[f"flow{f}_delay_us"] = float(delays[:, f].mean())
        rows.append(row)
    return rows


def write_sweep_csv(rows: List[dict], path: str) -> None:
    cols = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        fh.write(",".join(cols) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(row[c]) for c in cols) + "\n")


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)
