"""Command-line interface: campaigns in, CSVs out.

Exit codes: 0 success, 1 configuration error, 2 partial tuple failures.
"""

from __future__ import annotations

import argparse
import os
import sys
import time

from ccbench import campaign as campaign_mod
from ccbench import trace as trace_mod
from ccbench.engine import ExperimentConfig, run
from ccbench.engine.core import available_cores
from ccbench.errors import CCBenchError

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 2


def _add_common_run_args(p):
    p.add_argument("--trace", action="append", default=[],
                   help="trace file or synth:... spec (repeatable)")
    p.add_argument("--cc", action="append", default=[],
                   help="protocol for one flow (repeat for competing flows)")
    p.add_argument("--buffer", action="append", default=[],
                   help="inf | bdp:X | pkts:N (repeatable)")
    p.add_argument("--delay-ms", type=int, default=10)
    p.add_argument("--duration-s", type=float, default=180.0)
    p.add_argument("--runs", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--core", default="auto", choices=["auto", "pure", "compiled"])


def cmd_run(args) -> int:
    try:
        if args.campaign:
            camp = campaign_mod.load_campaign(args.campaign)
            if args.jobs != 1:
                camp.jobs = args.jobs
        else:
            if not args.trace or not args.cc:
                raise CCBenchError("need --campaign, or --trace and --cc")
            camp = campaign_mod.build_campaign(
                traces=args.trace,
                flows=["+".join(args.cc)],
                buffers=args.buffer or ["inf"],
                runs=args.runs,
                seed=args.seed,
                duration_s=args.duration_s,
                delay_ms=args.delay_ms,
                jobs=args.jobs,
            )
    except (CCBenchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    def progress(label, run_index, error):
        status = "FAIL" if error else "ok"
        print(f"[{status}] {label} run{run_index:03d}" + (f": {error}" if error else ""))

    manifest = campaign_mod.execute_campaign(
        camp, args.out, core=args.core, progress=progress
    )
    failed = [t for t in manifest["tuples"] if t["status"] != "ok"]
    print(f"{len(manifest['tuples']) - len(failed)}/{len(manifest['tuples'])} tuples ok; "
          f"outputs in {args.out}")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_sweep_buffer(args) -> int:
    try:
        if not args.trace:
            raise CCBenchError("need --trace")
        if len(args.cc) < 1:
            raise CCBenchError("need at least one --cc")
        trace = campaign_mod.parse_trace_spec(args.trace[0])
        multiples = [float(x) for x in args.multiples.split(",")]
        flows = campaign_mod.parse_flows("+".join(args.cc))
        rows = campaign_mod.sweep_buffer(
            trace,
            flows,
            multiples,
            runs=args.runs,
            duration_s=args.duration_s,
            delay_ms=args.delay_ms,
            seed=args.seed,
            core=args.core,
        )
    except (CCBenchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    campaign_mod.write_sweep_csv(rows, args.out)
    print(f"wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def _plot_scatter(results_dir: str, out):
    out.write("protocol,trace,buffer,seed,flow,delay_ms,tput_mbps,capacity_mbps\n")
    for _, _, rpath in campaign_mod.iter_run_dirs(results_dir):
        meta = campaign_mod.load_run_meta(rpath)
        cap = meta["capacity_bps"] / 1e6
        for fs in meta["summary"]:
            out.write(
                f"{fs['protocol']},{meta['config']['trace']},"
                f"{meta['config']['buffer']},{meta['seed']},{fs['flow']},"
                f"{fs['mean_delay_us'] / 1000.0!r},"
                f"{fs['mean_tput_bps'] / 1e6!r},{cap!r}\n"
            )


def _plot_harm_bars(results_dir: str, out):
    campaign_mod.aggregate_out_dir(results_dir)
    with open(os.path.join(results_dir, "harm.csv")) as fh:
        out.write(fh.read())


def _plot_sweep(results_dir: str, out):
    path = results_dir if results_dir.endswith(".csv") else os.path.join(
        results_dir, "sweep.csv"
    )
    with open(path) as fh:
        out.write(fh.read())


def _plot_timeseries(results_dir: str, out):
    out.write("run,flow,time_s,cwnd,pacing_rate_pps,mode\n")
    for tuple_dir, run_dir, rpath in campaign_mod.iter_run_dirs(results_dir):
        with open(os.path.join(rpath, "decisions.csv")) as fh:
            next(fh)
            for line in fh:
                t, flow, cwnd, rate, mode = line.rstrip("\n").split(",")
                out.write(
                    f"{tuple_dir}/{run_dir},{flow},{int(t) / 1e6!r},{cwnd},{rate},{mode}\n"
                )


_FIGURES = {
    "scatter": _plot_scatter,
    "harm-bars": _plot_harm_bars,
    "sweep": _plot_sweep,
    "timeseries": _plot_timeseries,
}


def cmd_plotdata(args) -> int:
    emit = _FIGURES.get(args.kind)
    if emit is None:
        print(f"error: unknown figure kind {args.kind!r}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.out == "-":
            emit(args.results, sys.stdout)
        else:
            with open(args.out, "w", newline="") as fh:
                emit(args.results, fh)
                print(f"wrote {args.out}")
    except (OSError, CCBenchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def cmd_trace(args) -> int:
    try:
        if args.action == "validate":
            trace_mod.load_trace(args.input)
            print(f"{args.input}: valid")
            return EXIT_OK
        if args.action == "stats":
            tr = trace_mod.load_trace(args.input)
            mbps = trace_mod.average_capacity(tr) / 1e6
            print(
                f"{mbps:.3f} Mbps avg, {tr.n_opportunities} opportunities, "
                f"{tr.duration_ms} ms"
            )
            return EXIT_OK
        if args.action == "convert":
            log = trace_mod.load_probe_log(args.input)
            tr = trace_mod.probe_log_to_trace(log, bin_ms=args.bin_ms)
            trace_mod.save_trace(tr, args.out)
            print(f"wrote {args.out}: {trace_mod.average_capacity(tr) / 1e6:.3f} Mbps avg")
            return EXIT_OK
        if args.action == "synth":
            tr = campaign_mod.parse_trace_spec(args.spec)
            if isinstance(tr, str):
                raise CCBenchError("synth expects a synth:... spec")
            trace_mod.save_trace(tr, args.out)
            print(f"wrote {args.out}: {tr.n_opportunities} opportunities")
            return EXIT_OK
        raise CCBenchError(f"unknown trace action {args.action!r}")
    except CCBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def cmd_bench(args) -> int:
    """Compare the simulation cores on one configuration."""
    trace = campaign_mod.parse_trace_spec(
        args.trace or f"synth:constant:{args.rate_mbps}:{args.trace_ms}"
    )
    flows = campaign_mod.parse_flows("+".join(args.cc or ["cubic", "cubic"]))
    config = ExperimentConfig(
        trace=trace, flows=flows, duration_s=args.duration_s, seed=args.seed
    )
    print(f"flows={'+'.join(f.protocol for f in flows)} duration={args.duration_s}s")
    baseline = None
    for core in available_cores():
        res = run(config, core=core)
        events = int(res.link_delivered)
        rate = events / res.runtime_s if res.runtime_s > 0 else float("inf")
        note = ""
        if baseline is None:
            baseline = res.runtime_s
        else:
            note = f"  ({baseline / res.runtime_s:.1f}x vs {available_cores()[0]})"
        print(f"{core:9s} {res.runtime_s:8.2f}s  {events:>10,} deliveries  "
              f"{rate:>12,.0f} events/s{note}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ccbench",
        description="Trace-driven congestion-control evaluation toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute a campaign (or a single ad-hoc tuple)")
    p.add_argument("--campaign", help="campaign file (key = value text)")
    _add_common_run_args(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-buffer", help="share-vs-buffer sweep for a flow set")
    _add_common_run_args(p)
    p.add_argument("--multiples", default="1,2,5,10,15",
                   help="comma-separated BDP multiples")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_sweep_buffer, runs=10)

    p = sub.add_parser("plotdata", help="emit tidy plot-ready CSV from results")
    p.add_argument("--results", required=True, help="results directory")
    p.add_argument("--kind", required=True,
                   help="scatter | harm-bars | sweep | timeseries")
    p.add_argument("--out", default="-", help="output CSV path (default stdout)")
    p.set_defaults(func=cmd_plotdata)

    p = sub.add_parser("trace", help="trace tooling")
    p.add_argument("action", choices=["validate", "stats", "convert", "synth"])
    p.add_argument("input", nargs="?", help="input trace/probe-log file")
    p.add_argument("--spec", help="synthetic spec for `synth` (synth:constant:48:60000)")
    p.add_argument("--bin-ms", type=int, default=1)
    p.add_argument("--out", help="output file for convert/synth")
    p.set_defaults(func=cmd_trace)

    p = sub.add_parser("bench", help="benchmark pure vs compiled cores")
    p.add_argument("--trace", help="trace file or synth spec")
    p.add_argument("--rate-mbps", type=float, default=200.0)
    p.add_argument("--trace-ms", type=int, default=10_000)
    p.add_argument("--cc", action="append", default=[])
    p.add_argument("--duration-s", type=float, default=30.0)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except CCBenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
