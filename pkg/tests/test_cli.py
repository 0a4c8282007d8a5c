import os

import pytest

from ccbench.cli import main
from ccbench.trace import average_capacity, load_trace, parse_trace


@pytest.fixture()
def trace_file(tmp_path):
    path = tmp_path / "c24.trace"
    rc = main(["trace", "synth", "--spec", "synth:constant:24:2000",
               "--out", str(path)])
    assert rc == 0
    return str(path)


class TestTraceCommands:
    def test_synth_and_stats(self, trace_file, capsys):
        rc = main(["trace", "stats", trace_file])
        assert rc == 0
        out = capsys.readouterr().out
        assert "24.000 Mbps avg" in out
        assert "4000 opportunities" in out

    def test_validate_good(self, trace_file):
        assert main(["trace", "validate", trace_file]) == 0

    def test_validate_bad_reports_line(self, tmp_path, capsys):
        bad = tmp_path / "bad.trace"
        bad.write_text("5\n3\n")
        rc = main(["trace", "validate", str(bad)])
        assert rc == 1
        assert "line 2" in capsys.readouterr().err

    def test_convert_round_trip(self, tmp_path, capsys):
        log = tmp_path / "probe.log"
        log.write_text("".join(f"{t * 500}\n" for t in range(4000)))  # 24 Mbps
        out = tmp_path / "probe.trace"
        rc = main(["trace", "convert", str(log), "--out", str(out)])
        assert rc == 0
        tr = load_trace(out)
        assert average_capacity(tr) == pytest.approx(24e6, rel=0.005)


class TestRunCommand:
    def test_adhoc_run(self, trace_file, tmp_path, capsys):
        out = tmp_path / "results"
        rc = main([
            "run", "--trace", trace_file, "--cc", "cubic", "--cc", "cubic",
            "--buffer", "bdp:5", "--duration-s", "1", "--runs", "2",
            "--seed", "3", "--out", str(out),
        ])
        assert rc == 0
        assert (out / "summary.csv").is_file()
        assert (out / "manifest.json").is_file()

    def test_campaign_file(self, tmp_path):
        camp = tmp_path / "camp.txt"
        camp.write_text(
            "trace = synth:constant:24:1000\nflows = reno\nbuffer = inf\n"
            "runs = 1\nduration_s = 1\nseed = 2\n"
        )
        out = tmp_path / "out"
        assert main(["run", "--campaign", str(camp), "--out", str(out)]) == 0
        assert (out / "summary.csv").is_file()

    def test_config_error_exit_code(self, tmp_path):
        assert main(["run", "--out", str(tmp_path / "x")]) == 1
        bad = tmp_path / "bad.txt"
        bad.write_text("flows = cubic\n")  # no trace
        assert main(["run", "--campaign", str(bad), "--out", str(tmp_path / "y")]) == 1

    def test_determinism_across_invocations(self, trace_file, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            rc = main([
                "run", "--trace", trace_file, "--cc", "vivace",
                "--duration-s", "1", "--runs", "2", "--seed", "9",
                "--out", str(out),
            ])
            assert rc == 0
            outs.append((out / "summary.csv").read_text())
        assert outs[0] == outs[1]


class TestSweepCommand:
    def test_sweep_csv(self, trace_file, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = main([
            "sweep-buffer", "--trace", trace_file, "--cc", "cubic", "--cc", "cubic",
            "--multiples", "1,5", "--runs", "1", "--duration-s", "2",
            "--out", str(out),
        ])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3


class TestPlotdata:
    @pytest.fixture()
    def results_dir(self, trace_file, tmp_path):
        out = tmp_path / "results"
        main([
            "run", "--trace", trace_file, "--cc", "allegro",
            "--duration-s", "1.5", "--runs", "2", "--seed", "4",
            "--out", str(out),
        ])
        return str(out)

    def test_scatter(self, results_dir, tmp_path):
        out = tmp_path / "scatter.csv"
        assert main(["plotdata", "--results", results_dir, "--kind", "scatter",
                     "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert lines[0].startswith("protocol,")
        assert len(lines) == 3  # header + 2 runs x 1 flow

    def test_timeseries_matches_decision_log(self, results_dir, tmp_path):
        out = tmp_path / "ts.csv"
        assert main(["plotdata", "--results", results_dir, "--kind", "timeseries",
                     "--out", str(out)]) == 0
        body = out.read_text().strip().splitlines()[1:]
        # staircase rows reproduce the per-run decision logs 1:1
        total = 0
        for tuple_dir in os.listdir(results_dir):
            tpath = os.path.join(results_dir, tuple_dir)
            if not os.path.isdir(tpath):
                continue
            for run_dir in os.listdir(tpath):
                dec = os.path.join(tpath, run_dir, "decisions.csv")
                with open(dec) as fh:
                    total += len(fh.readlines()) - 1
        assert len(body) == total

    def test_harm_bars(self, results_dir, tmp_path):
        out = tmp_path / "harm.csv"
        assert main(["plotdata", "--results", results_dir, "--kind", "harm-bars",
                     "--out", str(out)]) == 0
        assert out.read_text().startswith("trace,buffer,victim")

    def test_unknown_kind(self, results_dir):
        assert main(["plotdata", "--results", results_dir, "--kind", "pie"]) == 1


class TestBench:
    def test_bench_runs(self, capsys):
        rc = main(["bench", "--rate-mbps", "20", "--trace-ms", "1000",
                   "--duration-s", "2", "--cc", "cubic"])
        assert rc == 0
        out = capsys.readouterr().out
        assert "pure" in out
        assert "deliveries" in out
