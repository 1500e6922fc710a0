import pytest

from streamrec.cli import main

SMALL_STREAM = "users=60,items=30,events=800,seed=5"


def run_cli(*argv):
    return main(list(argv))


class TestRun:
    def test_writes_all_run_files(self, tmp_path):
        out = tmp_path / "a"
        code = run_cli("run", "--algo", "isgd", "--ni", "2", "--w", "0",
                       "--dataset", SMALL_STREAM, "--format", "synthetic",
                       "--out", str(out), "--seed", "7")
        assert code == 0
        for name in ("manifest.txt", "recall.csv", "state.csv", "sweeps.csv", "summary.txt"):
            assert (out / name).is_file(), name
        manifest = (out / "manifest.txt").read_text()
        assert "ni = 2" in manifest and "seed = 7" in manifest
        assert manifest in (out / "summary.txt").read_text()

    def test_invalid_ni_exits_2(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as err:
            run_cli("run", "--algo", "isgd", "--ni", "0", "--dataset", SMALL_STREAM,
                    "--format", "synthetic", "--out", str(tmp_path / "x"))
        assert err.value.code == 2
        assert "n_i" in capsys.readouterr().err

    def test_unknown_flag_exits_2(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli("run", "--fancy", "1")
        assert err.value.code == 2

    def test_missing_dataset_file_exits_1(self, tmp_path, capsys):
        code = run_cli("run", "--algo", "isgd", "--dataset", str(tmp_path / "nope.csv"),
                       "--format", "movielens", "--out", str(tmp_path / "x"))
        assert code == 1
        assert "error" in capsys.readouterr().err

    def test_lfu_flags_produce_sweep_rows(self, tmp_path):
        out = tmp_path / "lfu"
        code = run_cli("run", "--algo", "dics", "--ni", "1",
                       "--dataset", "users=500,items=200,events=6000,zipf=1.2,user_zipf=1.0,seed=5",
                       "--format", "synthetic", "--out", str(out), "--seed", "3",
                       "--forgetting", "lfu", "--lfu-trigger", "2000", "--lfu-min-freq", "2")
        assert code == 0
        sweep_rows = (out / "sweeps.csv").read_text().splitlines()[1:]
        assert sweep_rows, "expected at least one sweep on a 6000-event stream"

    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "base.cfg"
        cfg.write_text("algo = dics\nni = 2\nseed = 5\nwindow = 100\n")
        out = tmp_path / "cfgrun"
        code = run_cli("run", "--config", str(cfg), "--seed", "9",
                       "--dataset", SMALL_STREAM, "--format", "synthetic", "--out", str(out))
        assert code == 0
        summary = (out / "summary.txt").read_text()
        assert "algo = dics" in summary and "seed = 9" in summary and "window = 100" in summary

    def test_rerun_reproduces_recall_csv(self, tmp_path):
        args = ("run", "--algo", "dics", "--ni", "2", "--dataset", SMALL_STREAM,
                "--format", "synthetic", "--seed", "21")
        assert run_cli(*args, "--out", str(tmp_path / "r1")) == 0
        assert run_cli(*args, "--out", str(tmp_path / "r2")) == 0
        assert (tmp_path / "r1" / "recall.csv").read_bytes() == \
            (tmp_path / "r2" / "recall.csv").read_bytes()


class TestSweepGrid:
    def test_two_rows_produce_two_run_dirs_and_comparison(self, tmp_path):
        grid = tmp_path / "grid.txt"
        grid.write_text("# the desk grid\n"
                        "name=central algo=isgd ni=1 seed=5\n"
                        "name=split algo=isgd ni=2 seed=5\n")
        out = tmp_path / "grid_out"
        code = run_cli("sweep-grid", "--grid", str(grid), "--dataset", SMALL_STREAM,
                       "--format", "synthetic", "--out", str(out))
        assert code == 0
        lines = (out / "comparison.csv").read_text().splitlines()
        assert lines[0].startswith("name,algo,ni,w,forgetting,events,cumulative_recall")
        assert len(lines) == 3
        assert (out / "central" / "recall.csv").is_file()
        assert (out / "split" / "recall.csv").is_file()

    def test_empty_grid_exits_2(self, tmp_path):
        grid = tmp_path / "grid.txt"
        grid.write_text("# nothing here\n")
        with pytest.raises(SystemExit) as err:
            run_cli("sweep-grid", "--grid", str(grid), "--dataset", SMALL_STREAM,
                    "--format", "synthetic", "--out", str(tmp_path / "out"))
        assert err.value.code == 2

    def test_failed_row_noted_and_grid_continues(self, tmp_path, capsys):
        grid = tmp_path / "grid.txt"
        grid.write_text("name=bad algo=isgd ni=0 seed=5\n"
                        "name=good algo=isgd ni=1 seed=5\n")
        out = tmp_path / "grid_out"
        code = run_cli("sweep-grid", "--grid", str(grid), "--dataset", SMALL_STREAM,
                       "--format", "synthetic", "--out", str(out))
        assert code == 1
        rows = (out / "comparison.csv").read_text().splitlines()[1:]
        assert any(row.startswith("bad,") and row.endswith(",failed") for row in rows)
        assert any(row.startswith("good,") and row.endswith(",ok") for row in rows)

    def test_grid_rerun_reproduces_recall_column(self, tmp_path):
        grid = tmp_path / "grid.txt"
        grid.write_text("name=a algo=dics ni=1 seed=8\nname=b algo=dics ni=2 seed=8\n")
        recalls = []
        for sub in ("g1", "g2"):
            out = tmp_path / sub
            assert run_cli("sweep-grid", "--grid", str(grid), "--dataset", SMALL_STREAM,
                           "--format", "synthetic", "--out", str(out)) == 0
            rows = (out / "comparison.csv").read_text().splitlines()[1:]
            recalls.append([row.split(",")[6] for row in rows])
        assert recalls[0] == recalls[1]


class TestValidate:
    def test_all_suites_pass(self, capsys):
        assert run_cli("validate") == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 3 and "FAIL" not in out

    def test_single_suite_filter(self, capsys):
        assert run_cli("validate", "--suite", "routing") == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 1 and "routing" in out

    def test_injected_fault_prints_counterexample(self, capsys):
        code = run_cli("validate", "--suite", "similarity", "--debug-sim-offset", "0.001")
        assert code == 1
        out = capsys.readouterr().out
        assert "FAIL" in out and "sim(" in out
