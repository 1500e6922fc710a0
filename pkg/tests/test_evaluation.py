import numpy as np
import pytest

from streamrec.core import EngineConfig, RatingEvent
from streamrec.engine import run
from streamrec.evaluation import (MetricsReport, moving_average, prequential_step,
                                  snapshot_counts, write_run_outputs)


def brute_moving_average(hits, window):
    return [sum(hits[max(0, i + 1 - window):i + 1]) / min(i + 1, window)
            for i in range(len(hits))]


class TestMovingAverage:
    def test_all_ones(self):
        assert moving_average([1, 1, 1, 1], 2).tolist() == [1.0, 1.0, 1.0, 1.0]

    def test_alternating_window_two(self):
        got = moving_average([0, 1, 0, 1, 0, 1], 2)
        assert got.tolist() == [0.0, 0.5, 0.5, 0.5, 0.5, 0.5]

    def test_window_three_prefix_widths(self):
        got = moving_average([1, 0, 0, 1], 3)
        assert got == pytest.approx([1.0, 0.5, 1 / 3, 1 / 3])

    def test_window_larger_than_series(self):
        got = moving_average([1, 0], 10)
        assert got.tolist() == [1.0, 0.5]

    def test_empty_series(self):
        assert moving_average([], 5).size == 0

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            n = int(rng.integers(1, 200))
            window = int(rng.integers(1, 50))
            hits = rng.integers(0, 2, n).tolist()
            assert moving_average(hits, window) == pytest.approx(
                brute_moving_average(hits, window))

    def test_rejects_bad_window(self):
        with pytest.raises(ValueError):
            moving_average([1], 0)


class _ScriptedRecommender:
    """Stub that records call order and returns a fixed list."""

    def __init__(self, rec_list):
        self.rec_list = rec_list
        self.calls = []

    def recommend(self, user_id, n):
        self.calls.append(("recommend", user_id))
        return self.rec_list[:n]

    def learn(self, event):
        self.calls.append(("learn", event.item_id))


class TestPrequentialStep:
    def test_hit_when_item_in_list(self):
        rec = _ScriptedRecommender([3, 7, 9])
        hit, length = prequential_step(rec, RatingEvent(0, 1, 7, 1.0, 0), 10)
        assert (hit, length) == (1, 3)

    def test_miss_on_empty_list(self):
        rec = _ScriptedRecommender([])
        hit, length = prequential_step(rec, RatingEvent(0, 1, 7, 1.0, 0), 10)
        assert (hit, length) == (0, 0)

    def test_full_list_containment(self):
        rec = _ScriptedRecommender(list(range(30)))
        hit, _ = prequential_step(rec, RatingEvent(0, 1, 29, 1.0, 0), 50)
        assert hit == 1

    def test_scoring_strictly_precedes_training(self):
        rec = _ScriptedRecommender([1])
        prequential_step(rec, RatingEvent(0, 1, 1, 1.0, 0), 10)
        assert rec.calls == [("recommend", 1), ("learn", 1)]

    def test_top_n_truncates(self):
        rec = _ScriptedRecommender([5, 6, 7])
        hit, length = prequential_step(rec, RatingEvent(0, 1, 7, 1.0, 0), 2)
        assert (hit, length) == (0, 2)


def small_report(hits, window=3, warmup=0.2, **kwargs):
    n = len(hits)
    return MetricsReport(
        hits=np.array(hits, dtype=np.uint8),
        workers=np.zeros(n, dtype=np.int32),
        rec_list_lens=np.full(n, 10, dtype=np.int32),
        latencies_ns=np.arange(n, dtype=np.int64) + 1000,
        window=window,
        warmup_fraction=warmup,
        n_workers=1,
        throughput_eps=123.0,
        **kwargs,
    )


class TestMetricsReport:
    def test_cumulative_recall_is_mean_of_hits(self):
        report = small_report([1, 0, 0, 1, 1])
        assert report.cumulative_recall == pytest.approx(3 / 5, abs=1e-12)
        final_prefix_mean = np.cumsum(report.hits)[-1] / report.n_events
        assert report.cumulative_recall == pytest.approx(final_prefix_mean, abs=1e-12)

    def test_warmup_split(self):
        report = small_report([1] * 10 + [0] * 10, warmup=0.5)
        assert report.warmup_events == 10
        assert report.warmup_recall == 1.0
        assert report.post_warmup_recall == 0.0
        assert report.cumulative_recall == 0.5

    def test_empty_report(self):
        report = small_report([])
        assert report.cumulative_recall == 0.0
        assert report.latency_percentiles_ns() == (0, 0, 0)
        assert report.final_state_totals() == (0, 0, 0)


class TestSnapshotCounts:
    def test_counts_per_worker(self):
        class Fake:
            def __init__(self, counts):
                self._c = counts
            def state_counts(self):
                return self._c
        rows = snapshot_counts({1: Fake((3, 2, 0)), 0: Fake((0, 0, 0))})
        assert rows == [(0, 0, 0, 0), (1, 3, 2, 0)]


class TestWriters:
    def test_files_schema_and_line_endings(self, tmp_path):
        report = small_report([1, 0, 1])
        write_run_outputs(tmp_path, report, "[manifest]\nseed = 1\n", end_time="t", elapsed_s=1.5)
        recall = (tmp_path / "recall.csv").read_bytes()
        assert b"\r" not in recall
        lines = recall.decode().splitlines()
        assert lines[0] == "seq,worker,hit,moving_avg"
        assert lines[1] == "0,0,1,1.000000"
        assert lines[3] == "2,0,1,0.666667"
        assert (tmp_path / "state.csv").read_text().splitlines()[0] == \
            "seq,worker,user_entries,item_entries,pair_entries"
        assert (tmp_path / "sweeps.csv").read_text().splitlines()[0] == \
            "seq,worker,users_evicted,items_evicted,pairs_evicted"
        summary = (tmp_path / "summary.txt").read_text()
        assert "seed = 1" in summary and "cumulative_recall = 0.666667" in summary

    def test_csv_bodies_deterministic_for_equal_runs(self, tmp_path):
        from streamrec.ingest import SyntheticSpec, synthetic_events
        events = synthetic_events(SyntheticSpec(users=40, items=25, events=800, seed=3))
        cfg = EngineConfig(algo="isgd", n_i=2, seed=11, window=100, telemetry_every=200)
        for sub in ("one", "two"):
            write_run_outputs(tmp_path / sub, run(cfg, events), "[manifest]\n")
        for name in ("recall.csv", "state.csv", "sweeps.csv"):
            assert (tmp_path / "one" / name).read_bytes() == \
                (tmp_path / "two" / name).read_bytes()
