"""Prequential online evaluation and run telemetry.

Every event is scored first and trained on second: the recommendation list
is produced from the model state *before* the event touches it, the hit is
1 iff the consumed item appears in that top-N list, and only then does the
model learn the event. Hits aggregate into a moving-average recall series,
a cumulative recall, throughput, and per-worker state-size snapshots.

A run directory holds four files, all with LF line endings:

    recall.csv   seq,worker,hit,moving_avg
    state.csv    seq,worker,user_entries,item_entries,pair_entries
    sweeps.csv   seq,worker,users_evicted,items_evicted,pairs_evicted
    summary.txt  manifest echo plus result key = value lines
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .core import RatingEvent


def prequential_step(recommender, event: RatingEvent, n: int) -> tuple[int, int]:
    """Score the event against the current model, then train on it.

    Returns ``(hit, recommendation list length)``. The ordering is the
    point: an event can never be a hit by virtue of its own training.
    """
    rec_list = recommender.recommend(event.user_id, n)
    hit = 1 if event.item_id in rec_list else 0
    recommender.learn(event)
    return hit, len(rec_list)


def moving_average(hits, window: int) -> np.ndarray:
    """Trailing mean over at most ``window`` positions.

    Position ``i`` averages the last ``min(i + 1, window)`` hits, so the
    series is defined from the first event on.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    h = np.asarray(hits, dtype=np.float64)
    if h.size == 0:
        return h
    csum = np.concatenate([[0.0], np.cumsum(h)])
    upper = csum[1:]
    tail = max(0, h.size - window)
    lower = np.concatenate([np.zeros(min(window, h.size)), csum[1:tail + 1]])
    width = np.minimum(np.arange(1, h.size + 1), window)
    return (upper - lower) / width


@dataclass(frozen=True, slots=True)
class StateSnapshot:
    seq: int
    worker: int
    user_entries: int
    item_entries: int
    pair_entries: int


@dataclass(frozen=True, slots=True)
class SweepLogEntry:
    seq: int
    worker: int
    users_evicted: int
    items_evicted: int
    pairs_evicted: int


@dataclass
class MetricsReport:
    """Aggregated output of one engine run."""

    hits: np.ndarray
    workers: np.ndarray
    rec_list_lens: np.ndarray
    latencies_ns: np.ndarray
    window: int
    warmup_fraction: float
    n_workers: int
    throughput_eps: float
    state_snapshots: list[StateSnapshot] = field(default_factory=list)
    sweep_log: list[SweepLogEntry] = field(default_factory=list)

    @property
    def n_events(self) -> int:
        return int(self.hits.size)

    @property
    def warmup_events(self) -> int:
        return int(self.n_events * self.warmup_fraction)

    @property
    def cumulative_recall(self) -> float:
        return float(self.hits.mean()) if self.n_events else 0.0

    @property
    def post_warmup_recall(self) -> float:
        tail = self.hits[self.warmup_events:]
        return float(tail.mean()) if tail.size else 0.0

    @property
    def warmup_recall(self) -> float:
        head = self.hits[:self.warmup_events]
        return float(head.mean()) if head.size else 0.0

    def moving_avg(self) -> np.ndarray:
        return moving_average(self.hits, self.window)

    def recall_series(self):
        """(seq, hit, moving_avg) triples in stream order."""
        ma = self.moving_avg()
        for seq in range(self.n_events):
            yield seq, int(self.hits[seq]), float(ma[seq])

    def latency_percentiles_ns(self) -> tuple[int, int, int]:
        if self.latencies_ns.size == 0:
            return 0, 0, 0
        p50, p95, p99 = np.percentile(self.latencies_ns, [50, 95, 99])
        return int(p50), int(p95), int(p99)

    def final_state_totals(self) -> tuple[int, int, int]:
        """Sums of (user, item, pair) entries across workers at the last snapshot."""
        if not self.state_snapshots:
            return 0, 0, 0
        last_seq = max(s.seq for s in self.state_snapshots)
        rows = [s for s in self.state_snapshots if s.seq == last_seq]
        return (
            sum(s.user_entries for s in rows),
            sum(s.item_entries for s in rows),
            sum(s.pair_entries for s in rows),
        )


def snapshot_counts(recommenders: dict) -> list[tuple[int, int, int, int]]:
    """(worker, users, items, pairs) rows for a mapping worker -> recommender."""
    return [(worker, *rec.state_counts()) for worker, rec in sorted(recommenders.items())]


def write_run_outputs(outdir: str | Path, report: MetricsReport, manifest_text: str,
                      *, end_time: str = "", elapsed_s: float = 0.0) -> None:
    """Write the four run files. CSV bodies are deterministic for a fixed
    config and stream; summary.txt carries the wall-clock figures."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    ma = report.moving_avg()
    with open(out / "recall.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("seq,worker,hit,moving_avg\n")
        write = fh.write
        workers = report.workers
        hits = report.hits
        for seq in range(report.n_events):
            write(f"{seq},{workers[seq]},{hits[seq]},{ma[seq]:.6f}\n")
    with open(out / "state.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("seq,worker,user_entries,item_entries,pair_entries\n")
        for s in sorted(report.state_snapshots, key=lambda s: (s.seq, s.worker)):
            fh.write(f"{s.seq},{s.worker},{s.user_entries},{s.item_entries},{s.pair_entries}\n")
    with open(out / "sweeps.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write("seq,worker,users_evicted,items_evicted,pairs_evicted\n")
        for s in sorted(report.sweep_log, key=lambda s: (s.seq, s.worker)):
            fh.write(f"{s.seq},{s.worker},{s.users_evicted},{s.items_evicted},{s.pairs_evicted}\n")
    p50, p95, p99 = report.latency_percentiles_ns()
    users, items, pairs = report.final_state_totals()
    with open(out / "summary.txt", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(manifest_text)
        if not manifest_text.endswith("\n"):
            fh.write("\n")
        fh.write("[results]\n")
        fh.write(f"events = {report.n_events}\n")
        fh.write(f"workers = {report.n_workers}\n")
        fh.write(f"cumulative_recall = {report.cumulative_recall:.6f}\n")
        fh.write(f"warmup_events = {report.warmup_events}\n")
        fh.write(f"warmup_recall = {report.warmup_recall:.6f}\n")
        fh.write(f"post_warmup_recall = {report.post_warmup_recall:.6f}\n")
        fh.write(f"throughput_eps = {report.throughput_eps:.2f}\n")
        fh.write(f"latency_p50_ns = {p50}\n")
        fh.write(f"latency_p95_ns = {p95}\n")
        fh.write(f"latency_p99_ns = {p99}\n")
        fh.write(f"sweeps = {len(report.sweep_log)}\n")
        fh.write(f"final_state_users = {users}\n")
        fh.write(f"final_state_items = {items}\n")
        fh.write(f"final_state_pairs = {pairs}\n")
        fh.write(f"end_time = {end_time}\n")
        fh.write(f"elapsed_s = {elapsed_s:.3f}\n")
