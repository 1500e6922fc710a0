"""Shared-nothing multi-worker runtime.

One router (the calling thread) hashes each event to its worker and pushes
it down a bounded queue; worker threads own their models outright and
alternate recommend -> record hit -> train -> forgetting check per event; a
single sink thread collects per-event records and telemetry rows. Nothing
mutable is ever shared between workers, so a run is reproducible from the
seed and the stream alone, regardless of thread scheduling.

When fewer OS threads than workers are available (``STREAMREC_THREADS``),
workers are time-multiplexed: a thread owns a fixed subset of worker ids
and drains one merged queue. Per-worker event order and per-worker RNG
streams are unchanged, so results are identical to the one-thread-per-worker
layout.
"""

from __future__ import annotations

import os
import queue
import threading
import time
import traceback
from dataclasses import dataclass

import numpy as np

from .core import ConfigError, EngineConfig, EngineError, RatingEvent, Rng, worker_rng
from .cosine import SimilarityModel
from .evaluation import MetricsReport, StateSnapshot, SweepLogEntry, prequential_step
from .forgetting import ForgettingPolicy, should_sweep, sweep
from .isgd import FactorModel
from .router import RoutingPlan, route

THREADS_ENV = "STREAMREC_THREADS"


@dataclass(frozen=True, slots=True)
class WorkerEnvelope:
    event: RatingEvent
    worker: int


@dataclass(frozen=True, slots=True)
class EvalRecord:
    seq: int
    worker: int
    hit: int
    rec_list_len: int
    latency_ns: int
    event_time: int


class IsgdRecommender:
    """Factor model bound to its worker RNG behind the score/learn protocol."""

    def __init__(self, cfg: EngineConfig, rng: Rng):
        self.model = FactorModel(cfg.k, cfg.eta, cfg.lam,
                                 sequential_update=cfg.sequential_update,
                                 rank_by_distance_to_one=cfg.rank_by_distance_to_one)
        self.rng = rng

    def recommend(self, user_id: int, n: int) -> list[int]:
        return self.model.recommend(user_id, n)

    def learn(self, event: RatingEvent) -> None:
        self.model.ensure_vectors(self.rng, event.user_id, event.item_id)
        self.model.train(event.user_id, event.item_id, event.timestamp)

    def state_counts(self):
        return self.model.state_counts()


class DicsRecommender:
    """Item-cosine model behind the same protocol (no RNG needed)."""

    def __init__(self, cfg: EngineConfig, rng: Rng):
        self.model = SimilarityModel(neighbors_k=cfg.neighbors_k)
        self.rng = rng

    def recommend(self, user_id: int, n: int) -> list[int]:
        return self.model.recommend(user_id, n)

    def learn(self, event: RatingEvent) -> None:
        self.model.update(event.user_id, event.item_id, event.rating, event.timestamp)

    def state_counts(self):
        return self.model.state_counts()


def make_recommender(cfg: EngineConfig, worker_id: int):
    rng = worker_rng(cfg.seed, worker_id)
    if cfg.algo == "isgd":
        return IsgdRecommender(cfg, rng)
    return DicsRecommender(cfg, rng)


class _WorkerState:
    """Everything one logical worker owns: model, forgetting counters."""

    __slots__ = ("worker_id", "recommender", "policy", "events_since_sweep", "last_sweep_time")

    def __init__(self, worker_id: int, cfg: EngineConfig):
        self.worker_id = worker_id
        self.recommender = make_recommender(cfg, worker_id)
        self.policy: ForgettingPolicy = cfg.forgetting
        self.events_since_sweep = 0
        self.last_sweep_time: int | None = None

    def process(self, event: RatingEvent, top_n: int, hooks=None):
        """recommend -> hit -> train, then run the forgetting check.

        Returns (EvalRecord, SweepLogEntry | None).
        """
        t0 = time.perf_counter_ns()
        hit, rec_len = prequential_step(self.recommender, event, top_n)
        latency = time.perf_counter_ns() - t0
        record = EvalRecord(event.seq, self.worker_id, hit, rec_len, latency, event.timestamp)
        if self.last_sweep_time is None:
            self.last_sweep_time = event.timestamp
        self.events_since_sweep += 1
        swept = None
        if should_sweep(self.policy, self.events_since_sweep, event.timestamp, self.last_sweep_time):
            report = sweep(self.policy, self.recommender.model, event.timestamp)
            self.events_since_sweep = 0
            self.last_sweep_time = event.timestamp
            swept = SweepLogEntry(event.seq, self.worker_id, report.users_evicted,
                                  report.items_evicted, report.pairs_evicted)
            if hooks is not None:
                hooks.on_sweep(self.worker_id, self.recommender.model, self.policy, event.timestamp)
        return record, swept


def resolve_thread_count(n_c: int, max_threads: int | None = None) -> int:
    if max_threads is None:
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                max_threads = int(env)
            except ValueError as exc:
                raise ConfigError(f"{THREADS_ENV} must be an integer, got {env!r}") from exc
    if max_threads is None:
        return n_c
    if max_threads < 1:
        raise ConfigError(f"thread cap must be >= 1, got {max_threads}")
    return min(n_c, max_threads)


def _worker_main(states: dict[int, _WorkerState], inbox: queue.Queue, sink: queue.Queue,
                 top_n: int, hooks, abort: threading.Event) -> None:
    failed = False
    while True:
        msg = inbox.get()
        tag = msg[0]
        if tag == "stop":
            break
        if failed:
            continue  # drain so the router can never block against a dead worker
        if tag == "evt":
            envelope: WorkerEnvelope = msg[1]
            state = states[envelope.worker]
            try:
                record, swept = state.process(envelope.event, top_n, hooks)
            except Exception:
                failed = True
                abort.set()
                sink.put(("err", envelope.worker, traceback.format_exc()))
                continue
            sink.put(("rec", record))
            if swept is not None:
                sink.put(("sweep", swept))
        elif tag == "snap":
            seq = msg[1]
            for worker_id in sorted(states):
                users, items, pairs = states[worker_id].recommender.state_counts()
                sink.put(("state", StateSnapshot(seq, worker_id, users, items, pairs)))
    sink.put(("done",))


def _sink_main(sink: queue.Queue, n_threads: int, out: dict) -> None:
    records = []
    snapshots = []
    sweeps = []
    errors = []
    done = 0
    last_record_at = None
    while done < n_threads:
        msg = sink.get()
        tag = msg[0]
        if tag == "rec":
            records.append(msg[1])
            last_record_at = time.perf_counter()
        elif tag == "state":
            snapshots.append(msg[1])
        elif tag == "sweep":
            sweeps.append(msg[1])
        elif tag == "err":
            errors.append(msg)
        elif tag == "done":
            done += 1
    out["records"] = records
    out["snapshots"] = snapshots
    out["sweeps"] = sweeps
    out["errors"] = errors
    out["last_record_at"] = last_record_at


def _build_report(records: list[EvalRecord], snapshots, sweeps, cfg: EngineConfig,
                  throughput_eps: float) -> MetricsReport:
    records.sort(key=lambda r: r.seq)
    n = len(records)
    hits = np.fromiter((r.hit for r in records), dtype=np.uint8, count=n)
    workers = np.fromiter((r.worker for r in records), dtype=np.int32, count=n)
    lens = np.fromiter((r.rec_list_len for r in records), dtype=np.int32, count=n)
    lats = np.fromiter((r.latency_ns for r in records), dtype=np.int64, count=n)
    return MetricsReport(
        hits=hits,
        workers=workers,
        rec_list_lens=lens,
        latencies_ns=lats,
        window=cfg.window,
        warmup_fraction=cfg.warmup_fraction,
        n_workers=cfg.n_c,
        throughput_eps=throughput_eps,
        state_snapshots=sorted(snapshots, key=lambda s: (s.seq, s.worker)),
        sweep_log=sorted(sweeps, key=lambda s: (s.seq, s.worker)),
    )


def run(cfg: EngineConfig, stream, *, hooks=None, max_threads: int | None = None) -> MetricsReport:
    """Run one configuration over an ordered event stream.

    Every event is dispatched to exactly one worker; the merged report is
    gap-free in ``seq``. Raises ConfigError before any processing on a bad
    config, and EngineError (carrying the partial report) if a worker dies.
    """
    cfg.validate()
    plan = RoutingPlan.from_replication(cfg.n_i, cfg.w)
    n_threads = resolve_thread_count(plan.n_c, max_threads)

    states = {w: _WorkerState(w, cfg) for w in range(plan.n_c)}
    inboxes = [queue.Queue(maxsize=cfg.queue_capacity) for _ in range(n_threads)]
    sink: queue.Queue = queue.Queue(maxsize=max(cfg.queue_capacity, 4 * plan.n_c))
    abort = threading.Event()
    sink_out: dict = {}

    threads = []
    for t in range(n_threads):
        owned = {w: states[w] for w in range(plan.n_c) if w % n_threads == t}
        thread = threading.Thread(target=_worker_main,
                                  args=(owned, inboxes[t], sink, cfg.top_n, hooks, abort),
                                  name=f"worker-{t}", daemon=True)
        thread.start()
        threads.append(thread)
    sink_thread = threading.Thread(target=_sink_main, args=(sink, n_threads, sink_out),
                                   name="metrics-sink", daemon=True)
    sink_thread.start()

    t_start = time.perf_counter()
    dispatched = 0
    last_seq = -1
    snapped_at = -1
    for event in stream:
        if abort.is_set():
            break
        worker = route(plan, event.user_id, event.item_id)
        inboxes[worker % n_threads].put(("evt", WorkerEnvelope(event, worker)))
        dispatched += 1
        last_seq = event.seq
        if (event.seq + 1) % cfg.telemetry_every == 0:
            snapped_at = event.seq
            for inbox in inboxes:
                inbox.put(("snap", event.seq))
    if last_seq >= 0 and snapped_at != last_seq:
        for inbox in inboxes:
            inbox.put(("snap", last_seq))
    for inbox in inboxes:
        inbox.put(("stop",))
    for thread in threads:
        thread.join()
    sink_thread.join()

    errors = sink_out["errors"]
    records = sink_out["records"]
    elapsed = (sink_out["last_record_at"] or t_start) - t_start
    throughput = len(records) / elapsed if elapsed > 0 and records else 0.0
    report = _build_report(records, sink_out["snapshots"], sink_out["sweeps"], cfg, throughput)
    if errors:
        _, worker, tb = errors[0]
        raise EngineError(f"worker {worker} failed:\n{tb}", partial_report=report)
    seqs = [r.seq for r in records]
    contiguous = not seqs or seqs == list(range(seqs[0], seqs[0] + len(seqs)))
    if len(seqs) != dispatched or not contiguous:
        raise EngineError(f"metric stream has gaps: {len(seqs)} records for "
                          f"{dispatched} dispatched events", partial_report=report)
    return report


def run_reference(cfg: EngineConfig, stream, *, hooks=None) -> MetricsReport:
    """Single-threaded oracle: one worker, no queues, same seed derivation.

    For ``n_i=1, w=0`` the threaded engine must produce an identical hit
    sequence; used by the self-checks and by tests.
    """
    cfg.validate()
    if cfg.n_c != 1:
        raise ConfigError(f"reference runner is single-worker; got n_c={cfg.n_c}")
    state = _WorkerState(0, cfg)
    records = []
    sweeps = []
    snapshots = []
    t_start = time.perf_counter()
    last_seq = -1
    snapped_at = -1

    def snap(seq):
        users, items, pairs = state.recommender.state_counts()
        snapshots.append(StateSnapshot(seq, 0, users, items, pairs))

    for event in stream:
        record, swept = state.process(event, cfg.top_n, hooks)
        records.append(record)
        if swept is not None:
            sweeps.append(swept)
        last_seq = event.seq
        if (event.seq + 1) % cfg.telemetry_every == 0:
            snapped_at = event.seq
            snap(event.seq)
    if last_seq >= 0 and snapped_at != last_seq:
        snap(last_seq)
    elapsed = time.perf_counter() - t_start
    throughput = len(records) / elapsed if elapsed > 0 and records else 0.0
    return _build_report(records, snapshots, sweeps, cfg, throughput)
