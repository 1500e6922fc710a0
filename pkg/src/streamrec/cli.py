"""Experiment runner CLI.

Three subcommands:

* ``run``        one configuration end to end, writing a self-describing
                 run directory (manifest.txt, recall.csv, state.csv,
                 sweeps.csv, summary.txt).
* ``sweep-grid`` a file of configurations run sequentially into sibling
                 directories plus a combined comparison.csv.
* ``validate``   the built-in oracle suites.

Flag values override config-file values, which override defaults. The
``STREAMREC_THREADS`` environment variable caps worker parallelism without
changing results.
"""

from __future__ import annotations

import argparse
import shlex
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .core import (ConfigError, EngineConfig, EngineError, StreamrecError,
                   config_from_mapping, config_to_mapping, parse_config_file,
                   parse_config_text)
from .engine import run as engine_run
from .evaluation import write_run_outputs
from .ingest import SyntheticSpec, load_movielens, load_netflix, preprocess, synthetic_ratings
from .validate import SUITES, run_suites

DATASET_FORMATS = ("movielens", "netflix", "synthetic")


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a run, frozen before processing."""

    config: EngineConfig
    dataset: str
    dataset_format: str
    min_rating: float
    out_dir: str
    start_time: str
    build: str = f"streamrec {__version__}"

    def to_text(self) -> str:
        lines = ["[manifest]",
                 f"build = {self.build}",
                 f"start_time = {self.start_time}",
                 f"dataset = {self.dataset}",
                 f"dataset_format = {self.dataset_format}",
                 f"min_rating = {self.min_rating}",
                 f"out_dir = {self.out_dir}",
                 "[config]"]
        lines += [f"{k} = {v}" for k, v in config_to_mapping(self.config).items()]
        return "\n".join(lines) + "\n"


def _utcnow() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file; flags override it")
    p.add_argument("--algo", choices=["isgd", "dics"])
    p.add_argument("--ni", type=int, help="replication factor (item split count)")
    p.add_argument("--w", type=int, help="width spare: extra user columns beyond ni")
    p.add_argument("--k", type=int, help="latent dimension")
    p.add_argument("--eta", type=float, help="learning rate")
    p.add_argument("--lambda", dest="lam", type=float, help="regularization weight")
    p.add_argument("--topn", type=int, help="recommendation list size (default 10)")
    p.add_argument("--window", type=int, help="moving-average width (default 5000)")
    p.add_argument("--neighbors-k", type=int, help="neighborhood size for dics (default 10)")
    p.add_argument("--forgetting", choices=["none", "lru", "lfu"])
    p.add_argument("--lfu-trigger", type=int, help="events between LFU sweeps")
    p.add_argument("--lfu-min-freq", type=int, help="LFU retention threshold")
    p.add_argument("--lfu-min-freq-users", type=int, help="per-class override")
    p.add_argument("--lfu-min-freq-items", type=int, help="per-class override")
    p.add_argument("--lru-interval", type=int, help="event-time seconds between LRU sweeps")
    p.add_argument("--lru-max-age", type=int, help="LRU retention threshold (event-time seconds)")
    p.add_argument("--lru-max-age-users", type=int, help="per-class override")
    p.add_argument("--lru-max-age-items", type=int, help="per-class override")
    p.add_argument("--seed", type=int)
    p.add_argument("--telemetry-every", type=int, help="snapshot period in events (default 5000)")
    p.add_argument("--queue-capacity", type=int, help="router-to-worker queue size (default 4096)")
    p.add_argument("--warmup-fraction", type=float, help="tuning prefix fraction (default 0.2)")
    p.add_argument("--sequential-update", action="store_true", default=None,
                   help="feed the updated user vector into the item step")
    p.add_argument("--rank-by-distance-to-one", action="store_true", default=None,
                   help="rank isgd candidates by |1 - score| ascending")


_FLAG_TO_KEY = {
    "algo": "algo", "ni": "ni", "w": "w", "k": "k", "eta": "eta", "lam": "lambda",
    "topn": "topn", "window": "window", "neighbors_k": "neighbors_k",
    "forgetting": "forgetting", "lfu_trigger": "lfu_trigger",
    "lfu_min_freq": "lfu_min_freq", "lfu_min_freq_users": "lfu_min_freq_users",
    "lfu_min_freq_items": "lfu_min_freq_items", "lru_interval": "lru_interval",
    "lru_max_age": "lru_max_age", "lru_max_age_users": "lru_max_age_users",
    "lru_max_age_items": "lru_max_age_items", "seed": "seed",
    "telemetry_every": "telemetry_every", "queue_capacity": "queue_capacity",
    "warmup_fraction": "warmup_fraction", "sequential_update": "sequential_update",
    "rank_by_distance_to_one": "rank_by_distance_to_one",
}


def _resolve_config(args: argparse.Namespace) -> EngineConfig:
    values: dict = {}
    if args.config:
        values.update(parse_config_file(args.config))
    for attr, key in _FLAG_TO_KEY.items():
        flag_value = getattr(args, attr, None)
        if flag_value is not None:
            values[key] = flag_value
    return config_from_mapping(values)


def _load_events(dataset: str, fmt: str, min_rating: float, allowlist: str | None):
    if fmt == "movielens":
        return preprocess(load_movielens(dataset), min_rating)
    if fmt == "netflix":
        return preprocess(load_netflix(dataset, allowlist), min_rating)
    return preprocess(synthetic_ratings(SyntheticSpec.parse(dataset)), min_rating)


def _execute_run(cfg: EngineConfig, dataset: str, fmt: str, min_rating: float,
                 allowlist: str | None, out_dir: Path) -> tuple[int, dict]:
    """Run one configuration; returns (exit code, row for comparison CSVs)."""
    events = _load_events(dataset, fmt, min_rating, allowlist)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config=cfg, dataset=dataset, dataset_format=fmt,
                           min_rating=min_rating, out_dir=str(out_dir),
                           start_time=_utcnow())
    (out_dir / "manifest.txt").write_text(manifest.to_text(), encoding="utf-8")
    started = time.perf_counter()
    try:
        report = engine_run(cfg, events)
    except EngineError as exc:
        if exc.partial_report is not None:
            write_run_outputs(out_dir, exc.partial_report, manifest.to_text(),
                              end_time=_utcnow(),
                              elapsed_s=time.perf_counter() - started)
        print(f"error: {exc}", file=sys.stderr)
        return 1, {}
    write_run_outputs(out_dir, report, manifest.to_text(), end_time=_utcnow(),
                      elapsed_s=time.perf_counter() - started)
    users, items, pairs = report.final_state_totals()
    mean_state = (users + items + pairs) / report.n_workers if report.n_workers else 0.0
    row = {
        "algo": cfg.algo, "ni": cfg.n_i, "w": cfg.w, "forgetting": cfg.forgetting.kind,
        "events": report.n_events,
        "cumulative_recall": f"{report.cumulative_recall:.6f}",
        "post_warmup_recall": f"{report.post_warmup_recall:.6f}",
        "throughput_eps": f"{report.throughput_eps:.2f}",
        "mean_state_entries": f"{mean_state:.2f}",
    }
    print(f"{out_dir}: events={report.n_events} recall={report.cumulative_recall:.4f} "
          f"post_warmup={report.post_warmup_recall:.4f} "
          f"throughput={report.throughput_eps:.0f}/s")
    return 0, row


def _cmd_run(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    try:
        cfg = _resolve_config(args)
    except ConfigError as exc:
        parser.error(str(exc))
    try:
        code, _ = _execute_run(cfg, args.dataset, args.format, args.min_rating,
                               args.allowlist, Path(args.out))
        return code
    except StreamrecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def _parse_grid_file(path: Path) -> list[tuple[str, dict]]:
    rows = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = shlex.split(line)
        name = None
        values = {}
        for token in tokens:
            if "=" not in token:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {token!r}")
            key, _, value = token.partition("=")
            if key == "name":
                name = value
            else:
                values[key] = value
        if name is None:
            raise ConfigError(f"{path}:{lineno}: every grid row needs a name=<run-name>")
        rows.append((name, values))
    return rows


def _cmd_sweep_grid(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    grid_path = Path(args.grid)
    if not grid_path.is_file():
        parser.error(f"grid file not found: {grid_path}")
    try:
        rows = _parse_grid_file(grid_path)
    except ConfigError as exc:
        parser.error(str(exc))
    if not rows:
        parser.error(f"grid file {grid_path} lists no configurations")
    out_root = Path(args.out)
    out_root.mkdir(parents=True, exist_ok=True)
    failures = 0
    results = []
    for name, raw_values in rows:
        try:
            values = parse_config_text("\n".join(f"{k} = {v}" for k, v in raw_values.items()),
                                       source=f"{grid_path}:{name}")
            cfg = config_from_mapping(values)
            code, row = _execute_run(cfg, args.dataset, args.format, args.min_rating,
                                     args.allowlist, out_root / name)
        except (StreamrecError, OSError) as exc:
            print(f"error in {name}: {exc}", file=sys.stderr)
            code, row = 1, {}
        if code != 0:
            failures += 1
            results.append((name, {"status": "failed"}))
        else:
            row["status"] = "ok"
            results.append((name, row))
    columns = ["name", "algo", "ni", "w", "forgetting", "events", "cumulative_recall",
               "post_warmup_recall", "throughput_eps", "mean_state_entries", "status"]
    with open(out_root / "comparison.csv", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(columns) + "\n")
        for name, row in results:
            fh.write(",".join(str(row.get(col, "")) if col != "name" else name
                              for col in columns) + "\n")
    print(f"{out_root / 'comparison.csv'}: {len(results)} rows, {failures} failed")
    return 1 if failures else 0


def _cmd_validate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    results = run_suites(names, debug_sim_offset=args.debug_sim_offset)
    for result in results:
        print(result.line())
    return 0 if all(r.passed for r in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="streamrec",
                                     description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configuration end to end")
    _add_config_flags(p_run)
    p_run.add_argument("--dataset", required=True,
                       help="ratings file / netflix dir / synthetic spec string")
    p_run.add_argument("--format", choices=DATASET_FORMATS, required=True)
    p_run.add_argument("--min-rating", type=float, default=5.0,
                       help="keep ratings >= this before binarization (default 5.0)")
    p_run.add_argument("--allowlist", help="netflix: file of movie ids to keep")
    p_run.add_argument("--out", required=True, help="run output directory")

    p_grid = sub.add_parser("sweep-grid", help="run every configuration in a grid file")
    p_grid.add_argument("--grid", required=True,
                        help="text file: one run per line, 'name=<run> key=value ...'")
    p_grid.add_argument("--dataset", required=True)
    p_grid.add_argument("--format", choices=DATASET_FORMATS, required=True)
    p_grid.add_argument("--min-rating", type=float, default=5.0)
    p_grid.add_argument("--allowlist")
    p_grid.add_argument("--out", required=True, help="root directory for run subdirectories")

    p_val = sub.add_parser("validate", help="run the built-in oracle suites")
    p_val.add_argument("--suite", choices=["all", *SUITES], default="all")
    p_val.add_argument("--debug-sim-offset", type=float, default=0.0,
                       help="perturb stored similarities (fault-injection hook)")

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args, parser)
    if args.command == "sweep-grid":
        return _cmd_sweep_grid(args, parser)
    return _cmd_validate(args, parser)


if __name__ == "__main__":
    sys.exit(main())
