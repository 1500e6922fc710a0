"""Shared domain types, configuration, and the deterministic RNG contract.

Everything downstream (routing, recommenders, engine, evaluation) builds on
the types defined here. Configuration can come from a flat ``key = value``
text file, from CLI flags, or both; flags win over file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .forgetting import ForgettingPolicy

Rng = np.random.Generator

ALGOS = ("isgd", "dics")


class StreamrecError(Exception):
    """Base class for all package errors."""


class ConfigError(StreamrecError):
    """Invalid engine configuration (bad value, unknown key, broken invariant)."""


class ParseError(StreamrecError):
    """A data row could not be parsed; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class FormatError(StreamrecError):
    """An input file does not match its expected layout."""


class UnknownEntityError(StreamrecError):
    """A prediction was requested for a user or item the model has never seen."""


class EngineError(StreamrecError):
    """A worker failed mid-run. ``partial_report`` holds whatever was flushed."""

    def __init__(self, message: str, partial_report=None):
        super().__init__(message)
        self.partial_report = partial_report


@dataclass(frozen=True, slots=True)
class RatingEvent:
    """One timestamped user-item feedback tuple, the unit of streaming work.

    ``seq`` is the ingestion ordinal and is strictly increasing along the
    stream; ``timestamp`` is event time (seconds since epoch) and is
    non-decreasing after preprocessing. ``rating`` is 1.0 post-binarization.
    """

    seq: int
    user_id: int
    item_id: int
    rating: float
    timestamp: int


def derive_cluster_size(n_i: int, w: int) -> int:
    """Number of workers for replication factor ``n_i`` and width spare ``w``.

    The worker pool forms an ``n_i x (n_i + w)`` grid, so the cluster size is
    ``n_i * (n_i + w)``.
    """
    if n_i < 1:
        raise ConfigError(f"n_i must be >= 1, got {n_i}")
    if w < 0:
        raise ConfigError(f"w must be >= 0, got {w}")
    return n_i * (n_i + w)


def worker_rng(seed: int, worker_id: int) -> Rng:
    """Deterministic per-worker generator.

    Derived from the run seed and the worker id only, so results do not
    depend on thread scheduling. PCG64 streams are stable across platforms
    for a fixed seed sequence.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(worker_id,)))


@dataclass(frozen=True)
class EngineConfig:
    """Resolved run configuration shared by every stage.

    ``lam`` is the L2 regularization weight and ``eta`` the learning rate of
    the factor updates; ``n_i`` and ``w`` fix the worker grid geometry.
    """

    algo: str = "isgd"
    n_i: int = 1
    w: int = 0
    k: int = 10
    eta: float = 0.05
    lam: float = 0.01
    top_n: int = 10
    window: int = 5000
    neighbors_k: int = 10
    forgetting: ForgettingPolicy = field(default_factory=ForgettingPolicy)
    seed: int = 42
    telemetry_every: int = 5000
    queue_capacity: int = 4096
    warmup_fraction: float = 0.2
    sequential_update: bool = False
    rank_by_distance_to_one: bool = False

    @property
    def n_c(self) -> int:
        return derive_cluster_size(self.n_i, self.w)

    def validate(self) -> "EngineConfig":
        problems = []
        if self.algo not in ALGOS:
            problems.append(f"algo must be one of {ALGOS}, got {self.algo!r}")
        if self.n_i < 1:
            problems.append(f"n_i must be >= 1, got {self.n_i}")
        if self.w < 0:
            problems.append(f"w must be >= 0, got {self.w}")
        if self.k < 1:
            problems.append(f"k must be >= 1, got {self.k}")
        if self.eta <= 0:
            problems.append(f"eta must be > 0, got {self.eta}")
        if self.lam < 0:
            problems.append(f"lambda must be >= 0, got {self.lam}")
        if self.top_n < 1:
            problems.append(f"topn must be >= 1, got {self.top_n}")
        if self.window < 1:
            problems.append(f"window must be >= 1, got {self.window}")
        if self.neighbors_k < 1:
            problems.append(f"neighbors_k must be >= 1, got {self.neighbors_k}")
        if self.telemetry_every < 1:
            problems.append(f"telemetry_every must be >= 1, got {self.telemetry_every}")
        if self.queue_capacity < 1:
            problems.append(f"queue_capacity must be >= 1, got {self.queue_capacity}")
        if not 0.0 <= self.warmup_fraction < 1.0:
            problems.append(f"warmup_fraction must be in [0, 1), got {self.warmup_fraction}")
        try:
            self.forgetting.validate()
        except ConfigError as exc:
            problems.append(str(exc))
        if problems:
            raise ConfigError("; ".join(problems))
        return self


# Flat config-file keys. Every EngineConfig field (forgetting included) is
# addressable; CLI flags use the same spellings with dashes.
_BOOL_TRUE = {"true", "1", "yes", "on"}
_BOOL_FALSE = {"false", "0", "no", "off"}


def _parse_bool(value: str) -> bool:
    v = value.strip().lower()
    if v in _BOOL_TRUE:
        return True
    if v in _BOOL_FALSE:
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _parse_opt_int(value: str):
    v = value.strip().lower()
    if v in ("none", ""):
        return None
    return int(value)


_CONFIG_KEYS = {
    "algo": str,
    "ni": int,
    "w": int,
    "k": int,
    "eta": float,
    "lambda": float,
    "topn": int,
    "window": int,
    "neighbors_k": int,
    "forgetting": str,
    "lfu_trigger": int,
    "lfu_min_freq": int,
    "lfu_min_freq_users": _parse_opt_int,
    "lfu_min_freq_items": _parse_opt_int,
    "lru_interval": int,
    "lru_max_age": int,
    "lru_max_age_users": _parse_opt_int,
    "lru_max_age_items": _parse_opt_int,
    "seed": int,
    "telemetry_every": int,
    "queue_capacity": int,
    "warmup_fraction": float,
    "sequential_update": _parse_bool,
    "rank_by_distance_to_one": _parse_bool,
}


def parse_config_text(text: str, *, source: str = "<config>") -> dict:
    """Parse flat ``key = value`` lines into typed values.

    Blank lines and ``#`` comments are ignored. Unknown keys and untypable
    values raise ConfigError naming the offending line.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](val)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def parse_config_file(path: str | Path) -> dict:
    return parse_config_text(Path(path).read_text(encoding="utf-8"), source=str(path))


def config_from_mapping(values: dict) -> EngineConfig:
    """Build a validated EngineConfig from flat config keys."""
    unknown = set(values) - set(_CONFIG_KEYS)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    policy_kwargs = {}
    policy_map = {
        "forgetting": "kind",
        "lfu_trigger": "lfu_trigger_count",
        "lfu_min_freq": "lfu_min_frequency",
        "lfu_min_freq_users": "lfu_min_frequency_users",
        "lfu_min_freq_items": "lfu_min_frequency_items",
        "lru_interval": "lru_trigger_interval",
        "lru_max_age": "lru_max_age",
        "lru_max_age_users": "lru_max_age_users",
        "lru_max_age_items": "lru_max_age_items",
    }
    field_map = {
        "algo": "algo",
        "ni": "n_i",
        "w": "w",
        "k": "k",
        "eta": "eta",
        "lambda": "lam",
        "topn": "top_n",
        "window": "window",
        "neighbors_k": "neighbors_k",
        "seed": "seed",
        "telemetry_every": "telemetry_every",
        "queue_capacity": "queue_capacity",
        "warmup_fraction": "warmup_fraction",
        "sequential_update": "sequential_update",
        "rank_by_distance_to_one": "rank_by_distance_to_one",
    }
    cfg_kwargs = {}
    for key, value in values.items():
        if key in policy_map:
            policy_kwargs[policy_map[key]] = value
        else:
            cfg_kwargs[field_map[key]] = value
    if policy_kwargs:
        cfg_kwargs["forgetting"] = replace(ForgettingPolicy(), **policy_kwargs)
    return EngineConfig(**cfg_kwargs).validate()


def config_to_mapping(cfg: EngineConfig) -> dict:
    """Inverse of config_from_mapping; used to echo the effective config."""
    p = cfg.forgetting
    opt = lambda v: "none" if v is None else v
    return {
        "algo": cfg.algo,
        "ni": cfg.n_i,
        "w": cfg.w,
        "k": cfg.k,
        "eta": cfg.eta,
        "lambda": cfg.lam,
        "topn": cfg.top_n,
        "window": cfg.window,
        "neighbors_k": cfg.neighbors_k,
        "forgetting": p.kind,
        "lfu_trigger": p.lfu_trigger_count,
        "lfu_min_freq": p.lfu_min_frequency,
        "lfu_min_freq_users": opt(p.lfu_min_frequency_users),
        "lfu_min_freq_items": opt(p.lfu_min_frequency_items),
        "lru_interval": p.lru_trigger_interval,
        "lru_max_age": p.lru_max_age,
        "lru_max_age_users": opt(p.lru_max_age_users),
        "lru_max_age_items": opt(p.lru_max_age_items),
        "seed": cfg.seed,
        "telemetry_every": cfg.telemetry_every,
        "queue_capacity": cfg.queue_capacity,
        "warmup_fraction": cfg.warmup_fraction,
        "sequential_update": str(cfg.sequential_update).lower(),
        "rank_by_distance_to_one": str(cfg.rank_by_distance_to_one).lower(),
    }


def config_to_text(cfg: EngineConfig) -> str:
    return "\n".join(f"{k} = {v}" for k, v in config_to_mapping(cfg).items()) + "\n"
