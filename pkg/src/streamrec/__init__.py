"""Shared-nothing streaming recommender engine.

A rating stream is split across a worker grid by the (user, item) pair
while user and item representations replicate, unsynchronized, across
rows and columns of the grid. Each worker runs an incremental recommender
(matrix factorization or item-based cosine similarity) under prequential
evaluation, optionally bounding its state with LFU/LRU forgetting sweeps.
"""

__version__ = "0.1.0"

from .core import (ConfigError, EngineConfig, EngineError, FormatError,
                   ParseError, RatingEvent, UnknownEntityError,
                   derive_cluster_size, worker_rng)
from .cosine import SimilarityModel
from .engine import run, run_reference
from .evaluation import MetricsReport, moving_average, prequential_step
from .forgetting import ForgettingPolicy, SweepReport, should_sweep, sweep
from .ingest import RawRating, SyntheticSpec, load_movielens, load_netflix, preprocess
from .isgd import FactorModel
from .router import RoutingPlan, item_replica_set, route, user_replica_set

__all__ = [
    "ConfigError", "EngineConfig", "EngineError", "FactorModel", "FormatError",
    "ForgettingPolicy", "MetricsReport", "ParseError", "RatingEvent", "RawRating",
    "RoutingPlan", "SimilarityModel", "SweepReport", "SyntheticSpec",
    "UnknownEntityError", "derive_cluster_size", "item_replica_set",
    "load_movielens", "load_netflix", "moving_average", "prequential_step",
    "preprocess", "route", "run", "run_reference", "should_sweep", "sweep",
    "user_replica_set", "worker_rng", "__version__",
]
