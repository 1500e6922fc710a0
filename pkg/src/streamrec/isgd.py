"""Incremental matrix-factorization recommender (single-pass SGD).

The model keeps one latent vector per user and per item. Each rating event
is consumed exactly once: the prediction error ``err = 1 - U_u . I_i`` (the
stream is positive-only, so the target is always 1) drives one gradient
step

    U_u <- U_u + eta * (err * I_i - lam * U_u)
    I_i <- I_i + eta * (err * U_u - lam * I_i)

By default both updates use the pre-step vectors (simultaneous form);
``sequential_update=True`` feeds the already-updated user vector into the
item step instead.

Item vectors live in one dense matrix so ranking all local candidates is a
single matrix-vector product per event.
"""

from __future__ import annotations

import numpy as np

from .core import Rng, UnknownEntityError

_INIT_STD = 0.1  # stddev of the Normal(0, 0.1) vector initialization


class FactorModel:
    """Per-worker latent-factor state: vectors, seen sets, usage metadata.

    Single-owner: exactly one worker thread may read or write an instance.
    """

    def __init__(self, k: int, eta: float, lam: float, *,
                 sequential_update: bool = False,
                 rank_by_distance_to_one: bool = False):
        self.k = k
        self.eta = eta
        self.lam = lam
        self.sequential_update = sequential_update
        self.rank_by_distance_to_one = rank_by_distance_to_one
        self.user_vectors: dict[int, np.ndarray] = {}
        self.seen: dict[int, set[int]] = {}
        # usage: entity id -> [event frequency, last event timestamp]
        self.user_usage: dict[int, list[int]] = {}
        self.item_usage: dict[int, list[int]] = {}
        self._item_row: dict[int, int] = {}
        self._row_ids = np.empty(16, dtype=np.int64)
        self._mat = np.empty((16, k), dtype=np.float64)
        self._n_items = 0

    # -- introspection -------------------------------------------------

    @property
    def n_users(self) -> int:
        return len(self.user_vectors)

    @property
    def n_items(self) -> int:
        return self._n_items

    def state_counts(self) -> tuple[int, int, int]:
        """(user entries, item entries, pair entries); pairs are always 0 here."""
        return len(self.user_vectors), self._n_items, 0

    def item_ids(self) -> list[int]:
        return [int(i) for i in self._row_ids[:self._n_items]]

    def item_vector(self, item_id: int) -> np.ndarray:
        row = self._item_row.get(item_id)
        if row is None:
            raise UnknownEntityError(f"item {item_id} has no vector")
        return self._mat[row]

    # -- learning ------------------------------------------------------

    def ensure_vectors(self, rng: Rng, user_id: int, item_id: int) -> None:
        """Create missing vectors with iid Normal(0, 0.1) entries.

        Idempotent on hit. When both are missing the user vector is drawn
        first, so replays with the same seed reproduce the same state.
        """
        if user_id not in self.user_vectors:
            self.user_vectors[user_id] = rng.normal(0.0, _INIT_STD, self.k)
            self.seen[user_id] = set()
            self.user_usage[user_id] = [0, 0]
        if item_id not in self._item_row:
            if self._n_items == len(self._row_ids):
                self._grow()
            row = self._n_items
            self._mat[row] = rng.normal(0.0, _INIT_STD, self.k)
            self._row_ids[row] = item_id
            self._item_row[item_id] = row
            self._n_items += 1
            self.item_usage[item_id] = [0, 0]

    def predict(self, user_id: int, item_id: int) -> float:
        u = self.user_vectors.get(user_id)
        if u is None:
            raise UnknownEntityError(f"user {user_id} has no vector")
        return float(u @ self.item_vector(item_id))

    def train(self, user_id: int, item_id: int, timestamp: int = 0) -> None:
        """One gradient step for this (user, item) pair; vectors must exist."""
        u = self.user_vectors[user_id]
        row = self._item_row[item_id]
        iv = self._mat[row]
        eta, lam = self.eta, self.lam
        err = 1.0 - float(u @ iv)
        if self.sequential_update:
            u += eta * (err * iv - lam * u)
            iv += eta * (err * u - lam * iv)
        else:
            new_u = u + eta * (err * iv - lam * u)
            iv += eta * (err * u - lam * iv)
            self.user_vectors[user_id] = new_u
        self.seen[user_id].add(item_id)
        self._bump(self.user_usage[user_id], timestamp)
        self._bump(self.item_usage[item_id], timestamp)

    @staticmethod
    def _bump(usage: list[int], timestamp: int) -> None:
        usage[0] += 1
        usage[1] = timestamp

    # -- recommendation ------------------------------------------------

    def recommend(self, user_id: int, n: int) -> list[int]:
        """Top ``n`` unseen local items for this user.

        Ranked by predicted score descending (or by closeness of the score
        to 1 when ``rank_by_distance_to_one`` is set); ties break on
        ascending item id. Unknown users get an empty list.
        """
        u = self.user_vectors.get(user_id)
        if u is None or self._n_items == 0:
            return []
        scores = self._mat[:self._n_items] @ u
        ids = self._row_ids[:self._n_items]
        seen = self.seen.get(user_id)
        if seen:
            keep = np.ones(self._n_items, dtype=bool)
            for item in seen:
                keep[self._item_row[item]] = False
            scores = scores[keep]
            ids = ids[keep]
        if ids.size == 0:
            return []
        key = -np.abs(1.0 - scores) if self.rank_by_distance_to_one else scores
        order = np.lexsort((ids, -key))
        return [int(i) for i in ids[order[:n]]]

    # -- forgetting support ---------------------------------------------

    def evict(self, users: set[int], items: set[int]) -> None:
        """Remove the given entities and every structure referencing them.

        Surviving vectors are untouched (rows are moved, never recomputed).
        """
        for user in users:
            self.user_vectors.pop(user, None)
            self.seen.pop(user, None)
            self.user_usage.pop(user, None)
        live_items = items & self._item_row.keys()
        if live_items:
            keep = np.ones(self._n_items, dtype=bool)
            for item in live_items:
                keep[self._item_row.pop(item)] = False
                self.item_usage.pop(item, None)
            self._mat[:keep.sum()] = self._mat[:self._n_items][keep]
            self._row_ids[:keep.sum()] = self._row_ids[:self._n_items][keep]
            self._n_items = int(keep.sum())
            self._item_row = {int(i): r for r, i in enumerate(self._row_ids[:self._n_items])}
            for seen in self.seen.values():
                seen -= live_items

    def _grow(self) -> None:
        cap = max(16, 2 * len(self._row_ids))
        new_ids = np.empty(cap, dtype=np.int64)
        new_mat = np.empty((cap, self.k), dtype=np.float64)
        new_ids[:self._n_items] = self._row_ids[:self._n_items]
        new_mat[:self._n_items] = self._mat[:self._n_items]
        self._row_ids = new_ids
        self._mat = new_mat
