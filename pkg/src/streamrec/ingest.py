"""Dataset loading, filtering, binarization, and ordered stream replay.

Two on-disk formats are supported plus a seeded synthetic generator:

* movielens: one CSV with header ``userId,movieId,rating,timestamp``.
* netflix: a directory of per-movie files, each starting with ``<MovieID>:``
  followed by ``CustomerID,Rating,Date`` rows (dates are ``YYYY-MM-DD`` and
  become midnight-UTC epoch seconds).

Loaders yield rows lazily in file order; ``preprocess`` keeps only the top
ratings, binarizes them to 1.0, and replays the survivors in timestamp
order (stable on ties), so only the filtered stream is ever materialized.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .core import FormatError, ParseError, RatingEvent

MOVIELENS_HEADER = "userId,movieId,rating,timestamp"


@dataclass(frozen=True, slots=True)
class RawRating:
    user_id: int
    item_id: int
    rating: float
    timestamp: int


def load_movielens(path: str | Path) -> Iterator[RawRating]:
    """Stream a ratings CSV; raises FormatError on a bad header and
    ParseError (with line number) on a malformed row."""
    with open(path, "r", encoding="utf-8-sig") as fh:
        header = fh.readline().strip()
        if header != MOVIELENS_HEADER:
            raise FormatError(f"{path}: expected header {MOVIELENS_HEADER!r}, got {header!r}")
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 4:
                raise ParseError(f"expected 4 fields, got {len(parts)}", lineno)
            try:
                yield RawRating(int(parts[0]), int(parts[1]), float(parts[2]), int(parts[3]))
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from exc


def _load_netflix_file(path: Path, allowlist: set[int] | None) -> Iterator[RawRating]:
    with open(path, "r", encoding="utf-8-sig") as fh:
        header = fh.readline().strip()
        if not header.endswith(":"):
            raise FormatError(f"{path}: expected '<MovieID>:' first line, got {header!r}")
        try:
            movie_id = int(header[:-1])
        except ValueError as exc:
            raise FormatError(f"{path}: bad movie id in {header!r}") from exc
        if allowlist is not None and movie_id not in allowlist:
            return
        for lineno, raw in enumerate(fh, start=2):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise ParseError(f"{path}: expected 3 fields, got {len(parts)}", lineno)
            try:
                user = int(parts[0])
                rating = float(parts[1])
                date = datetime.strptime(parts[2], "%Y-%m-%d").replace(tzinfo=timezone.utc)
            except ValueError as exc:
                raise ParseError(f"{path}: {exc}", lineno) from exc
            yield RawRating(user, movie_id, rating, int(date.timestamp()))


def load_netflix(directory: str | Path, allowlist_path: str | Path | None = None) -> Iterator[RawRating]:
    """Stream every per-movie file in the directory, sorted by file name.

    ``allowlist_path`` optionally names a file of movie ids (one per line)
    restricting the load to a subset of the catalog.
    """
    root = Path(directory)
    if not root.is_dir():
        raise FormatError(f"{root}: not a directory")
    allowlist = None
    if allowlist_path is not None:
        allowlist = {int(line) for line in Path(allowlist_path).read_text().split()}
    files = sorted(p for p in root.iterdir() if p.is_file())
    if not files:
        raise FormatError(f"{root}: no rating files found")
    for path in files:
        yield from _load_netflix_file(path, allowlist)


def preprocess(raw: Iterable[RawRating], min_rating: float = 5.0) -> list[RatingEvent]:
    """Filter to top ratings, binarize, and order by event time.

    Rows with ``rating >= min_rating`` survive with rating 1.0; output is
    sorted ascending by timestamp, stable on the original input order, and
    numbered ``seq = 0, 1, 2, ...``.
    """
    kept = [r for r in raw if r.rating >= min_rating]
    kept.sort(key=lambda r: r.timestamp)
    return [RatingEvent(seq, r.user_id, r.item_id, 1.0, r.timestamp)
            for seq, r in enumerate(kept)]


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for the seeded synthetic stream generator.

    Item popularity follows a Zipf law with exponent ``zipf`` (0 gives a
    uniform catalog); ``user_zipf`` skews user activity the same way.
    Timestamps advance by ``step`` seconds per event from ``start``.

    ``groups`` and ``affinity`` add community structure: users and items
    are split into ``groups`` interest clusters (by seeded permutation, so
    membership is independent of raw id arithmetic) and each event draws
    its item from the user's own cluster with probability ``affinity``,
    from the global catalog otherwise. Real rating data is community
    structured, and recommenders only beat a popularity ranking when there
    is such structure to learn.
    """

    users: int = 500
    items: int = 100
    events: int = 5000
    zipf: float = 1.0
    user_zipf: float = 0.0
    groups: int = 1
    affinity: float = 0.0
    seed: int = 1
    start: int = 1_000_000
    step: int = 1

    @classmethod
    def parse(cls, text: str) -> "SyntheticSpec":
        """Parse ``users=500,items=100,events=5000,zipf=1.0,seed=1`` specs."""
        kwargs = {}
        types = {"users": int, "items": int, "events": int, "zipf": float,
                 "user_zipf": float, "groups": int, "affinity": float,
                 "seed": int, "start": int, "step": int}
        for token in text.split(","):
            token = token.strip()
            if not token:
                continue
            if "=" not in token:
                raise FormatError(f"bad synthetic spec token {token!r}")
            key, _, value = token.partition("=")
            key = key.strip()
            if key not in types:
                raise FormatError(f"unknown synthetic spec key {key!r}")
            try:
                kwargs[key] = types[key](value.strip())
            except ValueError as exc:
                raise FormatError(f"bad synthetic spec value for {key}: {exc}") from exc
        return cls(**kwargs)


def _zipf_weights(n: int, exponent: float) -> np.ndarray:
    ranks = np.arange(1, n + 1, dtype=np.float64)
    weights = ranks ** -exponent
    return weights / weights.sum()


def synthetic_ratings(spec: SyntheticSpec) -> list[RawRating]:
    """Deterministic synthetic feedback: every rating is 5.0, so the whole
    stream survives the default top-rating filter."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=(0xDA7A,)))
    structured = spec.groups > 1 and spec.affinity > 0.0
    if structured:
        item_perm = rng.permutation(spec.items)
        group_items = [item_perm[g::spec.groups] for g in range(spec.groups)]
        user_perm = rng.permutation(spec.users)
        user_group = np.empty(spec.users, dtype=np.int64)
        for g in range(spec.groups):
            user_group[user_perm[g::spec.groups]] = g
    users = rng.choice(spec.users, size=spec.events, p=_zipf_weights(spec.users, spec.user_zipf))
    items = rng.choice(spec.items, size=spec.events, p=_zipf_weights(spec.items, spec.zipf))
    if structured:
        in_group = rng.random(spec.events) < spec.affinity
        for g in range(spec.groups):
            mask = in_group & (user_group[users] == g)
            count = int(mask.sum())
            if count:
                pool = group_items[g]
                picks = rng.choice(pool.size, size=count, p=_zipf_weights(pool.size, spec.zipf))
                items[mask] = pool[picks]
    return [RawRating(int(u), int(i), 5.0, spec.start + n * spec.step)
            for n, (u, i) in enumerate(zip(users, items))]


def synthetic_events(spec: SyntheticSpec, min_rating: float = 5.0) -> list[RatingEvent]:
    return preprocess(synthetic_ratings(spec), min_rating)
