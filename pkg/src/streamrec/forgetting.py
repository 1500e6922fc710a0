"""LFU and LRU state eviction.

Sweeps bound per-worker state growth and discard stale taste signal. A
sweep is triggered by an event-count threshold (LFU) or an event-time
interval (LRU), then evicts every user and item failing the retention
predicate, cascading through dependent structures (seen sets, pair counts,
user histories).

Time here is always event time from the stream, never wall clock, so runs
replay deterministically.
"""

from __future__ import annotations

from dataclasses import dataclass

NONE = "none"
LFU = "lfu"
LRU = "lru"
KINDS = (NONE, LFU, LRU)


@dataclass(frozen=True)
class ForgettingPolicy:
    """Eviction policy: when to sweep and what to keep.

    ``lfu_trigger_count`` is the number of processed events between sweeps;
    ``lru_trigger_interval`` the event-time seconds between sweeps. The
    controller thresholds (``lfu_min_frequency``, ``lru_max_age``) decide
    which entities survive; the ``*_users`` / ``*_items`` variants override
    the shared threshold per entity class when set.
    """

    kind: str = NONE
    lfu_trigger_count: int = 100_000
    lfu_min_frequency: int = 2
    lfu_min_frequency_users: int | None = None
    lfu_min_frequency_items: int | None = None
    lru_trigger_interval: int = 86_400
    lru_max_age: int = 7 * 86_400
    lru_max_age_users: int | None = None
    lru_max_age_items: int | None = None

    def validate(self) -> "ForgettingPolicy":
        from .core import ConfigError

        if self.kind not in KINDS:
            raise ConfigError(f"forgetting must be one of {KINDS}, got {self.kind!r}")
        if self.kind == LFU:
            if self.lfu_trigger_count < 1:
                raise ConfigError(f"lfu_trigger must be >= 1, got {self.lfu_trigger_count}")
            for v in (self.lfu_min_frequency, self.lfu_min_frequency_users, self.lfu_min_frequency_items):
                if v is not None and v < 1:
                    raise ConfigError(f"lfu_min_freq must be >= 1, got {v}")
        if self.kind == LRU:
            if self.lru_trigger_interval < 1:
                raise ConfigError(f"lru_interval must be >= 1, got {self.lru_trigger_interval}")
            for v in (self.lru_max_age, self.lru_max_age_users, self.lru_max_age_items):
                if v is not None and v < 1:
                    raise ConfigError(f"lru_max_age must be >= 1, got {v}")
        return self

    @property
    def user_min_frequency(self) -> int:
        return self.lfu_min_frequency if self.lfu_min_frequency_users is None else self.lfu_min_frequency_users

    @property
    def item_min_frequency(self) -> int:
        return self.lfu_min_frequency if self.lfu_min_frequency_items is None else self.lfu_min_frequency_items

    @property
    def user_max_age(self) -> int:
        return self.lru_max_age if self.lru_max_age_users is None else self.lru_max_age_users

    @property
    def item_max_age(self) -> int:
        return self.lru_max_age if self.lru_max_age_items is None else self.lru_max_age_items


@dataclass(frozen=True)
class SweepReport:
    """Eviction counts from one sweep of one worker's model."""

    users_evicted: int = 0
    items_evicted: int = 0
    pairs_evicted: int = 0

    @property
    def total(self) -> int:
        return self.users_evicted + self.items_evicted + self.pairs_evicted


def should_sweep(policy: ForgettingPolicy, events_since_last: int,
                 event_time_now: int, last_sweep_time: int) -> bool:
    """Decide whether a sweep is due at the current stream position."""
    if policy.kind == LFU:
        return events_since_last >= policy.lfu_trigger_count
    if policy.kind == LRU:
        return event_time_now - last_sweep_time >= policy.lru_trigger_interval
    return False


def sweep(policy: ForgettingPolicy, model, event_time_now: int) -> SweepReport:
    """Evict everything failing the retention predicate; cascade removals.

    The model does the structural surgery through ``evict``; this function
    only selects victims from the usage metadata. Retained entries are
    untouched. Returns the eviction counts (pairs count unordered pairs).
    """
    if policy.kind == LFU:
        doomed_users = {u for u, (freq, _) in model.user_usage.items()
                        if freq < policy.user_min_frequency}
        doomed_items = {i for i, (freq, _) in model.item_usage.items()
                        if freq < policy.item_min_frequency}
    elif policy.kind == LRU:
        doomed_users = {u for u, (_, last) in model.user_usage.items()
                        if event_time_now - last > policy.user_max_age}
        doomed_items = {i for i, (_, last) in model.item_usage.items()
                        if event_time_now - last > policy.item_max_age}
    else:
        return SweepReport()
    if not doomed_users and not doomed_items:
        return SweepReport()
    pairs_before = model.state_counts()[2]
    model.evict(doomed_users, doomed_items)
    pairs_after = model.state_counts()[2]
    return SweepReport(
        users_evicted=len(doomed_users),
        items_evicted=len(doomed_items),
        pairs_evicted=pairs_before - pairs_after,
    )
