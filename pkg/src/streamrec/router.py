"""Split-and-replicate routing of rating events onto a worker grid.

Workers are laid out on an ``n_i x n_u`` grid where ``n_u = n_i + w``: item
partitions index the rows, user partitions the columns. Every (user, item)
pair lands on exactly one worker, while an item's row replicates it across
``n_u`` user columns and a user's column replicates them across ``n_i`` item
rows. Replicas are never synchronized; each worker learns purely from the
events routed to it.

Hashing is plain modulo on the raw ids, so skew from non-uniform id
distributions passes through and shows up in the telemetry.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import derive_cluster_size


@dataclass(frozen=True, slots=True)
class RoutingPlan:
    """Immutable replication geometry: ``n_c = n_i * n_u`` workers."""

    n_i: int
    n_u: int
    n_c: int

    @classmethod
    def from_replication(cls, n_i: int, w: int) -> "RoutingPlan":
        n_c = derive_cluster_size(n_i, w)
        return cls(n_i=n_i, n_u=n_i + w, n_c=n_c)


def route(plan: RoutingPlan, user_id: int, item_id: int) -> int:
    """Worker id owning this (user, item) pair.

    This is the unique intersection of the item's replica row and the
    user's replica column; it depends only on ``item_id mod n_i`` and
    ``user_id mod n_u``.
    """
    return (item_id % plan.n_i) * plan.n_u + (user_id % plan.n_u)


def item_replica_set(plan: RoutingPlan, item_id: int) -> set[int]:
    """All workers that can hold a representation of this item (one grid row)."""
    base = (item_id % plan.n_i) * plan.n_u
    return {base + x for x in range(plan.n_u)}


def user_replica_set(plan: RoutingPlan, user_id: int) -> set[int]:
    """All workers that can hold a representation of this user (one grid column)."""
    col = user_id % plan.n_u
    return {col + y * plan.n_u for y in range(plan.n_i)}
