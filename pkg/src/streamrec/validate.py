"""Built-in correctness suites behind ``streamrec validate``.

Each suite checks an implementation against an independent formulation:
routing against brute-force replica-set intersection, the factor update
against a plain-float closed form, and the incremental similarity against
a batch cosine recomputed from the raw prefix. A failing suite reports its
first counterexample.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cosine import SimilarityModel
from .ingest import SyntheticSpec, synthetic_events
from .isgd import FactorModel
from .router import RoutingPlan, item_replica_set, route, user_replica_set

ROUTING_NI = (1, 2, 3, 4, 6)
ROUTING_W = (0, 1, 2)
ROUTING_ID_RANGE = 256


@dataclass(frozen=True)
class SuiteResult:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


def routing_suite(id_range: int = ROUTING_ID_RANGE) -> SuiteResult:
    """Exhaustively confirm the one-worker-per-pair guarantee.

    For every grid in the configured (n_i, w) ranges and every (user, item)
    in [0, id_range)^2: the replica sets intersect in exactly the routed
    worker, and the replica sets have their stated sizes.
    """
    checked = 0
    for n_i in ROUTING_NI:
        for w in ROUTING_W:
            plan = RoutingPlan.from_replication(n_i, w)
            # Replica sets depend only on the id residues; verify each class.
            for item_res in range(plan.n_i):
                items = item_replica_set(plan, item_res)
                if len(items) != plan.n_u:
                    return SuiteResult("routing", False,
                                       f"n_i={n_i} w={w}: item replica set size {len(items)} != {plan.n_u}")
                for user_res in range(plan.n_u):
                    users = user_replica_set(plan, user_res)
                    if len(users) != plan.n_i:
                        return SuiteResult("routing", False,
                                           f"n_i={n_i} w={w}: user replica set size {len(users)} != {plan.n_i}")
                    common = items & users
                    if len(common) != 1 or route(plan, user_res, item_res) not in common:
                        return SuiteResult("routing", False,
                                           f"n_i={n_i} w={w} u={user_res} i={item_res}: "
                                           f"intersection {sorted(common)} vs route "
                                           f"{route(plan, user_res, item_res)}")
            # Full-range sweep: the scalar route must match its residue class.
            users = np.arange(id_range, dtype=np.int64)
            items = np.arange(id_range, dtype=np.int64)
            expected = (items[:, None] % plan.n_i) * plan.n_u + (users[None, :] % plan.n_u)
            for item_id in range(id_range):
                row = np.fromiter((route(plan, int(u), item_id) for u in users),
                                  dtype=np.int64, count=id_range)
                if not np.array_equal(row, expected[item_id]):
                    bad = int(np.flatnonzero(row != expected[item_id])[0])
                    return SuiteResult("routing", False,
                                       f"n_i={n_i} w={w} u={bad} i={item_id}: "
                                       f"route {row[bad]} != replica intersection {expected[item_id][bad]}")
                checked += id_range
    return SuiteResult("routing", True,
                       f"{checked} (user,item) pairs across {len(ROUTING_NI) * len(ROUTING_W)} grids")


def _closed_form_step(u, iv, eta, lam, sequential):
    """Plain-float factor update, independent of the model implementation."""
    err = 1.0 - sum(a * b for a, b in zip(u, iv))
    new_u = [a + eta * (err * b - lam * a) for a, b in zip(u, iv)]
    base = new_u if sequential else u
    new_i = [b + eta * (err * a - lam * b) for a, b in zip(base, iv)]
    return new_u, new_i


def isgd_suite(instances: int = 10_000, seed: int = 2024, tol: float = 1e-12) -> SuiteResult:
    """Compare ``train`` against the closed form on randomized instances."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    per_model = 100
    for start in range(0, instances, per_model):
        k = int(rng.integers(1, 17))
        eta = float(rng.uniform(0.01, 0.2))
        lam = float(rng.uniform(0.0, 0.1))
        sequential = bool(rng.integers(0, 2))
        model = FactorModel(k, eta, lam, sequential_update=sequential)
        model_rng = np.random.default_rng(int(rng.integers(0, 2**63)))
        for case in range(min(per_model, instances - start)):
            user, item = case, case
            model.ensure_vectors(model_rng, user, item)
            u_before = [float(x) for x in model.user_vectors[user]]
            i_before = [float(x) for x in model.item_vector(item)]
            model.train(user, item)
            exp_u, exp_i = _closed_form_step(u_before, i_before, eta, lam, sequential)
            got_u = model.user_vectors[user]
            got_i = model.item_vector(item)
            diff = max(max(abs(a - b) for a, b in zip(exp_u, got_u)),
                       max(abs(a - b) for a, b in zip(exp_i, got_i)))
            worst = max(worst, diff)
            if diff > tol:
                return SuiteResult("isgd", False,
                                   f"instance {start + case}: max component error {diff:.3e} > {tol:.0e} "
                                   f"(k={k} eta={eta:.4f} lambda={lam:.4f} sequential={sequential})")
    return SuiteResult("isgd", True, f"{instances} instances, max component error {worst:.3e}")


def batch_cosine(events) -> dict[tuple[int, int], float]:
    """Batch cosine over the full binary prefix history (the oracle).

    Recomputed from scratch: per item the set of its raters, per co-rated
    pair the overlap count divided by the root of the rater-count product.
    """
    raters: dict[int, set[int]] = {}
    by_user: dict[int, set[int]] = {}
    for e in events:
        if e.item_id not in by_user.setdefault(e.user_id, set()):
            by_user[e.user_id].add(e.item_id)
            raters.setdefault(e.item_id, set()).add(e.user_id)
    sims = {}
    for items in by_user.values():
        ordered = sorted(items)
        for a_idx in range(len(ordered)):
            for b_idx in range(a_idx + 1, len(ordered)):
                p, q = ordered[a_idx], ordered[b_idx]
                if (p, q) in sims:
                    continue
                overlap = len(raters[p] & raters[q])
                sims[(p, q)] = overlap / math.sqrt(len(raters[p]) * len(raters[q]))
    return sims


def similarity_suite(events: int = 5000, users: int = 500, items: int = 100,
                     checkpoint_every: int = 500, tol: float = 1e-9,
                     debug_sim_offset: float = 0.0, seed: int = 7) -> SuiteResult:
    """Replay a skewed synthetic stream and compare every stored pair
    similarity against the batch cosine at each checkpoint."""
    stream = synthetic_events(SyntheticSpec(users=users, items=items, events=events, seed=seed))
    model = SimilarityModel(debug_sim_offset=debug_sim_offset)
    worst = 0.0
    pairs_checked = 0
    for idx, event in enumerate(stream):
        model.update(event.user_id, event.item_id, event.rating, event.timestamp)
        if (idx + 1) % checkpoint_every == 0 or idx + 1 == len(stream):
            oracle = batch_cosine(stream[:idx + 1])
            stored = model.pairs()
            if set(stored) != set(oracle):
                missing = (set(oracle) - set(stored)) or (set(stored) - set(oracle))
                pair = sorted(missing)[0]
                return SuiteResult("similarity", False,
                                   f"after {idx + 1} events: stored pair set diverges at {pair}")
            for p, q in stored:
                diff = abs(model.similarity(p, q) - oracle[(p, q)])
                worst = max(worst, diff)
                pairs_checked += 1
                if diff > tol:
                    return SuiteResult("similarity", False,
                                       f"after {idx + 1} events: sim({p},{q}) = "
                                       f"{model.similarity(p, q):.12f} but batch cosine = "
                                       f"{oracle[(p, q)]:.12f} (|diff| {diff:.3e} > {tol:.0e})")
    return SuiteResult("similarity", True,
                       f"{pairs_checked} pair checks over {events} events, max |diff| {worst:.3e}")


SUITES = {
    "routing": routing_suite,
    "isgd": isgd_suite,
    "similarity": similarity_suite,
}


def run_suites(names, *, debug_sim_offset: float = 0.0) -> list[SuiteResult]:
    results = []
    for name in names:
        if name == "similarity":
            results.append(similarity_suite(debug_sim_offset=debug_sim_offset))
        else:
            results.append(SUITES[name]())
    return results
