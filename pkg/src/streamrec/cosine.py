"""Incremental item-based cosine-similarity recommender.

State per worker: a per-item rating sum, a min-sum for every co-rated item
pair, and each user's rating history. Under the binarized stream one rater
contributes 1 to each of their items' sums and ``min(1, 1) = 1`` to every
pair of items they have rated, so

    sim(p, q) = pair_min_sum(p, q) / (sqrt(sum_p) * sqrt(sum_q))

is exactly the cosine of the items' binary rater vectors, maintained with
O(|history|) work per event instead of a batch recomputation.

Scoring an unseen item ``p`` for a user takes the ``neighbors_k`` most
similar items among the user's history (positive similarity only) and sums
their similarities. The weighted-average estimate over that same neighbor
set is implemented too (``estimate``), but with binary ratings it is 1.0
for every item with any positive neighbor, so ranking uses the similarity
sum.

Pair counts are stored symmetrically (each unordered pair appears in both
items' partner tables) so a user's candidate scores reduce to a handful of
array concatenations; telemetry still counts unordered pairs once.
"""

from __future__ import annotations

import math

import numpy as np

_MIN_PARTNER_CAP = 8


class SimilarityModel:
    """Per-worker item-cosine state. Single-owner, like FactorModel.

    ``debug_sim_offset`` perturbs every stored similarity and exists only so
    the self-check oracles can prove they detect a broken similarity.
    """

    def __init__(self, *, neighbors_k: int = 10, debug_sim_offset: float = 0.0):
        self.neighbors_k = neighbors_k
        self.debug_sim_offset = debug_sim_offset
        # history: user -> [(item_id, rating)] in arrival order, no dup items
        self.history: dict[int, list[tuple[int, float]]] = {}
        self._rated: dict[int, set[int]] = {}
        self.user_usage: dict[int, list[int]] = {}
        self.item_usage: dict[int, list[int]] = {}
        # item registry: contiguous rows so candidate scoring vectorizes
        self._row_of: dict[int, int] = {}
        self._ids = np.empty(16, dtype=np.int64)
        self._sums = np.zeros(16, dtype=np.float64)
        self._n = 0
        # per-row partner tables (row -> parallel arrays of partner row / min-sum)
        self._pt_ids: list[np.ndarray] = []
        self._pt_cnt: list[np.ndarray] = []
        self._pt_slot: list[dict[int, int]] = []
        self._pt_n: list[int] = []
        self._n_pairs = 0

    # -- introspection -------------------------------------------------

    @property
    def n_items(self) -> int:
        return self._n

    @property
    def n_pairs(self) -> int:
        return self._n_pairs

    def state_counts(self) -> tuple[int, int, int]:
        """(user entries, item entries, unordered pair entries)."""
        return len(self.history), self._n, self._n_pairs

    def item_ids(self) -> list[int]:
        return [int(i) for i in self._ids[:self._n]]

    def item_sum(self, item_id: int) -> float:
        row = self._row_of.get(item_id)
        return 0.0 if row is None else float(self._sums[row])

    def pair_min_sum(self, p: int, q: int) -> float:
        rp = self._row_of.get(p)
        rq = self._row_of.get(q)
        if rp is None or rq is None:
            return 0.0
        slot = self._pt_slot[rp].get(rq)
        return 0.0 if slot is None else float(self._pt_cnt[rp][slot])

    def pairs(self) -> list[tuple[int, int]]:
        """All stored unordered pairs as (smaller id, larger id)."""
        out = []
        for row in range(self._n):
            p = int(self._ids[row])
            for partner_row in self._pt_ids[row][:self._pt_n[row]]:
                q = int(self._ids[partner_row])
                if p < q:
                    out.append((p, q))
        return out

    # -- similarity ------------------------------------------------------

    def similarity(self, p: int, q: int) -> float:
        """Cosine similarity of two items; 0 when either side is unknown
        or the pair was never co-rated."""
        rp = self._row_of.get(p)
        rq = self._row_of.get(q)
        if rp is None or rq is None:
            return 0.0
        slot = self._pt_slot[rp].get(rq)
        if slot is None:
            return 0.0
        value = self._pt_cnt[rp][slot] / math.sqrt(self._sums[rp] * self._sums[rq])
        return float(value) + self.debug_sim_offset

    # -- learning --------------------------------------------------------

    def update(self, user_id: int, item_id: int, rating: float, timestamp: int = 0) -> None:
        """Fold one rating into sums, pair min-sums, and the user's history.

        A repeat of an (user, item) pair only refreshes usage metadata; each
        user contributes at most once to any pair or item sum, which keeps
        every similarity within [0, 1].
        """
        rated = self._rated.get(user_id)
        if rated is None:
            self.history[user_id] = []
            rated = self._rated[user_id] = set()
            self.user_usage[user_id] = [0, 0]
        duplicate = item_id in rated
        if not duplicate:
            row = self._row_of.get(item_id)
            if row is None:
                row = self._add_item(item_id)
            for q_id, q_rating in self.history[user_id]:
                q_row = self._row_of[q_id]
                inc = min(rating, q_rating)
                if self._pair_bump(row, q_row, inc):
                    self._n_pairs += 1
                self._pair_bump(q_row, row, inc)
            self._sums[row] += rating
            self.history[user_id].append((item_id, rating))
            rated.add(item_id)
        self._bump(self.user_usage[user_id], timestamp)
        self._bump(self.item_usage[item_id], timestamp)

    @staticmethod
    def _bump(usage: list[int], timestamp: int) -> None:
        usage[0] += 1
        usage[1] = timestamp

    # -- scoring -----------------------------------------------------------

    def estimate(self, user_id: int, item_id: int, neighbors_k: int | None = None) -> float:
        """Similarity-weighted average of the user's ratings over the
        ``neighbors_k`` most similar history items; 0 with no positive
        neighbor. Ties at the neighbor cutoff break on history order."""
        k = self.neighbors_k if neighbors_k is None else neighbors_k
        weighted = []
        for pos, (q_id, q_rating) in enumerate(self.history.get(user_id, [])):
            sim = self.similarity(item_id, q_id)
            if sim > 0.0:
                weighted.append((-sim, pos, q_rating))
        if not weighted:
            return 0.0
        weighted.sort()
        num = 0.0
        den = 0.0
        for neg_sim, _, q_rating in weighted[:k]:
            num += -neg_sim * q_rating
            den += -neg_sim
        return num / den

    def recommend(self, user_id: int, n: int, neighbors_k: int | None = None) -> list[int]:
        """Top ``n`` unrated local items by summed top-``neighbors_k``
        similarity to the user's history; zero-similarity items never
        appear. Ties break on ascending item id."""
        k = self.neighbors_k if neighbors_k is None else neighbors_k
        hist = self.history.get(user_id)
        if not hist or self._n == 0:
            return []
        hist_rows = np.fromiter((self._row_of[q] for q, _ in hist),
                                dtype=np.int64, count=len(hist))
        parts_ids = []
        parts_cnt = []
        src_rows = []
        lens = []
        for q_row in hist_rows:
            m = self._pt_n[q_row]
            if m:
                parts_ids.append(self._pt_ids[q_row][:m])
                parts_cnt.append(self._pt_cnt[q_row][:m])
                src_rows.append(q_row)
                lens.append(m)
        if not parts_ids:
            return []
        n_parts = len(parts_ids)
        cand = np.concatenate(parts_ids)
        counts = np.concatenate(parts_cnt)
        src_norm = np.sqrt(self._sums[np.asarray(src_rows)])
        sims = counts / (np.sqrt(self._sums[cand]) * np.repeat(src_norm, lens))
        in_hist = np.zeros(self._n, dtype=bool)
        in_hist[hist_rows] = True
        keep = ~in_hist[cand]
        cand = cand[keep]
        sims = sims[keep]
        if cand.size == 0:
            return []
        if n_parts <= k:
            # a candidate cannot have more positive neighbors than the
            # user has history items with partners, so no cap applies
            scores = np.bincount(cand, weights=sims, minlength=self._n)
        else:
            # one column per history item; every (candidate, history) pair
            # is unique, so a scatter fills the similarity table, and the
            # k largest per row are exactly the capped neighbor set
            src = np.repeat(np.arange(n_parts), lens)[keep]
            table = np.zeros((self._n, n_parts))
            table[cand, src] = sims
            scores = np.partition(table, n_parts - k, axis=1)[:, n_parts - k:].sum(axis=1)
        cand_rows = np.flatnonzero(scores > 0.0)
        if cand_rows.size == 0:
            return []
        ids = self._ids[cand_rows]
        order = np.lexsort((ids, -scores[cand_rows]))
        return [int(i) for i in ids[order[:n]]]

    # -- forgetting support --------------------------------------------------

    def evict(self, users: set[int], items: set[int]) -> None:
        """Drop entities and cascade: pairs touching a dropped item vanish,
        and dropped items disappear from every surviving history."""
        for user in users:
            self.history.pop(user, None)
            self._rated.pop(user, None)
            self.user_usage.pop(user, None)
        live_items = items & self._row_of.keys()
        if not live_items:
            return
        for item in live_items:
            self.item_usage.pop(item, None)
        new_row = np.full(self._n, -1, dtype=np.int64)
        kept = [row for row in range(self._n) if int(self._ids[row]) not in live_items]
        for new, old in enumerate(kept):
            new_row[old] = new
        n_new = len(kept)
        self._ids[:n_new] = self._ids[kept]
        self._sums[:n_new] = self._sums[kept]
        pt_ids, pt_cnt, pt_slot, pt_n = [], [], [], []
        for old in kept:
            m = self._pt_n[old]
            partners = new_row[self._pt_ids[old][:m]]
            alive = partners >= 0
            ids = partners[alive]
            cnt = self._pt_cnt[old][:m][alive]
            pt_ids.append(ids)
            pt_cnt.append(cnt)
            pt_slot.append({int(p): s for s, p in enumerate(ids)})
            pt_n.append(int(ids.size))
        self._pt_ids, self._pt_cnt, self._pt_slot, self._pt_n = pt_ids, pt_cnt, pt_slot, pt_n
        self._n = n_new
        self._row_of = {int(i): r for r, i in enumerate(self._ids[:n_new])}
        self._n_pairs = sum(pt_n) // 2
        for user, hist in self.history.items():
            if any(item in live_items for item, _ in hist):
                self.history[user] = [(i, r) for i, r in hist if i not in live_items]
                self._rated[user] -= live_items

    # -- internals ------------------------------------------------------------

    def _add_item(self, item_id: int) -> int:
        if self._n == len(self._ids):
            cap = 2 * len(self._ids)
            ids = np.empty(cap, dtype=np.int64)
            sums = np.zeros(cap, dtype=np.float64)
            ids[:self._n] = self._ids[:self._n]
            sums[:self._n] = self._sums[:self._n]
            self._ids = ids
            self._sums = sums
        row = self._n
        self._ids[row] = item_id
        self._row_of[item_id] = row
        self._pt_ids.append(np.empty(_MIN_PARTNER_CAP, dtype=np.int64))
        self._pt_cnt.append(np.empty(_MIN_PARTNER_CAP, dtype=np.float64))
        self._pt_slot.append({})
        self._pt_n.append(0)
        self._n += 1
        self.item_usage[item_id] = [0, 0]
        return row

    def _pair_bump(self, row: int, partner: int, inc: float) -> bool:
        """Add ``inc`` to the (row, partner) min-sum; True if the slot is new."""
        slot = self._pt_slot[row].get(partner)
        if slot is not None:
            self._pt_cnt[row][slot] += inc
            return False
        m = self._pt_n[row]
        if m == len(self._pt_ids[row]):
            extra = max(_MIN_PARTNER_CAP, m)  # rebuilt rows can be exactly sized or empty
            self._pt_ids[row] = np.concatenate([self._pt_ids[row], np.empty(extra, dtype=np.int64)])
            self._pt_cnt[row] = np.concatenate([self._pt_cnt[row], np.empty(extra, dtype=np.float64)])
        self._pt_ids[row][m] = partner
        self._pt_cnt[row][m] = inc
        self._pt_slot[row][partner] = m
        self._pt_n[row] = m + 1
        return True
