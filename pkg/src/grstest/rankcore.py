"""Global ranking of a user population with seeded tie-breaking.

The population is sorted once; every experiment afterwards only looks up
ranks. Ties are broken by a seeded 64-bit hash of the user id, so the
resulting rank table is a deterministic function of (records, seed) and
does not depend on input order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from hashlib import blake2b
from typing import Iterable, Mapping, Sequence

import numpy as np

from grstest._kernels import mix64

__all__ = [
    "MetricRecord",
    "GlobalRankTable",
    "compute_global_ranks",
    "local_ranks",
    "sort_count",
    "reset_sort_count",
]

# Counts full-population sorts, so pipelines can prove they ranked once.
_SORT_COUNT = 0


def sort_count() -> int:
    """Number of global sorts performed since the last reset."""
    return _SORT_COUNT


def reset_sort_count() -> None:
    global _SORT_COUNT
    _SORT_COUNT = 0


@dataclass(frozen=True)
class MetricRecord:
    """One user's raw metric value."""

    user_id: object
    value: float


@dataclass
class GlobalRankTable:
    """Distinct ranks 1..N for a whole population, from one seeded sort.

    ``user_ids[i]`` has rank ``rank_values[i]``; together they are a
    bijection onto {1, ..., N}. Immutable once built: share freely across
    concurrent experiment evaluations.
    """

    user_ids: list
    rank_values: np.ndarray  # int64, aligned with user_ids
    population_size: int
    tiebreak_seed: int
    _by_id: dict = field(default=None, repr=False)
    _dense: np.ndarray = field(default=None, repr=False)

    @property
    def ranks(self) -> Mapping[object, int]:
        """Mapping user_id -> rank (built lazily)."""
        if self._by_id is None:
            self._by_id = {
                uid: int(r) for uid, r in zip(self.user_ids, self.rank_values)
            }
        return self._by_id

    def rank_of(self, user_id) -> int:
        try:
            return self.ranks[user_id]
        except KeyError:
            raise KeyError(f"unknown user {user_id!r}") from None

    def ranks_for(self, users: Sequence) -> np.ndarray:
        """Global ranks for the given users, as int64, in the given order."""
        dense = self._dense_lookup()
        if dense is not None:
            idx = np.asarray(users)
            if np.issubdtype(idx.dtype, np.integer):
                out = np.where(
                    (idx >= 0) & (idx < dense.shape[0]), dense[np.minimum(idx, dense.shape[0] - 1)], 0
                )
                if np.all(out > 0):
                    return out.astype(np.int64)
        return np.fromiter(
            (self.rank_of(u) for u in users), dtype=np.int64, count=len(users)
        )

    def _dense_lookup(self) -> np.ndarray | None:
        # Fast path for integer ids of modest range (simulation populations).
        if self._dense is not None:
            return self._dense
        if not self.user_ids:
            return None
        first = self.user_ids[0]
        if not isinstance(first, (int, np.integer)):
            return None
        ids = np.asarray(self.user_ids)
        if not np.issubdtype(ids.dtype, np.integer):
            return None
        lo, hi = int(ids.min()), int(ids.max())
        if lo < 0 or hi > 4 * len(ids) + 16:
            return None
        dense = np.zeros(hi + 1, dtype=np.int64)
        dense[ids] = self.rank_values
        self._dense = dense
        return dense


def _tiebreak_keys(user_ids: Sequence, seed: int) -> np.ndarray:
    """Seeded 64-bit key per user id; equal metric values sort by this."""
    ids = np.asarray(user_ids)
    if np.issubdtype(ids.dtype, np.integer):
        return mix64(ids.astype(np.uint64), np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    salt = seed.to_bytes(8, "little", signed=False) if seed >= 0 else (
        (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "little")
    )
    keys = np.empty(len(user_ids), dtype=np.uint64)
    for i, uid in enumerate(user_ids):
        h = blake2b(str(uid).encode("utf-8"), digest_size=8, key=salt)
        keys[i] = int.from_bytes(h.digest(), "little")
    return keys


def compute_global_ranks(
    records: Sequence[MetricRecord] | Iterable[MetricRecord],
    tiebreak_seed: int,
) -> GlobalRankTable:
    """Sort the whole population once and assign distinct ranks 1..N.

    Sort key is (value, seeded hash of user_id): strictly smaller values get
    strictly smaller ranks, and a block of tied values receives distinct
    consecutive ranks in seeded-hash order, i.e. a reproducible random
    permutation of the block.
    """
    records = list(records)
    if not records:
        raise ValueError("empty population")
    user_ids = [r.user_id for r in records]
    values = np.array([r.value for r in records], dtype=np.float64)
    bad = np.flatnonzero(~np.isfinite(values))
    if bad.size:
        raise ValueError(f"non-finite metric value for user {user_ids[bad[0]]!r}")
    if len(set(user_ids)) != len(user_ids):
        seen = set()
        for uid in user_ids:
            if uid in seen:
                raise ValueError(f"duplicate user_id {uid!r}")
            seen.add(uid)
    keys = _tiebreak_keys(user_ids, tiebreak_seed)
    ranks = ranks_from_arrays(values, keys)
    return GlobalRankTable(
        user_ids=user_ids,
        rank_values=ranks,
        population_size=len(records),
        tiebreak_seed=tiebreak_seed,
    )


def ranks_from_arrays(values: np.ndarray, tiebreak_keys: np.ndarray) -> np.ndarray:
    """Distinct ranks 1..N from parallel value/key arrays (one sort)."""
    global _SORT_COUNT
    _SORT_COUNT += 1
    order = np.lexsort((tiebreak_keys, values))
    ranks = np.empty(values.shape[0], dtype=np.int64)
    ranks[order] = np.arange(1, values.shape[0] + 1, dtype=np.int64)
    return ranks


def local_ranks(table: GlobalRankTable, users: Sequence) -> np.ndarray:
    """Ranks 1..len(users) of the given users among themselves.

    Order-preserving in the global ranks, so this equals a fresh sort of the
    users' raw metric values (same tie-break) without re-sorting anything
    larger than the experiment.
    """
    g = table.ranks_for(users)
    return densify_ranks(g)


def densify_ranks(global_ranks: np.ndarray) -> np.ndarray:
    """Map distinct global ranks to local ranks 1..M, preserving order."""
    g = np.asarray(global_ranks, dtype=np.int64)
    order = np.argsort(g, kind="stable")
    local = np.empty(g.shape[0], dtype=np.int64)
    local[order] = np.arange(1, g.shape[0] + 1, dtype=np.int64)
    return local


def export_rank_table(table: GlobalRankTable, path) -> None:
    """Write `user_id,rank` lines after a metadata comment line."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"#population_size={table.population_size} "
            f"tiebreak_seed={table.tiebreak_seed}\n"
        )
        for uid, rank in zip(table.user_ids, table.rank_values):
            fh.write(f"{uid},{rank}\n")


def import_rank_table(path) -> GlobalRankTable:
    """Read a table written by :func:`export_rank_table`."""
    with open(path, "r", encoding="utf-8") as fh:
        meta = fh.readline().strip()
        if not meta.startswith("#"):
            raise ValueError(f"{path}: missing metadata line")
        fields = dict(part.split("=", 1) for part in meta[1:].split())
        n = int(fields["population_size"])
        seed = int(fields["tiebreak_seed"])
        user_ids = []
        ranks = np.empty(n, dtype=np.int64)
        for i, line in enumerate(fh):
            line = line.strip()
            if not line:
                continue
            uid, _, rank = line.rpartition(",")
            user_ids.append(uid)
            ranks[i] = int(rank)
    if len(user_ids) != n:
        raise ValueError(f"{path}: expected {n} rows, found {len(user_ids)}")
    return GlobalRankTable(
        user_ids=user_ids,
        rank_values=ranks,
        population_size=n,
        tiebreak_seed=seed,
    )
