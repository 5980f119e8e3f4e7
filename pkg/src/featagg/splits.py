"""Balanced node-splitting routines used to grow the feature hierarchy.

Two strategies: spherical 2-means with a forced even split, and a
discounted-cumulative-gain variant for nonnegative sparse representatives.
Both are pure given (members, representatives, rng) and always return exactly
balanced halves of sizes ceil(m/2) / floor(m/2), regardless of convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .reprs import ReprSet
from .sparse import SparseMatrix

MAX_ITERS = 20
_INIT_ATTEMPTS = 6  # one initial draw plus up to five redraws


@dataclass(frozen=True)
class Ranking:
    """Permutation of [0, p); position j holds the coordinate ranked j-th."""

    order: np.ndarray

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        object.__setattr__(self, "order", order)
        p = order.shape[0]
        if p and (order.min() < 0 or order.max() >= p or np.unique(order).shape[0] != p):
            raise ValueError("order is not a permutation")

    @classmethod
    def rank_of(cls, v: np.ndarray) -> "Ranking":
        """Coordinates in decreasing value order, ties by ascending index."""
        v = np.asarray(v, dtype=np.float64)
        return cls(np.lexsort((np.arange(v.shape[0]), -v)))

    def positions(self) -> np.ndarray:
        """1-based rank position of each coordinate."""
        pos = np.empty(self.order.shape[0], dtype=np.int64)
        pos[self.order] = np.arange(1, self.order.shape[0] + 1)
        return pos


@dataclass(frozen=True)
class SplitResult:
    s_plus: np.ndarray
    s_minus: np.ndarray
    iterations: int
    converged: bool
    objective_trace: tuple[float, ...] = field(default=(), compare=False)


def _discounts(p: int, base: float | None) -> np.ndarray:
    d = np.log(np.arange(2.0, p + 2.0))
    if base is not None:
        d = d / math.log(base)
    return d


def dcg(r: Ranking, v: np.ndarray, base: float | None = None) -> float:
    """Sum of v[r_j] / log(1+j), j starting at 1 (natural log by default)."""
    v = np.asarray(v, dtype=np.float64)
    if np.any(v < 0):
        raise ValueError("values must be nonnegative")
    if r.order.shape[0] != v.shape[0]:
        raise ValueError("ranking and vector dimensions differ")
    return float(np.sum(v[r.order] / _discounts(v.shape[0], base)))


def ndcg(r: Ranking, v: np.ndarray, base: float | None = None) -> float:
    """Gain of r relative to the ideal ranking of v; 0 for an all-zero v."""
    ideal = dcg(Ranking.rank_of(v), v, base)
    if ideal == 0.0:
        return 0.0
    return dcg(r, v, base) / ideal


def _select_balanced(scores: np.ndarray, members: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Positions of the top ceil(m/2) by score (ties by ascending member id)."""
    order = np.lexsort((members, -scores))
    n_plus = (members.shape[0] + 1) // 2
    return order[:n_plus], order[n_plus:]


def balanced_halves(scores: np.ndarray, members: np.ndarray) -> SplitResult:
    """One-shot even split of members by precomputed scores."""
    members = np.asarray(members, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    if members.shape[0] == 0:
        raise ValueError("cannot split an empty feature set")
    if scores.shape[0] != members.shape[0]:
        raise ValueError("one score per member required")
    plus, minus = _select_balanced(scores, members)
    return SplitResult(members[plus], members[minus], iterations=0, converged=True)


def _index_order_split(members: np.ndarray) -> SplitResult:
    ordered = np.sort(members)
    n_plus = (members.shape[0] + 1) // 2
    return SplitResult(ordered[:n_plus], ordered[n_plus:], iterations=0, converged=True)


def _rows_equal(m: SparseMatrix, a: int, b: int) -> bool:
    sa, ea = m.indptr[a], m.indptr[a + 1]
    sb, eb = m.indptr[b], m.indptr[b + 1]
    return (
        ea - sa == eb - sb
        and np.array_equal(m.indices[sa:ea], m.indices[sb:eb])
        and np.array_equal(m.values[sa:ea], m.values[sb:eb])
    )


def _pick_two_distinct(sub: SparseMatrix, rng: np.random.Generator) -> tuple[int, int] | None:
    """Two distinct-index rows with distinct contents, or None after redraws."""
    for _ in range(_INIT_ATTEMPTS):
        a, b = rng.choice(sub.rows, size=2, replace=False)
        if not _rows_equal(sub, int(a), int(b)):
            return int(a), int(b)
    return None


def _dense_row(sub: SparseMatrix, i: int) -> np.ndarray:
    out = np.zeros(sub.cols, dtype=np.float64)
    s, e = sub.indptr[i], sub.indptr[i + 1]
    out[sub.indices[s:e]] = sub.values[s:e]
    return out


def kmeans_split(
    members: np.ndarray,
    rs: ReprSet,
    rng: np.random.Generator,
    max_iters: int = MAX_ITERS,
) -> SplitResult:
    """Balanced spherical 2-means on the members' representative vectors.

    Centroids start at two randomly drawn representatives and are recomputed
    as plain means (no re-normalization). Converged means the balanced
    partition repeated between consecutive iterations.
    """
    members = np.asarray(members, dtype=np.int64)
    m = members.shape[0]
    if m < 2:
        raise ValueError("need at least two features to split")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    sub = rs.matrix.take_rows(members)
    picked = _pick_two_distinct(sub, rng)
    if picked is None:
        return _index_order_split(members)
    c_plus = _dense_row(sub, picked[0])
    c_minus = _dense_row(sub, picked[1])

    n_plus = (m + 1) // 2
    n_minus = m - n_plus
    prev = None
    trace: list[float] = []
    plus = minus = None
    iterations = max_iters
    converged = False
    for it in range(1, max_iters + 1):
        scores = kernels.row_dots(sub.indptr, sub.indices, sub.values, c_plus - c_minus)
        plus, minus = _select_balanced(scores, members)
        c_plus = kernels.sum_rows(sub.indptr, sub.indices, sub.values, plus, sub.cols)
        c_plus /= n_plus
        c_minus = kernels.sum_rows(sub.indptr, sub.indices, sub.values, minus, sub.cols)
        c_minus /= n_minus
        trace.append(
            n_plus * float(np.dot(c_plus, c_plus))
            + n_minus * float(np.dot(c_minus, c_minus))
        )
        assign = np.zeros(m, dtype=bool)
        assign[plus] = True
        if prev is not None and np.array_equal(assign, prev):
            iterations = it
            converged = True
            break
        prev = assign
    return SplitResult(
        members[plus], members[minus], iterations, converged, tuple(trace)
    )


def _ideal_inverses(sub: SparseMatrix, base: float | None) -> np.ndarray:
    """1 / best-achievable gain per row; 0 for all-zero rows."""
    out = np.zeros(sub.rows, dtype=np.float64)
    logb = math.log(base) if base is not None else 1.0
    for i in range(sub.rows):
        s, e = sub.indptr[i], sub.indptr[i + 1]
        if e == s:
            continue
        vals = np.sort(sub.values[s:e])[::-1]
        ideal = float(np.sum(vals / (np.log(np.arange(2.0, vals.shape[0] + 2.0)) / logb)))
        out[i] = 1.0 / ideal
    return out


def ndcg_split(
    members: np.ndarray,
    rs: ReprSet,
    rng: np.random.Generator,
    max_iters: int = MAX_ITERS,
    base: float | None = None,
) -> SplitResult:
    """Balanced split scored by gain against two centroid rankings.

    Centroid rankings are recomputed as the rank of the ideal-weighted sum of
    each side's representatives; the log base cancels out of every gain ratio,
    so it cannot change the resulting partition.
    """
    members = np.asarray(members, dtype=np.int64)
    m = members.shape[0]
    if m < 2:
        raise ValueError("need at least two features to split")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    sub = rs.matrix.take_rows(members)
    if sub.values.size and np.any(sub.values < 0):
        raise ValueError("representatives must be nonnegative")
    p = sub.cols
    inv_ideal = _ideal_inverses(sub, base)

    picked = _pick_two_distinct(sub, rng)
    if picked is None:
        return _index_order_split(members)
    r_plus = Ranking.rank_of(_dense_row(sub, picked[0]))
    r_minus = Ranking.rank_of(_dense_row(sub, picked[1]))

    logb = math.log(base) if base is not None else 1.0

    def gains(r: Ranking) -> np.ndarray:
        return logb / np.log(1.0 + r.positions())

    prev = None
    plus = minus = None
    iterations = max_iters
    converged = False
    for it in range(1, max_iters + 1):
        gdiff = gains(r_plus) - gains(r_minus)
        scores = inv_ideal * kernels.row_dots(sub.indptr, sub.indices, sub.values, gdiff)
        plus, minus = _select_balanced(scores, members)
        r_plus = Ranking.rank_of(
            kernels.weighted_sum_rows(
                sub.indptr, sub.indices, sub.values, plus, inv_ideal[plus], p
            )
        )
        r_minus = Ranking.rank_of(
            kernels.weighted_sum_rows(
                sub.indptr, sub.indices, sub.values, minus, inv_ideal[minus], p
            )
        )
        assign = np.zeros(m, dtype=bool)
        assign[plus] = True
        if prev is not None and np.array_equal(assign, prev):
            iterations = it
            converged = True
            break
        prev = assign
    return SplitResult(members[plus], members[minus], iterations, converged)
