"""Label prototypes from the pseudo co-occurrence matrix and score-combined
reranking.

Each label gets a closed-form prototype: the co-occurrence matrix applied to
the sum of that label's positive points. A test point's affinity to a label is
a Gaussian kernel of its distance to the prototype, and the final ranking
combines log base-classifier scores with log affinities over a shortlist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .cooc import PseudoCooc
from .dataio import Dataset
from .sparse import SparseMatrix, SparseVec, dot, norm
from .xcmetrics import Prediction, PredictionList

_LOG_FLOOR = 1e-300  # keeps log(affinity) finite when the kernel underflows


@dataclass(frozen=True)
class PrototypeSet:
    """One prototype vector per label plus the kernel width."""

    matrix: SparseMatrix  # one row per label, dim = d
    gamma: float
    normalized: bool

    @property
    def n_labels(self) -> int:
        return self.matrix.rows

    @property
    def dim(self) -> int:
        return self.matrix.cols

    def prototype(self, l: int) -> SparseVec:
        return self.matrix.row(l)

    def sq_norms(self) -> np.ndarray:
        row_of = np.repeat(np.arange(self.matrix.rows), self.matrix.row_nnz())
        return np.bincount(
            row_of, weights=self.matrix.values**2, minlength=self.matrix.rows
        )


def build_prototypes(
    c: PseudoCooc, ds: Dataset, normalize: bool = True, gamma: float = 1.0
) -> PrototypeSet:
    """Prototype of label l = co-occurrence matrix times the sum of its
    positive points; optional per-prototype unit L2 normalization."""
    feats = ds.features
    if feats.cols != c.d:
        raise ValueError(f"dataset dim {feats.cols} != co-occurrence dim {c.d}")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    yt = ds.labels.transpose()
    part = c.partition
    rows: list[SparseVec] = []
    for l in range(ds.n_labels):
        s, e = yt.indptr[l], yt.indptr[l + 1]
        if e == s:
            rows.append(SparseVec(c.d, validate=False))
            continue
        accum = kernels.sum_rows(
            feats.indptr, feats.indices, feats.values, yt.indices[s:e], c.d
        )
        proto = np.zeros(c.d, dtype=np.float64)
        for k, cluster in enumerate(part.clusters):
            proto[cluster] = c.blocks[k] @ accum[cluster]
        if normalize:
            nrm = math.sqrt(float(np.dot(proto, proto)))
            if nrm > 0:
                proto /= nrm
        rows.append(SparseVec.from_dense(proto))
    return PrototypeSet(
        matrix=SparseMatrix.from_rows(rows, c.d), gamma=gamma, normalized=normalize
    )


def affinity(x: SparseVec, ps: PrototypeSet, l: int) -> float:
    """exp(-gamma/2 * ||x - prototype_l||^2), in (0, 1]."""
    xi = ps.prototype(l)
    sq = norm(x, 2) ** 2 + norm(xi, 2) ** 2 - 2.0 * dot(x, xi)
    return math.exp(-0.5 * ps.gamma * max(sq, 0.0))


def affinity_scores(
    x: SparseVec, ps: PrototypeSet, labels: np.ndarray,
    proto_sq_norms: np.ndarray | None = None,
) -> np.ndarray:
    """Affinities of x to a shortlist of labels in one pass."""
    labels = np.asarray(labels, dtype=np.int64)
    sub = ps.matrix.take_rows(labels)
    dense = x.to_dense()
    dots = kernels.row_dots(sub.indptr, sub.indices, sub.values, dense)
    if proto_sq_norms is None:
        row_of = np.repeat(np.arange(sub.rows), sub.row_nnz())
        sq_p = np.bincount(row_of, weights=sub.values**2, minlength=sub.rows)
    else:
        sq_p = proto_sq_norms[labels]
    sq = norm(x, 2) ** 2 + sq_p - 2.0 * dots
    return np.exp(-0.5 * ps.gamma * np.maximum(sq, 0.0))


def rerank(
    base_labels: np.ndarray,
    base_scores: np.ndarray,
    affinities: np.ndarray,
    alpha: float = 0.8,
) -> tuple[np.ndarray, np.ndarray]:
    """Combine log base scores with log affinities; rank descending.

    Labels with nonpositive base score are excluded (their log is undefined).
    Ties break by ascending label id. Rescaling every base score by a common
    positive factor shifts all combined scores equally, leaving the ranking
    unchanged.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    base_labels = np.asarray(base_labels, dtype=np.int64)
    base_scores = np.asarray(base_scores, dtype=np.float64)
    affinities = np.asarray(affinities, dtype=np.float64)
    keep = base_scores > 0.0
    labels = base_labels[keep]
    combined = alpha * np.log(base_scores[keep]) + (1.0 - alpha) * np.log(
        np.maximum(affinities[keep], _LOG_FLOOR)
    )
    order = np.lexsort((labels, -combined))
    return labels[order], combined[order]


def rerank_predictions(
    preds: PredictionList,
    ps: PrototypeSet,
    x_test: SparseMatrix,
    alpha: float = 0.8,
    shortlist: int = 100,
    normalize_queries: bool | None = None,
) -> PredictionList:
    """Rerank each point's top shortlist by combined score.

    Test vectors are unit-normalized by default when the prototypes are, so
    distances stay in [0, 2] and the kernel width has a stable meaning.
    """
    if len(preds) != x_test.rows:
        raise ValueError("one base prediction per test row required")
    if normalize_queries is None:
        normalize_queries = ps.normalized
    sq_norms = ps.sq_norms()
    out: PredictionList = []
    for i, pr in enumerate(preds):
        labels = pr.labels[:shortlist]
        scores = pr.scores[:shortlist]
        x = x_test.row(i)
        if normalize_queries:
            nrm = norm(x, 2)
            if nrm > 0:
                x = SparseVec(x.dim, x.indices, x.values / nrm, validate=False)
        aff = affinity_scores(x, ps, labels, proto_sq_norms=sq_norms)
        new_labels, combined = rerank(labels, scores, aff, alpha)
        out.append(Prediction(new_labels, combined))
    return out
