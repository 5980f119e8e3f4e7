import math

import numpy as np
import pytest

from featagg.cooc import build_cooc, impute
from featagg.reranking import (
    affinity,
    affinity_scores,
    build_prototypes,
    rerank,
    rerank_predictions,
)
from featagg.sparse import SparseVec, norm
from featagg.tree import FeaturePartition
from featagg.xcmetrics import Prediction

from helpers import dataset_from_dense, dense_cooc_oracle, vec


@pytest.fixture
def small_setup(rng):
    feats = rng.random((6, 6)) * (rng.random((6, 6)) > 0.3)
    feats[0] = [1.0, 0.5, 0.0, 0.0, 0.0, 0.0]
    labels = [{0}, {1}, {0, 1}, {2}, {2}, {1}]
    ds = dataset_from_dense(feats, labels, 3)
    part = FeaturePartition.from_clusters(
        6, [np.array([0, 1]), np.array([2, 3]), np.array([4, 5])]
    )
    return ds, part, build_cooc(ds, part)


class TestBuildPrototypes:
    def test_single_positive_point_is_imputation(self):
        ds = dataset_from_dense([[1.0, 2.0, 0.0]], [{0}], 1)
        part = FeaturePartition.from_clusters(3, [np.array([0, 1]), np.array([2])])
        c = build_cooc(ds, part)
        ps = build_prototypes(c, ds, normalize=False)
        expected = impute(c, ds.features.row(0))
        assert ps.prototype(0) == expected

    def test_label_without_positives_is_zero(self):
        ds = dataset_from_dense([[1.0, 0.0]], [{0}], 2)
        part = FeaturePartition.from_clusters(2, [np.array([0]), np.array([1])])
        ps = build_prototypes(build_cooc(ds, part), ds, normalize=False)
        assert ps.prototype(1).nnz == 0

    def test_matches_dense_triple_product(self, small_setup):
        ds, part, c = small_setup
        ps = build_prototypes(c, ds, normalize=False)
        X = ds.features.to_dense()
        Y = ds.labels.to_dense()
        C = dense_cooc_oracle(X, part.clusters)
        oracle = C @ X.T @ Y  # columns are the prototypes
        for l in range(3):
            assert np.allclose(ps.prototype(l).to_dense(), oracle[:, l], atol=1e-9)

    def test_normalized_prototypes_are_unit(self, small_setup):
        ds, part, c = small_setup
        ps = build_prototypes(c, ds, normalize=True)
        for l in range(3):
            p = ps.prototype(l)
            if p.nnz:
                assert norm(p, 2) == pytest.approx(1.0, rel=1e-12)


class TestAffinity:
    def test_zero_distance_scores_one(self, small_setup):
        ds, part, c = small_setup
        ps = build_prototypes(c, ds, normalize=False)
        x = ps.prototype(0)
        assert affinity(x, ps, 0) == pytest.approx(1.0)

    def test_direct_substitution(self):
        # gamma = 2, squared distance 1 -> e^{-1}
        ds = dataset_from_dense([[1.0]], [{0}], 1)
        part = FeaturePartition.from_clusters(1, [np.array([0])])
        ps = build_prototypes(build_cooc(ds, part), ds, normalize=True, gamma=2.0)
        x = SparseVec.from_dense(ps.prototype(0).to_dense() + 0.0)
        # prototype is ( 1 ); move the query 1 unit away in the same axis
        x = vec(1, {0: float(ps.prototype(0).values[0] + 1.0)})
        assert affinity(x, ps, 0) == pytest.approx(math.exp(-1.0), rel=1e-12)

    def test_strictly_decreasing_in_distance(self, small_setup):
        ds, part, c = small_setup
        ps = build_prototypes(c, ds, normalize=True)
        base = ps.prototype(0).to_dense()
        last = None
        for step in (0.0, 0.5, 1.0, 2.0):
            x = SparseVec.from_dense(base + step)
            val = affinity(x, ps, 0)
            if last is not None:
                assert val < last
            last = val

    def test_batch_matches_scalar(self, small_setup, rng):
        ds, part, c = small_setup
        ps = build_prototypes(c, ds, normalize=True)
        x = SparseVec.from_dense(rng.random(6))
        batch = affinity_scores(x, ps, np.array([0, 1, 2]))
        for l in range(3):
            assert batch[l] == pytest.approx(affinity(x, ps, l), rel=1e-12)


class TestRerank:
    def test_alpha_one_keeps_base_ranking(self):
        labels = np.array([4, 1, 7])
        base = np.array([0.9, 0.5, 0.1])
        out_labels, _ = rerank(labels, base, np.array([0.01, 0.5, 0.99]), alpha=1.0)
        assert list(out_labels) == [4, 1, 7]

    def test_alpha_zero_keeps_affinity_ranking(self):
        labels = np.array([4, 1, 7])
        base = np.array([0.9, 0.5, 0.1])
        out_labels, _ = rerank(labels, base, np.array([0.01, 0.5, 0.99]), alpha=0.0)
        assert list(out_labels) == [7, 1, 4]

    def test_affinity_breaks_base_tie(self):
        out_labels, _ = rerank(
            np.array([0, 1]), np.array([0.5, 0.5]), np.array([0.9, 0.1]), alpha=0.8
        )
        assert list(out_labels) == [0, 1]

    def test_nonpositive_base_scores_excluded(self):
        out_labels, _ = rerank(
            np.array([0, 1, 2]), np.array([0.5, 0.0, -1.0]),
            np.array([0.1, 0.9, 0.9]),
        )
        assert list(out_labels) == [0]

    def test_invariant_to_common_rescale(self, rng):
        labels = np.arange(6)
        base = rng.uniform(0.1, 1.0, size=6)
        aff = rng.uniform(0.1, 1.0, size=6)
        l1, _ = rerank(labels, base, aff)
        l2, _ = rerank(labels, base * 37.5, aff)
        assert np.array_equal(l1, l2)

    def test_tie_break_by_label_id(self):
        out_labels, _ = rerank(
            np.array([5, 2]), np.array([0.5, 0.5]), np.array([0.5, 0.5])
        )
        assert list(out_labels) == [2, 5]


def test_rerank_predictions_pipeline(small_setup):
    ds, part, c = small_setup
    ps = build_prototypes(c, ds, normalize=True)
    preds = [
        Prediction(np.array([0, 1, 2]), np.array([0.8, 0.7, 0.1]))
        for _ in range(ds.n)
    ]
    out = rerank_predictions(preds, ps, ds.features, alpha=0.8, shortlist=3)
    assert len(out) == ds.n
    for pr in out:
        assert set(pr.labels.tolist()) <= {0, 1, 2}
        assert np.all(np.diff(pr.scores) <= 0)
