import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from featagg.dataio import Dataset, parse_xc, stats, write_xc
from featagg.errors import ParseError
from featagg.sparse import SparseMatrix, SparseVec

class TestParse:
    def test_toy(self, toy_dataset):
        ds = toy_dataset
        assert (ds.n, ds.d, ds.n_labels) == (2, 4, 3)
        assert list(ds.labels.row(0).indices) == [0, 2]
        assert ds.features.row(0) == SparseVec.from_pairs(4, {1: 0.5, 3: 1.0})
        assert list(ds.labels.row(1).indices) == [1]
        assert ds.features.row(1) == SparseVec.from_pairs(4, {0: 2.0})

    def test_empty_label_field(self):
        ds = parse_xc("1 2 1\n 0:1\n")
        assert ds.labels.row(0).nnz == 0
        assert ds.features.row(0).nnz == 1

    def test_feature_index_out_of_bounds(self):
        with pytest.raises(ParseError, match="feature index 5"):
            parse_xc("1 2 1\n0 5:1\n")

    def test_label_index_out_of_bounds(self):
        with pytest.raises(ParseError, match="label index"):
            parse_xc("1 2 1\n1 0:1\n")

    def test_malformed_header(self):
        with pytest.raises(ParseError, match="header"):
            parse_xc("2 4\n")

    def test_non_numeric_value(self):
        with pytest.raises(ParseError, match="non-numeric"):
            parse_xc("1 2 1\n0 1:x\n")

    def test_negative_feature_value(self):
        with pytest.raises(ParseError, match="negative"):
            parse_xc("1 2 1\n0 1:-2\n")

    def test_duplicate_feature_index(self):
        with pytest.raises(ParseError, match="duplicate feature"):
            parse_xc("1 3 1\n0 1:1 1:2\n")

    def test_missing_lines(self):
        with pytest.raises(ParseError, match="expected 3 data lines"):
            parse_xc("3 2 1\n0 1:1\n")

    def test_error_carries_line_number(self):
        with pytest.raises(ParseError, match="line 3"):
            parse_xc("2 2 1\n0 1:1\n0 1:-1\n")

    def test_one_based(self):
        ds = parse_xc("1 2 2\n1,2 1:3 2:4\n", one_based=True)
        assert list(ds.labels.row(0).indices) == [0, 1]
        assert list(ds.features.row(0).indices) == [0, 1]


class TestWrite:
    def test_round_trip_toy(self, toy_dataset):
        again = parse_xc(write_xc(toy_dataset))
        assert again.features == toy_dataset.features
        assert again.labels == toy_dataset.labels

    def test_empty_dataset_header_only(self):
        ds = parse_xc("0 5 2\n")
        assert write_xc(ds) == "0 5 2\n"

    def test_header_reflects_agglomerated_dim(self, toy_dataset):
        from featagg.agglomerate import agglomerate_dataset
        from featagg.tree import FeaturePartition

        part = FeaturePartition.from_clusters(4, [np.array([0, 1]), np.array([2, 3])])
        agg = agglomerate_dataset(toy_dataset, part)
        assert write_xc(agg).splitlines()[0] == "2 2 3"

    def test_full_precision_round_trip(self):
        ds = parse_xc("1 2 1\n0 0:0.1 1:0.30000000000000004\n")
        again = parse_xc(write_xc(ds))
        assert np.array_equal(again.features.values, ds.features.values)


@st.composite
def datasets(draw):
    n = draw(st.integers(0, 6))
    d = draw(st.integers(1, 8))
    n_labels = draw(st.integers(1, 5))
    feat_rows, label_rows = [], []
    for _ in range(n):
        pairs = draw(
            st.dictionaries(
                st.integers(0, d - 1),
                st.floats(0.001, 50, allow_nan=False),
                max_size=d,
            )
        )
        feat_rows.append(SparseVec.from_pairs(d, pairs))
        labs = draw(st.sets(st.integers(0, n_labels - 1), max_size=n_labels))
        labs = sorted(labs)
        label_rows.append(SparseVec(n_labels, labs, np.ones(len(labs))))
    return Dataset(
        SparseMatrix.from_rows(feat_rows, d),
        SparseMatrix.from_rows(label_rows, n_labels),
    )


@settings(max_examples=60)
@given(datasets())
def test_parse_write_identity(ds):
    again = parse_xc(write_xc(ds))
    assert again.features == ds.features
    assert again.labels == ds.labels


class TestStats:
    def test_toy(self, toy_dataset):
        s = stats(toy_dataset)
        # mean stored features per point: (2 + 1) / 2
        assert s.avg_nnz_features == 1.5
        # mean labels per point: (2 + 1) / 2
        assert s.avg_labels == 1.5

    def test_all_empty_rows(self):
        s = stats(parse_xc("2 3 2\n\n\n"))
        assert s.avg_nnz_features == 0.0
        assert s.avg_labels == 0.0

    def test_empty_dataset(self):
        s = stats(parse_xc("0 3 2\n"))
        assert (s.avg_nnz_features, s.avg_labels) == (0.0, 0.0)
