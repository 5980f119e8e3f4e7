"""Read and write the sparse multi-label text format and dataset statistics.

Format: a header line ``n d L``, then one line per point of the form
``l1,l2,... f1:v1 f2:v2 ...`` with zero-based indices. The label field may be
empty (line starts with a space). Feature values must be nonnegative;
duplicate indices within a line are rejected rather than summed.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import ParseError
from .sparse import SparseMatrix


@dataclass(frozen=True)
class Dataset:
    """n points with nonnegative sparse features and binary sparse labels."""

    features: SparseMatrix
    labels: SparseMatrix

    def __post_init__(self):
        if self.features.rows != self.labels.rows:
            raise ValueError(
                f"features has {self.features.rows} rows, labels {self.labels.rows}"
            )
        if self.features.values.size and np.any(self.features.values < 0):
            raise ValueError("feature values must be nonnegative")
        if self.labels.values.size and np.any(self.labels.values != 1.0):
            raise ValueError("label values must all equal 1")

    @property
    def n(self) -> int:
        return self.features.rows

    @property
    def d(self) -> int:
        return self.features.cols

    @property
    def n_labels(self) -> int:
        return self.labels.cols


@dataclass(frozen=True)
class DatasetStats:
    n: int
    d: int
    n_labels: int
    avg_nnz_features: float
    avg_labels: float


def parse_xc(stream: IO[str] | str, one_based: bool = False) -> Dataset:
    """Parse the sparse text format; raises ParseError with a line number."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    header = stream.readline()
    parts = header.split()
    if len(parts) != 3:
        raise ParseError(f"expected header 'n d L', got {header.strip()!r}", line=1)
    try:
        n, d, n_labels = (int(p) for p in parts)
    except ValueError:
        raise ParseError(f"non-integer header field in {header.strip()!r}", line=1)
    if n < 0 or d < 0 or n_labels < 0:
        raise ParseError("header fields must be nonnegative", line=1)
    shift = 1 if one_based else 0

    f_indptr = np.zeros(n + 1, dtype=np.int64)
    l_indptr = np.zeros(n + 1, dtype=np.int64)
    f_indices: list[np.ndarray] = []
    f_values: list[np.ndarray] = []
    l_indices: list[np.ndarray] = []

    for i in range(n):
        lineno = i + 2
        line = stream.readline()
        if line == "":
            raise ParseError(f"expected {n} data lines, found {i}", line=lineno)
        line = line.rstrip("\n").rstrip("\r")
        fields = line.split(" ")
        label_field = fields[0]
        if label_field:
            try:
                labels = np.array(
                    [int(t) - shift for t in label_field.split(",")], dtype=np.int64
                )
            except ValueError:
                raise ParseError(f"bad label field {label_field!r}", line=lineno)
            if labels.size and (labels.min() < 0 or labels.max() >= n_labels):
                raise ParseError(
                    f"label index out of range [0, {n_labels})", line=lineno
                )
            labels = np.sort(labels)
            if labels.size > 1 and np.any(np.diff(labels) == 0):
                raise ParseError("duplicate label index", line=lineno)
        else:
            labels = np.empty(0, dtype=np.int64)

        idx_list: list[int] = []
        val_list: list[float] = []
        for tok in fields[1:]:
            if not tok:
                continue
            head, sep, tail = tok.partition(":")
            if not sep:
                raise ParseError(f"expected 'index:value', got {tok!r}", line=lineno)
            try:
                j = int(head) - shift
                v = float(tail)
            except ValueError:
                raise ParseError(f"non-numeric token {tok!r}", line=lineno)
            if j < 0 or j >= d:
                raise ParseError(
                    f"feature index {j} out of range [0, {d})", line=lineno
                )
            if v < 0:
                raise ParseError(f"negative feature value {v}", line=lineno)
            if not np.isfinite(v):
                raise ParseError(f"non-finite feature value {tail!r}", line=lineno)
            idx_list.append(j)
            val_list.append(v)
        idx = np.array(idx_list, dtype=np.int64)
        val = np.array(val_list, dtype=np.float64)
        if idx.size:
            order = np.argsort(idx, kind="stable")
            idx = idx[order]
            val = val[order]
            if idx.size > 1 and np.any(np.diff(idx) == 0):
                raise ParseError("duplicate feature index", line=lineno)
            keep = val != 0.0
            idx = idx[keep]
            val = val[keep]

        f_indices.append(idx)
        f_values.append(val)
        l_indices.append(labels)
        f_indptr[i + 1] = f_indptr[i] + idx.shape[0]
        l_indptr[i + 1] = l_indptr[i] + labels.shape[0]

    rest = stream.read()
    if rest.strip():
        raise ParseError("trailing content after the declared number of points",
                         line=n + 2)

    def _cat(chunks, dtype):
        return np.concatenate(chunks) if chunks else np.empty(0, dtype=dtype)

    features = SparseMatrix(
        n, d, f_indptr, _cat(f_indices, np.int64), _cat(f_values, np.float64),
        validate=False,
    )
    l_ind = _cat(l_indices, np.int64)
    labels_m = SparseMatrix(
        n, n_labels, l_indptr, l_ind, np.ones(l_ind.shape[0], dtype=np.float64),
        validate=False,
    )
    return Dataset(features, labels_m)


def load_xc(path: str, one_based: bool = False) -> Dataset:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_xc(fh, one_based=one_based)


def write_xc(ds: Dataset, stream: IO[str] | None = None) -> str | None:
    """Inverse of parse_xc; values printed at full round-trip precision."""
    out = stream if stream is not None else io.StringIO()
    out.write(f"{ds.n} {ds.d} {ds.n_labels}\n")
    feats, labels = ds.features, ds.labels
    for i in range(ds.n):
        ls, le = labels.indptr[i], labels.indptr[i + 1]
        out.write(",".join(str(l) for l in labels.indices[ls:le]))
        fs, fe = feats.indptr[i], feats.indptr[i + 1]
        for j, v in zip(feats.indices[fs:fe], feats.values[fs:fe]):
            out.write(f" {j}:{float(v)!r}")
        out.write("\n")
    if stream is None:
        return out.getvalue()
    return None


def save_xc(ds: Dataset, path: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        write_xc(ds, fh)


def stats(ds: Dataset) -> DatasetStats:
    """Per-dataset size and density summary."""
    n = ds.n
    avg_f = float(ds.features.nnz) / n if n else 0.0
    avg_l = float(ds.labels.nnz) / n if n else 0.0
    return DatasetStats(n=n, d=ds.d, n_labels=ds.n_labels,
                        avg_nnz_features=avg_f, avg_labels=avg_l)
