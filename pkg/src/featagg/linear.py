"""Minimal one-vs-rest logistic baseline for end-to-end experiments.

One binary logistic model per label, trained by seeded per-sample SGD with L2
regularization. Deliberately desk-scale: a guard refuses huge label spaces
unless overridden. Scores are linear in the input, so models trained on
agglomerated features are directly comparable to models on the original ones.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from . import kernels
from .dataio import Dataset
from .sparse import SparseMatrix, SparseVec
from .xcmetrics import Prediction, PredictionList

LABEL_GUARD = 10_000


@dataclass(frozen=True)
class OvaConfig:
    loss: str = "logistic"
    epochs: int = 10
    lr: float = 0.5
    lr_decay: float = 1.0  # per-epoch inverse decay; 0 keeps lr constant
    l2: float = 1e-4
    seed: int = 0
    allow_large: bool = False


@dataclass(frozen=True)
class OvaModel:
    weights: np.ndarray  # (n_labels, dim)
    bias: np.ndarray  # (n_labels,)
    config: OvaConfig

    @property
    def dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def n_labels(self) -> int:
        return int(self.weights.shape[0])


def train_ova(
    ds: Dataset, config: OvaConfig = OvaConfig(), threads: int = 1
) -> OvaModel:
    """Train one binary model per label; bit-identical given the seed.

    Labels are independent jobs: each derives its own RNG from (seed, label),
    so the result does not depend on the worker count.
    """
    if config.loss != "logistic":
        raise ValueError(f"unsupported loss {config.loss!r}")
    n_labels = ds.n_labels
    if n_labels > LABEL_GUARD and not config.allow_large:
        raise ValueError(
            f"{n_labels} labels exceeds the desk-scale guard of {LABEL_GUARD}; "
            "set allow_large to override"
        )
    feats = ds.features
    n, dim = feats.rows, feats.cols
    yt = ds.labels.transpose()
    weights = np.zeros((n_labels, dim), dtype=np.float64)
    bias = np.zeros(n_labels, dtype=np.float64)
    seed = config.seed % 2**63

    def fit_label(l: int) -> tuple[int, np.ndarray, float]:
        sign = np.full(n, -1.0, dtype=np.float64)
        s, e = yt.indptr[l], yt.indptr[l + 1]
        sign[yt.indices[s:e]] = 1.0
        rng = np.random.default_rng(np.random.SeedSequence([seed, l]))
        order = np.concatenate(
            [rng.permutation(n) for _ in range(config.epochs)]
        ).astype(np.int64)
        w, b = kernels.ova_sgd(
            feats.indptr, feats.indices, feats.values,
            sign, order, dim, config.lr, config.l2, config.lr_decay, n,
        )
        return l, w, b

    if threads > 1 and n_labels > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(fit_label, range(n_labels))
    else:
        results = map(fit_label, range(n_labels))
    for l, w, b in results:
        weights[l] = w
        bias[l] = b
    return OvaModel(weights=weights, bias=bias, config=config)


def decision_scores(model: OvaModel, x: SparseMatrix | SparseVec) -> np.ndarray:
    """Raw margins w.x + b, shape (n, n_labels) or (n_labels,) for one vector."""
    if isinstance(x, SparseVec):
        if x.dim != model.dim:
            raise ValueError(f"vector dim {x.dim} != model dim {model.dim}")
        return model.weights[:, x.indices] @ x.values + model.bias
    if x.cols != model.dim:
        raise ValueError(f"matrix cols {x.cols} != model dim {model.dim}")
    return kernels.score_rows(x.indptr, x.indices, x.values, model.weights, model.bias)


def probability_scores(model: OvaModel, x: SparseMatrix | SparseVec) -> np.ndarray:
    """Sigmoid of the margins: positive scores usable under a log transform."""
    margins = np.clip(decision_scores(model, x), -500.0, 500.0)
    return 1.0 / (1.0 + np.exp(-margins))


def _top_k(scores: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    order = np.lexsort((np.arange(scores.shape[0]), -scores))[:k]
    return order, scores[order]


def predict(
    model: OvaModel, x: SparseMatrix | SparseVec, k: int, probabilities: bool = True
) -> PredictionList:
    """Top-k labels per point by score, ties by ascending label id."""
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > model.n_labels:
        raise ValueError(f"k={k} exceeds the {model.n_labels}-label universe")
    scores = (
        probability_scores(model, x) if probabilities else decision_scores(model, x)
    )
    if scores.ndim == 1:
        scores = scores[None, :]
    out: PredictionList = []
    for row in scores:
        labels, vals = _top_k(row, k)
        out.append(Prediction(labels, vals))
    return out


def save_model(model: OvaModel, path: str) -> None:
    payload = {
        "config": asdict(model.config),
        "dim": model.dim,
        "bias": model.bias.tolist(),
        "weights": [w.tolist() for w in model.weights],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
        fh.write("\n")


def load_model(path: str) -> OvaModel:
    with open(path, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    config = OvaConfig(**payload["config"])
    weights = np.asarray(payload["weights"], dtype=np.float64)
    if weights.size == 0:
        weights = weights.reshape(0, int(payload["dim"]))
    return OvaModel(
        weights=weights,
        bias=np.asarray(payload["bias"], dtype=np.float64),
        config=config,
    )
