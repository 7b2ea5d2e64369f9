"""Outlier filtering, stratified splitting and a logistic-regression classifier."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

LOSS_TOLERANCE = 1e-6


class ProtocolError(ValueError):
    pass


class TrainingError(RuntimeError):
    pass


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    doc_ids: list[str]

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        if self.X.ndim == 1:
            self.X = self.X.reshape(-1, 1)
        self.y = np.asarray(self.y, dtype=int)
        self.doc_ids = list(self.doc_ids)
        if not (len(self.X) == len(self.y) == len(self.doc_ids)):
            raise ValueError("X, y and doc_ids must have the same length")
        if len(self.y) and not np.isin(self.y, (0, 1)).all():
            raise ValueError("labels must be 0 (human) or 1 (machine)")

    def __len__(self):
        return len(self.y)

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        return Dataset(self.X[idx], self.y[idx], [self.doc_ids[i] for i in idx])

    @classmethod
    def from_feature_rows(cls, rows: Sequence[dict]) -> "Dataset":
        lengths = {len(r["flat"]) for r in rows}
        if len(lengths) > 1:
            raise ValueError(f"feature vectors differ in length: {sorted(lengths)}")
        X = np.array([r["flat"] for r in rows], dtype=float).reshape(len(rows), -1)
        return cls(X, [r["label"] for r in rows], [r["doc_id"] for r in rows])


def filter_outliers(dataset: Dataset, iqr_factor: float = 1.5) -> Dataset:
    """Drop rows with any feature outside ``[Q1 - f*IQR, Q3 + f*IQR]``.

    Quartiles use linear interpolation between order statistics (numpy's
    default ``"linear"`` method), computed over all rows.
    """
    if len(dataset) < 4:
        raise ValueError(f"IQR filtering needs at least 4 rows, got {len(dataset)}")
    if iqr_factor <= 0:
        raise ValueError("iqr_factor must be positive")
    q1, q3 = np.percentile(dataset.X, [25, 75], axis=0)
    iqr = q3 - q1
    lo, hi = q1 - iqr_factor * iqr, q3 + iqr_factor * iqr
    keep = np.all((dataset.X >= lo) & (dataset.X <= hi), axis=1)
    return dataset.subset(np.flatnonzero(keep))


def split_stratified(dataset: Dataset, train_fraction: float = 0.8, seed: int = 0):
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    classes = np.unique(dataset.y)
    if len(classes) < 2:
        raise ProtocolError("stratified split needs both classes")
    rng = np.random.default_rng(seed)
    train_idx, test_idx = [], []
    for c in (0, 1):
        idx = np.flatnonzero(dataset.y == c)
        idx = idx[rng.permutation(len(idx))]
        n_train = int(round(train_fraction * len(idx)))
        train_idx.extend(idx[:n_train])
        test_idx.extend(idx[n_train:])
    return dataset.subset(sorted(train_idx)), dataset.subset(sorted(test_idx))


@dataclass
class Normalizer:
    mean: np.ndarray
    sd: np.ndarray
    keep: np.ndarray  # boolean mask of retained (non-constant) features

    @classmethod
    def fit(cls, X: np.ndarray) -> "Normalizer":
        mean = X.mean(axis=0)
        sd = X.std(axis=0)
        keep = sd > 0
        if not keep.all():
            logger.info("dropping %d zero-variance feature(s)", int((~keep).sum()))
        return cls(mean, sd, keep)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        return (X[:, self.keep] - self.mean[self.keep]) / self.sd[self.keep]


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.1
    epochs: int = 500
    l2: float = 1e-3
    seed: int = 0


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def loss_and_grad(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float):
    """Mean binary cross-entropy plus ``l2/2 * |w|^2`` and its gradient."""
    z = X @ w + b
    # log(1 + e^z) - y z, written stably
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * w @ w)
    r = _sigmoid(z) - y
    grad_w = X.T @ r / len(y) + l2 * w
    grad_b = float(np.mean(r))
    return loss, grad_w, grad_b


@dataclass
class ClassifierModel:
    weights: np.ndarray
    bias: float
    normalizer: Optional[Normalizer] = None
    config: TrainConfig = TrainConfig()
    loss_curve: list[float] = field(default_factory=list)

    def decision_function(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.normalizer is not None:
            X = self.normalizer.transform(X)
        return X @ self.weights + self.bias

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.decision_function(X))

    def predict(self, X) -> np.ndarray:
        return (self.predict_proba(X) >= 0.5).astype(int)

    def to_dict(self) -> dict:
        norm = None
        if self.normalizer is not None:
            norm = {
                "mean": self.normalizer.mean.tolist(),
                "sd": self.normalizer.sd.tolist(),
                "keep": self.normalizer.keep.tolist(),
            }
        cfg = self.config
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "normalization": norm,
            "config": {"learning_rate": cfg.learning_rate, "epochs": cfg.epochs, "l2": cfg.l2},
            "seed": cfg.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifierModel":
        norm = None
        if d.get("normalization"):
            n = d["normalization"]
            norm = Normalizer(np.array(n["mean"]), np.array(n["sd"]), np.array(n["keep"], dtype=bool))
        cfg = TrainConfig(seed=d.get("seed", 0), **d.get("config", {}))
        return cls(np.array(d["weights"], dtype=float), float(d["bias"]), norm, cfg)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), sort_keys=True) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path) -> "ClassifierModel":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def fit_logistic(X: np.ndarray, y: np.ndarray, config: TrainConfig = TrainConfig()):
    """Full-batch gradient descent from zero weights on already-scaled features."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(np.unique(y)) < 2:
        raise ProtocolError("training data must contain both classes")
    w = np.zeros(X.shape[1])
    b = 0.0
    curve = []
    prev = np.inf
    for epoch in range(config.epochs):
        loss, gw, gb = loss_and_grad(w, b, X, y, config.l2)
        if loss > prev + LOSS_TOLERANCE:
            raise TrainingError(f"loss increased at epoch {epoch}: {prev:.8g} -> {loss:.8g}")
        curve.append(loss)
        prev = loss
        w = w - config.learning_rate * gw
        b = b - config.learning_rate * gb
    return w, b, curve


def train(train_set: Dataset, config: TrainConfig = TrainConfig(), normalize: bool = True) -> ClassifierModel:
    if len(np.unique(train_set.y)) < 2:
        raise ProtocolError("training data must contain both classes")
    normalizer = Normalizer.fit(train_set.X) if normalize else None
    X = normalizer.transform(train_set.X) if normalizer else train_set.X
    w, b, curve = fit_logistic(X, train_set.y, config)
    return ClassifierModel(w, b, normalizer, config, curve)


def classification_report(y_true, y_pred) -> dict:
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    tp = int(np.sum((y_pred == 1) & (y_true == 1)))
    fp = int(np.sum((y_pred == 1) & (y_true == 0)))
    fn = int(np.sum((y_pred == 0) & (y_true == 1)))
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    accuracy = float(np.mean(y_true == y_pred)) if len(y_true) else 0.0
    return {"f1": f1, "precision": precision, "recall": recall, "accuracy": accuracy}


def evaluate(model: ClassifierModel, test_set: Dataset) -> dict:
    if len(test_set) == 0:
        raise ValueError("test set is empty")
    return classification_report(test_set.y, model.predict(test_set.X))
