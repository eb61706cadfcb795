"""Gradient-boosted tree classifier used as the active learner.

Binary and 11-class (pseudo-probability) modes share one softmax booster.
Training rows are sorted by instance id before anything else happens, so the
fitted model does not depend on the order in which rows were supplied.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _gbdt
from .data_model import ClassDistribution, FeatureVector
from .featurize import FeatureMatrix

MODEL_FORMAT = "confal-gbdt"
MODEL_VERSION = 1


class SchemaMismatch(ValueError):
    pass


@dataclass(frozen=True)
class LearnerConfig:
    n_boosting_rounds: int = 200
    learning_rate: float = 0.1
    max_depth: int = 4
    min_samples_leaf: int = 5
    n_histogram_bins: int = 32
    class_count: int = 2
    seed: int = 0
    l2_regularization: float = 1.0
    balance_classes: bool = True
    max_step_halvings: int = 30

    def __post_init__(self):
        if self.class_count not in (2, 11):
            raise ValueError("class_count must be 2 or 11")
        if self.n_boosting_rounds < 0:
            raise ValueError("n_boosting_rounds must be non-negative")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.max_depth < 1 or self.min_samples_leaf < 1:
            raise ValueError("max_depth and min_samples_leaf must be positive")
        if not 2 <= self.n_histogram_bins <= 256:
            raise ValueError("n_histogram_bins must lie in 2..256")
        if self.l2_regularization < 0:
            raise ValueError("l2_regularization must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "LearnerConfig":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown learner settings: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class TrainedModel:
    config: LearnerConfig
    feature_schema_hash: str
    feature_names: tuple[str, ...]
    base_scores: np.ndarray
    tree_class: np.ndarray
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    train_loss: tuple[float, ...] = ()

    @property
    def n_classes(self) -> int:
        return self.config.class_count

    def trees_for_class(self, c: int) -> list[int]:
        return [int(t) for t in np.flatnonzero(self.tree_class == c)]

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "feature_schema_hash": self.feature_schema_hash,
            "feature_names": list(self.feature_names),
            "config": self.config.to_dict(),
            "base_scores": self.base_scores.tolist(),
            "train_loss": list(self.train_loss),
            "trees": [
                {
                    "class": int(self.tree_class[t]),
                    "feature": self.feature[t].tolist(),
                    "threshold": self.threshold[t].tolist(),
                    "left": self.left[t].tolist(),
                    "right": self.right[t].tolist(),
                    "value": self.value[t].tolist(),
                }
                for t in range(len(self.tree_class))
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainedModel":
        if data.get("format") != MODEL_FORMAT or data.get("version") != MODEL_VERSION:
            raise ValueError("not a supported model file")
        cfg = LearnerConfig.from_dict(data["config"])
        trees = data["trees"]
        width = 2 ** (cfg.max_depth + 1) - 1

        def stack(key, dtype):
            return np.array([t[key] for t in trees], dtype=dtype).reshape(len(trees), width)

        return cls(
            config=cfg,
            feature_schema_hash=data["feature_schema_hash"],
            feature_names=tuple(data["feature_names"]),
            base_scores=np.array(data["base_scores"], dtype=np.float64),
            tree_class=np.array([t["class"] for t in trees], dtype=np.int32),
            feature=stack("feature", np.int32),
            threshold=stack("threshold", np.float64),
            left=stack("left", np.int32),
            right=stack("right", np.int32),
            value=stack("value", np.float64),
            train_loss=tuple(data.get("train_loss", ())),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "TrainedModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def bin_edges(column: np.ndarray, n_bins: int) -> np.ndarray:
    """Upper bin edges; a value ``x`` falls in bin ``#(edges < x)``."""
    uniq = np.unique(column)
    if len(uniq) <= n_bins:
        return (uniq[:-1] + uniq[1:]) / 2.0
    qs = np.quantile(column, np.linspace(0.0, 1.0, n_bins + 1)[1:-1])
    return np.unique(qs)


def untrained_model(features: FeatureMatrix, config: LearnerConfig) -> TrainedModel:
    """A model with no trees: uniform scores over ``config.class_count`` classes."""
    width = 2 ** (config.max_depth + 1) - 1
    empty_i = np.empty((0, width), dtype=np.int32)
    return TrainedModel(
        config=config,
        feature_schema_hash=features.schema.digest,
        feature_names=features.schema.feature_names,
        base_scores=np.zeros(config.class_count),
        tree_class=np.empty(0, dtype=np.int32),
        feature=empty_i,
        threshold=np.empty((0, width)),
        left=empty_i.copy(),
        right=empty_i.copy(),
        value=np.empty((0, width)),
    )


def _class_weights(y: np.ndarray, k: int) -> np.ndarray:
    counts = np.bincount(y, minlength=k).astype(np.float64)
    present = counts > 0
    per_class = np.zeros(k)
    per_class[present] = len(y) / (present.sum() * counts[present])
    return per_class[y]


def train(features: FeatureMatrix | Sequence[FeatureVector], targets: Sequence[int],
          config: LearnerConfig, schema=None) -> TrainedModel:
    """Fit a boosted ensemble on class indices ``targets`` (0..class_count-1)."""
    if not isinstance(features, FeatureMatrix):
        if schema is None:
            raise SchemaMismatch("a FeatureSchema is required when training from FeatureVectors")
        features = FeatureMatrix.from_vectors(list(features), schema)
    y = np.asarray(targets, dtype=np.int64)
    if y.shape != (len(features),):
        raise ValueError(f"{len(y)} targets for {len(features)} feature rows")
    k = config.class_count
    if len(y) and (y.min() < 0 or y.max() >= k):
        raise ValueError(f"targets must lie in 0..{k - 1}")
    if len(np.unique(y)) < 2:
        raise ValueError("degenerate training set: fewer than two distinct target classes")
    if len(np.unique(features.ids)) != len(features.ids):
        raise ValueError("duplicate instance ids in training set")

    order = np.argsort(features.ids, kind="stable")
    X = features.X[order]
    y = y[order]
    w = _class_weights(y, k) if (config.balance_classes and k == 2) else np.ones(len(y))

    edges = [bin_edges(X[:, f], config.n_histogram_bins) for f in range(X.shape[1])]
    binned = np.empty(X.shape, dtype=np.uint8)
    for f, e in enumerate(edges):
        binned[:, f] = np.searchsorted(e, X[:, f], side="left")
    n_bins = np.array([len(e) + 1 for e in edges], dtype=np.int64)

    base = np.zeros(k)
    feature, bin_thr, left, right, value, losses, _ = _gbdt.fit_softmax_boosting(
        binned, n_bins, y, w, k, base, config.n_boosting_rounds, config.learning_rate,
        config.max_depth, config.min_samples_leaf, config.l2_regularization, config.max_step_halvings)

    threshold = np.zeros(bin_thr.shape)
    internal = feature >= 0
    for t, node in zip(*np.nonzero(internal)):
        threshold[t, node] = edges[feature[t, node]][bin_thr[t, node]]
    tree_class = np.tile(np.arange(k, dtype=np.int32), config.n_boosting_rounds)
    return TrainedModel(
        config=config,
        feature_schema_hash=features.schema.digest,
        feature_names=features.schema.feature_names,
        base_scores=base,
        tree_class=tree_class,
        feature=feature,
        threshold=threshold,
        left=left,
        right=right,
        value=value,
        train_loss=tuple(float(v) for v in losses),
    )


def _as_matrix(model: TrainedModel, x) -> np.ndarray:
    if isinstance(x, FeatureMatrix):
        if x.schema.digest != model.feature_schema_hash:
            raise SchemaMismatch("feature schema does not match the model")
        return x.X
    if isinstance(x, FeatureVector):
        if x.feature_names != model.feature_names:
            raise SchemaMismatch(f"feature vector {x.id} does not match the model schema")
        return np.array([x.values], dtype=np.float64)
    raise TypeError(f"expected FeatureMatrix or FeatureVector, got {type(x).__name__}")


def predict_proba_matrix(model: TrainedModel, x: FeatureMatrix | FeatureVector) -> np.ndarray:
    """Class probabilities, one row per input row."""
    X = np.ascontiguousarray(_as_matrix(model, x), dtype=np.float64)
    raw = _gbdt.predict_raw(X, model.base_scores, model.tree_class, model.feature, model.threshold,
                            model.left, model.right, model.value)
    return _gbdt.softmax(raw)


def predict_proba(model: TrainedModel, x: FeatureVector) -> ClassDistribution:
    return ClassDistribution(tuple(predict_proba_matrix(model, x)[0]))


def anomaly_scores_from_proba(P: np.ndarray) -> np.ndarray:
    """P(True) for 2 classes, expected pseudo-probability ``sum c/10 * P(c)`` for 11."""
    P = np.atleast_2d(P)
    if P.shape[1] == 2:
        return P[:, 1].copy()
    if P.shape[1] == 11:
        return P @ (np.arange(11) / 10.0)
    raise ValueError(f"no anomaly score defined for {P.shape[1]} classes")


def anomaly_score(model: TrainedModel, x: FeatureVector) -> float:
    return float(anomaly_scores_from_proba(predict_proba_matrix(model, x))[0])


def anomaly_scores(model: TrainedModel, x: FeatureMatrix) -> np.ndarray:
    return anomaly_scores_from_proba(predict_proba_matrix(model, x))
