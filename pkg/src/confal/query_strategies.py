"""Uncertainty measures and HRQ/UQ/RQ batch composition."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data_model import ClassDistribution, QueryBatch
from .featurize import FeatureMatrix
from .learner import TrainedModel, anomaly_scores_from_proba, predict_proba_matrix

MEASURES = ("least_confident", "margin", "entropy")


def _probs(p) -> np.ndarray:
    if isinstance(p, ClassDistribution):
        return np.array(p.probabilities)
    return np.asarray(p, dtype=np.float64)


def least_confident(p: ClassDistribution) -> float:
    return float(1.0 - _probs(p).max())


def margin(p: ClassDistribution) -> float:
    """Top probability minus runner-up; small values mean uncertain."""
    a = _probs(p)
    if a.size < 2:
        raise ValueError("margin needs at least two classes")
    top2 = np.sort(a)[-2:]
    return float(top2[1] - top2[0])


def entropy(p: ClassDistribution) -> float:
    """Shannon entropy in nats, with 0 * ln 0 taken as 0."""
    a = _probs(p)
    nz = a[a > 0]
    return float(-np.sum(nz * np.log(nz))) + 0.0


def uncertainty_values(P: np.ndarray, measure: str) -> np.ndarray:
    """Row-wise measure over an (n, k) probability matrix."""
    P = np.atleast_2d(P)
    if measure == "least_confident":
        return 1.0 - P.max(axis=1)
    if measure == "margin":
        if P.shape[1] < 2:
            raise ValueError("margin needs at least two classes")
        top2 = np.sort(P, axis=1)[:, -2:]
        return top2[:, 1] - top2[:, 0]
    if measure == "entropy":
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(P > 0, P * np.log(P), 0.0)
        return -terms.sum(axis=1) + 0.0
    raise ValueError(f"unknown uncertainty measure {measure!r}")


def most_uncertain_first(values: np.ndarray, measure: str) -> np.ndarray:
    """Sort key where smaller means more uncertain."""
    return values if measure == "margin" else -values


def _top_k(ids: np.ndarray, key: np.ndarray, k: int) -> list[int]:
    """Ids of the ``k`` smallest keys; ties go to the smaller id."""
    if k <= 0:
        return []
    order = np.lexsort((ids, key))
    return [int(i) for i in ids[order[:k]]]


def rank_hrq(pool: FeatureMatrix, model: TrainedModel, k: int) -> list[int]:
    """Top-``k`` ids by descending anomaly score."""
    if len(pool) == 0:
        raise ValueError("empty pool")
    scores = anomaly_scores_from_proba(predict_proba_matrix(model, pool))
    return _top_k(pool.ids, -scores, k)


def rank_uq(pool: FeatureMatrix, model: TrainedModel, k: int, measure: str = "margin") -> list[int]:
    """Top-``k`` most uncertain ids under ``measure``."""
    if len(pool) == 0:
        raise ValueError("empty pool")
    values = uncertainty_values(predict_proba_matrix(model, pool), measure)
    return _top_k(pool.ids, most_uncertain_first(values, measure), k)


@dataclass(frozen=True)
class BatchSizes:
    hrq: int = 14
    uq: int = 3
    rq: int = 3

    def __post_init__(self):
        if min(self.hrq, self.uq, self.rq) < 0:
            raise ValueError("batch sizes must be non-negative")

    @property
    def total(self) -> int:
        return self.hrq + self.uq + self.rq


def select_batch(ids: np.ndarray, anomaly: np.ndarray, uncertainty: np.ndarray, measure: str,
                 sizes: BatchSizes, seed, round_no: int = 1) -> QueryBatch:
    """Fill HRQ slots, then UQ from what is left, then RQ uniformly at random."""
    ids = np.asarray(ids, dtype=np.int64)
    if ids.size == 0:
        raise ValueError("empty pool")
    hrq = _top_k(ids, -np.asarray(anomaly), sizes.hrq)
    remaining = ~np.isin(ids, hrq)
    rest_ids = ids[remaining]
    uq = _top_k(rest_ids, most_uncertain_first(np.asarray(uncertainty)[remaining], measure), sizes.uq)
    leftover = np.sort(rest_ids[~np.isin(rest_ids, uq)])
    n_rq = min(sizes.rq, leftover.size)
    rng = np.random.default_rng(seed)
    rq = [int(i) for i in rng.choice(leftover, size=n_rq, replace=False)] if n_rq else []
    return QueryBatch(round_no, tuple(hrq), tuple(uq), tuple(rq))


def score_pool(model: TrainedModel, pool: FeatureMatrix, measure: str = "margin") -> tuple[np.ndarray, np.ndarray]:
    """Anomaly score and uncertainty value for every pool row."""
    P = predict_proba_matrix(model, pool)
    return anomaly_scores_from_proba(P), uncertainty_values(P, measure)


def compose_batch(pool: FeatureMatrix, model: TrainedModel, sizes: BatchSizes = BatchSizes(), seed=0,
                  measure: str = "margin", round_no: int = 1) -> QueryBatch:
    if len(pool) == 0:
        raise ValueError("empty pool")
    anomaly, unc = score_pool(model, pool, measure)
    return select_batch(pool.ids, anomaly, unc, measure, sizes, seed, round_no)
