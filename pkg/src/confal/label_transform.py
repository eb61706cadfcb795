"""Confidence -> pseudo-probability classes, reclassification, and group voting."""
from __future__ import annotations

from typing import Mapping, Sequence

from .data_model import ConfidenceLabel, MulticlassLabel

RECLASSIFY_MODES = ("midpoint", "oracle")


def round_half_up(numerator: int, denominator: int) -> int:
    """``round(numerator / denominator)`` with halves rounded up, in exact integer arithmetic."""
    if denominator <= 0:
        raise ValueError("denominator must be positive")
    return (2 * numerator + denominator) // (2 * denominator)


def to_pseudo_class(label: int, confidence: int) -> int:
    """Map a binary verdict and a 0..10 confidence to a 0..10 pseudo-probability class.

    A 0-label with confidence c becomes ``10 - c``; a 1-label becomes
    ``round_half_up((c + 10) / 2)``, which always lands in 5..10.
    """
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    if isinstance(confidence, bool) or not isinstance(confidence, int) or not 0 <= confidence <= 10:
        raise ValueError(f"confidence must be an integer in 0..10, got {confidence!r}")
    if label == 0:
        return 10 - confidence
    return round_half_up(confidence + 10, 2)


def reclassify_targets(labels: Sequence[ConfidenceLabel], mode: str = "midpoint",
                       ground_truth: Mapping[int, bool] | None = None) -> list[MulticlassLabel]:
    """Pseudo-classes for training.

    ``oracle`` mode reads ground truth: a true anomaly labelled 0 with
    confidence below 5 is promoted to class 10. That leaks evaluation
    information into training; midpoint mode is the blinded alternative.
    """
    if mode not in RECLASSIFY_MODES:
        raise ValueError(f"unknown reclassify mode {mode!r}")
    if mode == "oracle" and ground_truth is None:
        raise ValueError("oracle reclassification requires ground truth")
    out = []
    for lab in labels:
        cls = to_pseudo_class(lab.label, lab.confidence)
        if mode == "oracle" and lab.label == 0 and lab.confidence < 5 and ground_truth[lab.instance_id]:
            cls = 10
        out.append(MulticlassLabel(lab.instance_id, cls))
    return out


def aggregate_group(labels_for_instance: Sequence[ConfidenceLabel], threshold: int = 2) -> tuple[int, int]:
    """Team verdict: 1 iff at least ``threshold`` members voted 1.

    The team confidence is the half-up rounded mean confidence of the
    members whose vote matches the verdict.
    """
    if not labels_for_instance:
        raise ValueError("no labels to aggregate")
    if threshold < 1:
        raise ValueError("threshold must be a positive integer")
    ids = {l.instance_id for l in labels_for_instance}
    if len(ids) != 1:
        raise ValueError(f"labels refer to several instances: {sorted(ids)}")
    votes_for = sum(l.label for l in labels_for_instance)
    verdict = int(votes_for >= threshold)
    agreeing = [l.confidence for l in labels_for_instance if l.label == verdict]
    if not agreeing:
        # fewer members than the threshold, all voting 1: nobody backs the 0 verdict
        return verdict, 0
    return verdict, round_half_up(sum(agreeing), len(agreeing))
