"""Shared domain types for the active-learning engine.

Ground truth lives on :class:`EmailRecord` only. Everything an annotator or
the learner is allowed to see goes through :meth:`EmailRecord.blind`, which
returns a :class:`BlindRecord` with no ground-truth attribute at all.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import Iterable, Mapping, Sequence

PROB_SUM_TOL = 1e-9


@dataclass(frozen=True)
class _RecordFields:
    id: int
    timestamp: int
    sender_name: str
    sender_address: str
    recipient_addresses: tuple[str, ...]
    recipient_count: int
    subject_sensitive: bool
    attachment_sensitive: bool
    attachment_count: int
    attachment_size: int
    hour_of_day: int
    day_of_week: int
    sender_role: str
    sender_tenure_days: int
    sender_status: str
    name_address_similarity: float


@dataclass(frozen=True)
class BlindRecord(_RecordFields):
    """Annotator/learner-facing view of one redacted outbound email."""


@dataclass(frozen=True)
class EmailRecord(_RecordFields):
    """One redacted email plus its hidden anomaly flag (evaluation copy)."""

    ground_truth: bool = False

    def blind(self) -> BlindRecord:
        return BlindRecord(*[getattr(self, name) for name in RECORD_FIELDS])


RECORD_FIELDS = tuple(f.name for f in fields(_RecordFields))


@dataclass(frozen=True)
class FeatureVector:
    id: int
    values: tuple[float, ...]
    feature_names: tuple[str, ...]


@dataclass(frozen=True)
class ClassDistribution:
    probabilities: tuple[float, ...]

    def __post_init__(self):
        p = tuple(float(v) for v in self.probabilities)
        if not p:
            raise ValueError("empty class distribution")
        if any(not (0.0 <= v <= 1.0) or math.isnan(v) for v in p):
            raise ValueError(f"probabilities must lie in [0, 1]: {p}")
        if abs(math.fsum(p) - 1.0) > PROB_SUM_TOL:
            raise ValueError(f"probabilities must sum to 1 (got {math.fsum(p)!r})")
        object.__setattr__(self, "probabilities", p)

    def __len__(self):
        return len(self.probabilities)


@dataclass(frozen=True)
class ConfidenceLabel:
    instance_id: int
    annotator_id: str
    label: int
    confidence: int
    round: int

    def __post_init__(self):
        if self.label not in (0, 1):
            raise ValueError(f"label must be 0 or 1, got {self.label!r}")
        if not isinstance(self.confidence, int) or not 0 <= self.confidence <= 10:
            raise ValueError(f"confidence must be an integer in 0..10, got {self.confidence!r}")
        if self.round < 0:
            raise ValueError(f"round must be non-negative, got {self.round}")


@dataclass(frozen=True)
class MulticlassLabel:
    instance_id: int
    pseudo_class: int

    def __post_init__(self):
        if not 0 <= self.pseudo_class <= 10:
            raise ValueError(f"pseudo_class must be in 0..10, got {self.pseudo_class}")


SLOTS = ("HRQ", "UQ", "RQ")


@dataclass(frozen=True)
class QueryBatch:
    round: int
    hrq_ids: tuple[int, ...]
    uq_ids: tuple[int, ...]
    rq_ids: tuple[int, ...]

    def __post_init__(self):
        seen = set(self.hrq_ids)
        for ids in (self.uq_ids, self.rq_ids):
            if seen.intersection(ids):
                raise ValueError("query slots must be pairwise disjoint")
            seen.update(ids)
        if len(seen) != len(self):
            raise ValueError("duplicate instance id inside a query slot")

    def __len__(self):
        return len(self.hrq_ids) + len(self.uq_ids) + len(self.rq_ids)

    @property
    def ids(self) -> tuple[int, ...]:
        return self.hrq_ids + self.uq_ids + self.rq_ids

    def slot_of(self) -> dict[int, str]:
        out = {}
        for slot, ids in zip(SLOTS, (self.hrq_ids, self.uq_ids, self.rq_ids)):
            for i in ids:
                out[i] = slot
        return out


@dataclass
class RoundLog:
    """Everything recorded for one team in one round.

    ``labels`` holds every raw per-annotator label; ``resolved`` holds one
    label per queried instance after team aggregation (identical to
    ``labels`` for a single annotator). ``transformed`` is derived from
    ``resolved``.
    """

    round: int
    batch: QueryBatch
    labels: list[ConfidenceLabel]
    resolved: list[ConfidenceLabel]
    transformed: list[MulticlassLabel]
    model_metrics: dict[str, float]
    hrq_true_rate: float
    batch_scores: dict[int, tuple[float, float]] = field(default_factory=dict)


@dataclass
class ValidationReport:
    count: int
    anomaly_prevalence: float
    violations: list[tuple[int, str]]

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_corpus(records: Sequence[EmailRecord]) -> ValidationReport:
    """Check every record invariant; never raises."""
    violations: list[tuple[int, str]] = []
    seen: set[int] = set()
    for r in records:
        if r.id in seen:
            violations.append((r.id, "duplicate id"))
        seen.add(r.id)
        if r.recipient_count != len(r.recipient_addresses):
            violations.append(
                (r.id, f"recipient_count={r.recipient_count} but {len(r.recipient_addresses)} addresses")
            )
        if not 0.0 <= r.name_address_similarity <= 1.0:
            violations.append((r.id, f"name_address_similarity={r.name_address_similarity} outside [0,1]"))
        for name in ("recipient_count", "attachment_count", "attachment_size", "sender_tenure_days"):
            if getattr(r, name) < 0:
                violations.append((r.id, f"{name} is negative"))
        if not 0 <= r.hour_of_day <= 23:
            violations.append((r.id, f"hour_of_day={r.hour_of_day} outside 0..23"))
        if not 0 <= r.day_of_week <= 6:
            violations.append((r.id, f"day_of_week={r.day_of_week} outside 0..6"))
    n = len(records)
    positives = sum(1 for r in records if getattr(r, "ground_truth", False))
    return ValidationReport(count=n, anomaly_prevalence=positives / n if n else 0.0, violations=violations)


def check_references(ids: Iterable[int], corpus_ids: Mapping[int, object] | set[int]) -> list[int]:
    """Return the identifiers that do not resolve to a corpus record."""
    return [i for i in ids if i not in corpus_ids]
