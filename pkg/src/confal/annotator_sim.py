"""Simulated expert annotators and the individual / swap / group team schemes."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from typing import Mapping, Sequence

import numpy as np

from .data_model import ConfidenceLabel, EmailRecord, QueryBatch
from .label_transform import aggregate_group

TEAM_KINDS = ("individual", "swap", "group")


@dataclass(frozen=True)
class AnnotatorProfile:
    annotator_id: str
    skill: float = 0.9
    confidence_bias: float = 0.0
    confidence_noise_sd: float = 0.0
    positive_label_caution: float = 0.0
    motivation_decay: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.skill <= 1.0:
            raise ValueError(f"{self.annotator_id}: skill must lie in [0, 1]")
        if self.confidence_noise_sd < 0 or self.positive_label_caution < 0:
            raise ValueError(f"{self.annotator_id}: noise sd and caution must be non-negative")
        if not 0.0 <= self.motivation_decay <= 1.0:
            raise ValueError(f"{self.annotator_id}: motivation_decay must lie in [0, 1]")
        if self.seed < 0:
            raise ValueError(f"{self.annotator_id}: seed must be non-negative")

    def effective_skill(self, round_no: int) -> float:
        return self.skill * (1.0 - self.motivation_decay) ** max(round_no - 1, 0)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "AnnotatorProfile":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown annotator settings: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class TeamScheme:
    """Which annotators feed which model.

    ``swap`` teams use ``annotator_ids[0]`` before ``swap_round`` and
    ``annotator_ids[1]`` from ``swap_round`` on; the model (and its
    cumulative training set) stays with the team.
    """

    kind: str
    annotator_ids: tuple[str, ...]
    model_id: str
    swap_round: int | None = None
    group_threshold: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "annotator_ids", tuple(self.annotator_ids))
        if self.kind not in TEAM_KINDS:
            raise ValueError(f"unknown team kind {self.kind!r}")
        if not self.annotator_ids:
            raise ValueError(f"team {self.model_id} has no annotators")
        if self.kind == "individual" and len(self.annotator_ids) != 1:
            raise ValueError(f"individual team {self.model_id} needs exactly one annotator")
        if self.kind == "swap":
            if self.swap_round is None or self.swap_round < 1:
                raise ValueError(f"swap team {self.model_id} needs a positive swap_round")
            if len(self.annotator_ids) != 2:
                raise ValueError(f"swap team {self.model_id} needs exactly two annotators")
        if self.kind == "group":
            if self.group_threshold is None:
                object.__setattr__(self, "group_threshold", 2)
            if not 1 <= self.group_threshold <= len(self.annotator_ids):
                raise ValueError(f"group team {self.model_id}: threshold must lie in 1..team size")

    def active_annotators(self, round_no: int) -> tuple[str, ...]:
        if self.kind == "group":
            return self.annotator_ids
        if self.kind == "swap" and round_no >= self.swap_round:
            return (self.annotator_ids[1],)
        return (self.annotator_ids[0],)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["annotator_ids"] = list(self.annotator_ids)
        return {k: v for k, v in d.items() if v is not None}

    @classmethod
    def from_dict(cls, data: dict) -> "TeamScheme":
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown team settings: {sorted(unknown)}")
        return cls(**{**data, "annotator_ids": tuple(data.get("annotator_ids", ()))})


def _reported_confidence(profile: AnnotatorProfile, p_correct: float, label: int,
                         rng: np.random.Generator) -> int:
    raw = min(max(10.0 * (2.0 * p_correct - 1.0), 0.0), 10.0)
    noisy = raw + profile.confidence_bias - (profile.positive_label_caution if label == 1 else 0.0)
    noisy += rng.normal(0.0, profile.confidence_noise_sd)
    noisy = min(max(noisy, 0.0), 10.0)
    return int(math.floor(noisy + 0.5))


def _stream(profile: AnnotatorProfile, instance_id: int, round_no: int) -> np.random.Generator:
    return np.random.default_rng([profile.seed, int(instance_id), int(round_no)])


def p_correct(profile: AnnotatorProfile, difficulty: float, round_no: int) -> float:
    return 1.0 - difficulty * (1.0 - profile.effective_skill(round_no))


def simulate_label(profile: AnnotatorProfile, record: EmailRecord, difficulty, round_no: int) -> ConfidenceLabel:
    """One simulated verdict; deterministic in (profile, instance id, round)."""
    d = getattr(difficulty, "difficulty", difficulty)
    if getattr(difficulty, "instance_id", record.id) != record.id:
        raise ValueError(f"difficulty score for {difficulty.instance_id} given with record {record.id}")
    rng = _stream(profile, record.id, round_no)
    pc = p_correct(profile, float(d), round_no)
    truth = int(record.ground_truth)
    label = truth if rng.random() < pc else 1 - truth
    return ConfidenceLabel(record.id, profile.annotator_id, label, _reported_confidence(profile, pc, label, rng),
                           round_no)


def prelabel(profile: AnnotatorProfile, record: EmailRecord, difficulty: float) -> ConfidenceLabel:
    """Initializer label: the verdict is the ground truth, the confidence is simulated."""
    rng = _stream(profile, record.id, 0)
    rng.random()
    pc = p_correct(profile, float(difficulty), 1)
    label = int(record.ground_truth)
    return ConfidenceLabel(record.id, profile.annotator_id, label, _reported_confidence(profile, pc, label, rng), 0)


def answer_batch(scheme: TeamScheme, profiles: Mapping[str, AnnotatorProfile], batch: QueryBatch,
                 records: Mapping[int, EmailRecord], difficulties: Mapping[int, float],
                 round_no: int) -> tuple[list[ConfidenceLabel], list[ConfidenceLabel]]:
    """Raw per-annotator labels and one resolved label per queried instance."""
    missing = [i for i in batch.ids if i not in records or i not in difficulties]
    if missing:
        raise KeyError(f"unresolvable instance ids in batch: {missing}")
    active = scheme.active_annotators(round_no)
    unknown = [a for a in active if a not in profiles]
    if unknown:
        raise KeyError(f"team {scheme.model_id} references unknown annotators {unknown}")
    raw = [simulate_label(profiles[a], records[i], difficulties[i], round_no)
           for i in batch.ids for a in active]
    return raw, resolve(scheme, raw, batch.ids, round_no)


def resolve(scheme: TeamScheme, raw: Sequence[ConfidenceLabel], ids: Sequence[int],
            round_no: int) -> list[ConfidenceLabel]:
    """Collapse raw labels to one per instance (group vote for group teams)."""
    if scheme.kind != "group":
        if len(raw) != len(ids):
            raise ValueError(f"expected one label per instance for team {scheme.model_id}")
        return list(raw)
    by_id: dict[int, list[ConfidenceLabel]] = {i: [] for i in ids}
    for lab in raw:
        by_id[lab.instance_id].append(lab)
    out = []
    for i in ids:
        label, conf = aggregate_group(by_id[i], scheme.group_threshold)
        out.append(ConfidenceLabel(i, f"{scheme.model_id}:group", label, conf, round_no))
    return out
