"""Record -> numeric feature encoding, including edit-distance similarity."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .data_model import BlindRecord, EmailRecord, FeatureVector

ROLES = ("analyst", "advisor", "manager", "executive", "contractor")
STATUSES = ("active", "notice", "leave")
OTHER = "__other__"
SCHEMA_VERSION = 1

_SEPARATORS = str.maketrans("", "", "._-")


def levenshtein(a: str, b: str) -> int:
    """Minimum number of single-character edits turning ``a`` into ``b``."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def normalize_name(text: str) -> str:
    """Lowercase, drop any ``@domain`` part, remove ``.``, ``_`` and ``-``."""
    return text.lower().split("@", 1)[0].translate(_SEPARATORS)


@lru_cache(maxsize=65536)
def _normalized_similarity(a: str, b: str) -> float:
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - levenshtein(a, b) / longest


def name_address_similarity(sender_name: str, recipient_address: str) -> float:
    """Similarity in [0, 1] between a display name and an address local part."""
    return _normalized_similarity(normalize_name(sender_name), normalize_name(recipient_address))


def max_name_address_similarity(sender_name: str, recipient_addresses: Iterable[str]) -> float:
    return max((name_address_similarity(sender_name, a) for a in recipient_addresses), default=0.0)


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered feature names plus the categorical vocabularies behind them."""

    roles: tuple[str, ...] = ROLES
    statuses: tuple[str, ...] = STATUSES
    version: int = SCHEMA_VERSION
    feature_names: tuple[str, ...] = field(init=False)

    def __post_init__(self):
        names = [
            "subject_sensitive",
            "attachment_sensitive",
            "log1p_recipient_count",
            "log1p_attachment_count",
            "log1p_attachment_size",
            "log1p_sender_tenure_days",
            "hour_sin",
            "hour_cos",
            "day_sin",
            "day_cos",
            "name_address_similarity",
        ]
        names += [f"role={r}" for r in self.roles + (OTHER,)]
        names += [f"status={s}" for s in self.statuses + (OTHER,)]
        object.__setattr__(self, "feature_names", tuple(names))

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "feature_names": list(self.feature_names),
            "vocabularies": {"sender_role": list(self.roles), "sender_status": list(self.statuses)},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureSchema":
        vocab = data["vocabularies"]
        schema = cls(tuple(vocab["sender_role"]), tuple(vocab["sender_status"]), int(data["version"]))
        if list(schema.feature_names) != list(data["feature_names"]):
            raise ValueError("feature_names in schema file do not match its vocabularies")
        return schema

    @property
    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    def __len__(self):
        return len(self.feature_names)


@dataclass(frozen=True)
class FeatureMatrix:
    """Row-aligned ids and feature values for a set of records."""

    ids: np.ndarray
    X: np.ndarray
    schema: FeatureSchema

    def __post_init__(self):
        if self.X.ndim != 2 or self.X.shape != (len(self.ids), len(self.schema)):
            raise ValueError(f"feature matrix shape {self.X.shape} does not fit {len(self.ids)} ids")

    def __len__(self):
        return len(self.ids)

    def take(self, rows) -> "FeatureMatrix":
        rows = np.asarray(rows, dtype=np.intp)
        return FeatureMatrix(self.ids[rows], self.X[rows], self.schema)

    def rows(self) -> list[FeatureVector]:
        names = self.schema.feature_names
        return [FeatureVector(int(i), tuple(float(v) for v in x), names) for i, x in zip(self.ids, self.X)]

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector], schema: FeatureSchema) -> "FeatureMatrix":
        for v in vectors:
            if v.feature_names != schema.feature_names:
                raise ValueError(f"feature vector {v.id} does not match the schema")
        X = np.array([v.values for v in vectors], dtype=np.float64).reshape(len(vectors), len(schema))
        return cls(np.array([v.id for v in vectors], dtype=np.int64), X, schema)


def _encode(record: BlindRecord, schema: FeatureSchema) -> list[float]:
    hour = 2.0 * math.pi * record.hour_of_day / 24.0
    day = 2.0 * math.pi * record.day_of_week / 7.0
    values = [
        float(record.subject_sensitive),
        float(record.attachment_sensitive),
        math.log1p(record.recipient_count),
        math.log1p(record.attachment_count),
        math.log1p(record.attachment_size),
        math.log1p(record.sender_tenure_days),
        math.sin(hour),
        math.cos(hour),
        math.sin(day),
        math.cos(day),
        float(record.name_address_similarity),
    ]
    for vocab, value in ((schema.roles, record.sender_role), (schema.statuses, record.sender_status)):
        block = [0.0] * (len(vocab) + 1)
        block[vocab.index(value) if value in vocab else len(vocab)] = 1.0
        values.extend(block)
    return values


def _blinded(record: BlindRecord | EmailRecord) -> BlindRecord:
    return record.blind() if isinstance(record, EmailRecord) else record


def featurize(record: BlindRecord | EmailRecord, schema: FeatureSchema) -> FeatureVector:
    view = _blinded(record)
    return FeatureVector(view.id, tuple(_encode(view, schema)), schema.feature_names)


def featurize_many(records: Sequence[BlindRecord | EmailRecord], schema: FeatureSchema) -> FeatureMatrix:
    views = [_blinded(r) for r in records]
    X = np.array([_encode(v, schema) for v in views], dtype=np.float64).reshape(len(views), len(schema))
    return FeatureMatrix(np.array([v.id for v in views], dtype=np.int64), X, schema)
