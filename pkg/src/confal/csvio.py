"""CSV readers/writers. Column orders are fixed; see the module constants.

Floats are written with ``repr`` so every value round-trips exactly.
List-valued fields (recipient addresses) are joined with ``;``.
"""
from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .annotator_sim import AnnotatorProfile
from .data_model import RECORD_FIELDS, ConfidenceLabel, EmailRecord, QueryBatch, BlindRecord
from .synth_corpus import DifficultyScore

RECORD_COLUMNS = RECORD_FIELDS + ("ground_truth",)
BLIND_RECORD_COLUMNS = RECORD_FIELDS
DIFFICULTY_COLUMNS = ("instance_id", "difficulty")
LABEL_COLUMNS = ("team", "round", "kind", "annotator_id", "instance_id", "slot", "label", "confidence",
                 "pseudo_class")
BATCH_COLUMNS = ("round", "slot", "instance_id", "anomaly_score", "uncertainty")
ROSTER_COLUMNS = ("annotator_id", "skill", "confidence_bias", "confidence_noise_sd", "positive_label_caution",
                  "motivation_decay", "seed")

_INT_FIELDS = {"id", "timestamp", "recipient_count", "attachment_count", "attachment_size", "hour_of_day",
               "day_of_week", "sender_tenure_days"}
_BOOL_FIELDS = {"subject_sensitive", "attachment_sensitive", "ground_truth"}


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    if isinstance(v, tuple):
        return ";".join(v)
    return "" if v is None else str(v)


def write_table(path: str | Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _read(path: str | Path, required: Sequence[str]) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in required if c not in (reader.fieldnames or ())]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        return list(reader)


def write_records(path, records: Sequence[EmailRecord | BlindRecord], blind: bool = False) -> None:
    cols = BLIND_RECORD_COLUMNS if blind else RECORD_COLUMNS
    write_table(path, cols, ([getattr(r, c) for c in cols] for r in records))


def _parse_record(row: dict[str, str]) -> dict:
    out = {}
    for name in RECORD_FIELDS:
        raw = row[name]
        if name in _INT_FIELDS:
            out[name] = int(raw)
        elif name in _BOOL_FIELDS:
            out[name] = raw == "1"
        elif name == "name_address_similarity":
            out[name] = float(raw)
        elif name == "recipient_addresses":
            out[name] = tuple(raw.split(";")) if raw else ()
        else:
            out[name] = raw
    return out


def read_records(path) -> list[EmailRecord]:
    return [EmailRecord(**_parse_record(row), ground_truth=row["ground_truth"] == "1")
            for row in _read(path, RECORD_COLUMNS)]


def read_blind_records(path) -> list[BlindRecord]:
    return [BlindRecord(**_parse_record(row)) for row in _read(path, BLIND_RECORD_COLUMNS)]


def write_difficulties(path, diffs: Sequence[DifficultyScore]) -> None:
    write_table(path, DIFFICULTY_COLUMNS, ((d.instance_id, d.difficulty) for d in diffs))


def read_difficulties(path) -> list[DifficultyScore]:
    return [DifficultyScore(int(r["instance_id"]), float(r["difficulty"])) for r in _read(path, DIFFICULTY_COLUMNS)]


def label_row(team: str, kind: str, lab: ConfidenceLabel, slot: str = "", pseudo_class: int | None = None):
    return (team, lab.round, kind, lab.annotator_id, lab.instance_id, slot, lab.label, lab.confidence, pseudo_class)


def write_labels(path, rows: Iterable[Sequence]) -> None:
    write_table(path, LABEL_COLUMNS, rows)


def read_labels(path) -> list[dict]:
    """Rows as dicts with typed values; ``kind`` is ``raw``, ``resolved`` or ``init``."""
    out = []
    for r in _read(path, ("round", "annotator_id", "instance_id", "label", "confidence")):
        out.append({
            "team": r.get("team", ""),
            "round": int(r["round"]),
            "kind": r.get("kind") or "raw",
            "slot": r.get("slot", ""),
            "pseudo_class": int(r["pseudo_class"]) if r.get("pseudo_class") else None,
            "label": ConfidenceLabel(int(r["instance_id"]), r["annotator_id"], int(r["label"]),
                                     int(r["confidence"]), int(r["round"])),
        })
    return out


def write_batches(path, batches: Sequence[tuple[QueryBatch, dict[int, tuple[float, float]]]]) -> None:
    rows = []
    for batch, scores in batches:
        for slot, ids in (("HRQ", batch.hrq_ids), ("UQ", batch.uq_ids), ("RQ", batch.rq_ids)):
            for i in ids:
                a, u = scores.get(i, (None, None))
                rows.append((batch.round, slot, i, a, u))
    write_table(path, BATCH_COLUMNS, rows)


def read_batches(path) -> list[tuple[QueryBatch, dict[int, tuple[float, float]]]]:
    per_round: dict[int, dict[str, list[int]]] = {}
    scores: dict[int, dict[int, tuple[float, float]]] = {}
    for r in _read(path, BATCH_COLUMNS):
        rnd = int(r["round"])
        slots = per_round.setdefault(rnd, {"HRQ": [], "UQ": [], "RQ": []})
        iid = int(r["instance_id"])
        slots[r["slot"]].append(iid)
        if r["anomaly_score"]:
            scores.setdefault(rnd, {})[iid] = (float(r["anomaly_score"]), float(r["uncertainty"]))
    return [(QueryBatch(rnd, tuple(s["HRQ"]), tuple(s["UQ"]), tuple(s["RQ"])), scores.get(rnd, {}))
            for rnd, s in sorted(per_round.items())]


def write_rounds(path, rows: Sequence[dict]) -> None:
    """One row per round; ``round`` first, then the remaining keys sorted."""
    keys = sorted({k for r in rows for k in r} - {"round"})
    write_table(path, ("round",) + tuple(keys), ([r["round"]] + [r.get(k) for k in keys] for r in rows))


def read_rounds(path) -> list[dict]:
    out = []
    for r in _read(path, ("round",)):
        out.append({k: (int(v) if k == "round" else (float(v) if v != "" else None)) for k, v in r.items()})
    return out


def write_roster(path, profiles: Sequence[AnnotatorProfile]) -> None:
    write_table(path, ROSTER_COLUMNS, ([getattr(p, c) for c in ROSTER_COLUMNS] for p in profiles))


def read_roster(path) -> list[AnnotatorProfile]:
    out = []
    for r in _read(path, ("annotator_id",)):
        kw = {"annotator_id": r["annotator_id"]}
        for c in ROSTER_COLUMNS[1:]:
            if r.get(c, "") != "":
                kw[c] = int(r[c]) if c == "seed" else float(r[c])
        out.append(AnnotatorProfile(**kw))
    return out
