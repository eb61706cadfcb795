"""Post-hoc analysis of round logs: trajectories, trend tests, agreement, correlations.

Everything here works from :class:`TeamTrace`, which can be built either
from an in-memory result or from the per-team CSVs, so ``run`` and
``metrics`` produce the same JSON.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import csvio
from .config import ExperimentConfig
from .data_model import ConfidenceLabel
from .label_transform import to_pseudo_class
from .metrics_stats import TrendTest, jonckheere_terpstra, krippendorff_alpha, pearson_trend

METRICS_FORMAT = "confal-metrics"
METRICS_VERSION = 1


@dataclass
class TeamTrace:
    """One team in one replicate, reduced to what the analyses need.

    ``metrics[0]`` is the initializer model; ``metrics[r]`` follows round ``r``.
    """

    model_id: str
    kind: str
    metrics: list[dict[str, float]]
    hrq_true_rate: list[float | None]
    raw: list[list[ConfidenceLabel]]
    slots: list[dict[int, str]]


def traces_from_result(rep) -> dict[str, TeamTrace]:
    out = {}
    for mid, team in rep.teams.items():
        out[mid] = TeamTrace(
            model_id=mid,
            kind=team.scheme.kind,
            metrics=[dict(team.initial_metrics)] + [dict(l.model_metrics) for l in team.rounds],
            hrq_true_rate=[_clean(l.hrq_true_rate) for l in team.rounds],
            raw=[list(l.labels) for l in team.rounds],
            slots=[l.batch.slot_of() for l in team.rounds],
        )
    return out


def trace_from_dir(team_dir: str | Path, model_id: str, kind: str) -> TeamTrace:
    team_dir = Path(team_dir)
    rounds = sorted(csvio.read_rounds(team_dir / "rounds.csv"), key=lambda r: r["round"])
    if not rounds or rounds[0]["round"] != 0:
        raise ValueError(f"{team_dir}/rounds.csv: missing the round-0 (initializer) row")
    batches = {b.round: b for b, _ in csvio.read_batches(team_dir / "batches.csv")}
    raw: dict[int, list[ConfidenceLabel]] = {}
    for row in csvio.read_labels(team_dir / "labels.csv"):
        if row["kind"] == "raw":
            raw.setdefault(row["round"], []).append(row["label"])
    n = len(rounds) - 1
    metrics = [{k: v for k, v in r.items() if k not in ("round", "hrq_true_rate")} for r in rounds]
    missing = [r for r in range(1, n + 1) if r not in batches]
    if missing:
        raise ValueError(f"{team_dir}/batches.csv: no batch for rounds {missing}")
    return TeamTrace(model_id, kind, metrics,
                     [_clean(r.get("hrq_true_rate")) for r in rounds[1:]],
                     [raw.get(r, []) for r in range(1, n + 1)],
                     [batches[r].slot_of() for r in range(1, n + 1)])


def traces_from_dir(run_dir: str | Path) -> list[dict[str, TeamTrace]]:
    """Read every ``replicates/rNNN/<team>/`` directory under ``run_dir``."""
    import json

    base = Path(run_dir) / "replicates"
    reps = sorted(p for p in base.iterdir() if p.is_dir()) if base.is_dir() else []
    if not reps:
        raise ValueError(f"{run_dir}: no replicate directories found")
    out = []
    for rep in reps:
        teams = {}
        for team_dir in sorted(p for p in rep.iterdir() if p.is_dir()):
            info = json.loads((team_dir / "team.json").read_text())
            teams[team_dir.name] = trace_from_dir(team_dir, team_dir.name, info["kind"])
        out.append(teams)
    return out


def _clean(v):
    if v is None:
        return None
    v = float(v)
    return None if math.isnan(v) else v


def _mean(values) -> float | None:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def _trend(test: TrendTest) -> dict:
    return {"statistic": test.statistic, "z": test.z, "pvalue": test.pvalue, "alternative": test.alternative,
            "method": test.method}


def _safe_trend(groups: Sequence[Sequence[float]], alternative: str) -> dict:
    groups = [[v for v in g if v is not None] for g in groups]
    groups = [g for g in groups if g]
    if len(groups) < 2:
        return {"error": "fewer than two rounds with values"}
    return _trend(jonckheere_terpstra(groups, alternative))


def round_alpha(raw: Sequence[ConfidenceLabel]) -> dict[str, float | None] | None:
    """Interval alpha on pseudo-classes and nominal alpha on verdicts, or None for single raters."""
    annotators = sorted({l.annotator_id for l in raw})
    if len(annotators) < 2:
        return None
    units = sorted({l.instance_id for l in raw})
    col = {u: k for k, u in enumerate(units)}
    row = {a: k for k, a in enumerate(annotators)}
    classes = [[None] * len(units) for _ in annotators]
    verdicts = [[None] * len(units) for _ in annotators]
    for l in raw:
        classes[row[l.annotator_id]][col[l.instance_id]] = to_pseudo_class(l.label, l.confidence)
        verdicts[row[l.annotator_id]][col[l.instance_id]] = l.label
    out = {}
    for name, matrix, metric in (("interval", classes, "interval"), ("nominal", verdicts, "nominal")):
        try:
            out[name] = krippendorff_alpha(matrix, metric)
        except ValueError:
            out[name] = None
    return out


def _confidence_by_slot(trace: TeamTrace) -> dict[str, list[int]]:
    """Raw confidences of True verdicts, split by query slot."""
    out: dict[str, list[int]] = {"HRQ": [], "UQ": [], "RQ": []}
    for labels, slots in zip(trace.raw, trace.slots):
        for l in labels:
            if l.label == 1:
                out[slots[l.instance_id]].append(l.confidence)
    return out


def analyze_team(trace: TeamTrace) -> dict:
    n = len(trace.metrics) - 1
    au = {m: [trace.metrics[r][f"{m}.auprc"] for r in range(n + 1)] for m in ("binary", "multiclass")}
    mean_conf = [_mean([l.confidence for l in labels]) for labels in trace.raw]
    delta = [au["multiclass"][r] - au["multiclass"][r - 1] for r in range(1, n + 1)]
    try:
        if any(v is None for v in mean_conf):
            raise ValueError("a round without labels")
        r, p = pearson_trend(mean_conf, delta)
        pearson = {"r": r, "pvalue": p}
    except ValueError as exc:
        pearson = {"error": str(exc)}
    alphas = [round_alpha(labels) for labels in trace.raw]
    by_slot = _confidence_by_slot(trace)
    out = {
        "kind": trace.kind,
        "rounds": [{"round": r, **trace.metrics[r]} for r in range(n + 1)],
        "auprc": au,
        "hrq_true_rate": trace.hrq_true_rate,
        "mean_confidence": mean_conf,
        "delta_auprc": delta,
        "pearson_confidence_vs_delta_auprc": pearson,
        "final_multiclass_ge_binary": au["multiclass"][n] >= au["binary"][n],
        "final_multiclass_gt_round1": au["multiclass"][n] > au["multiclass"][1] if n >= 1 else None,
        "true_confidence_by_slot": {s: {"n": len(v), "mean": _mean(v)} for s, v in by_slot.items()},
    }
    if any(a is not None for a in alphas):
        out["alpha"] = {m: [None if a is None else a[m] for a in alphas] for m in ("interval", "nominal")}
    return out


def _slot_summary(values: list[int]) -> dict:
    if not values:
        return {"n": 0, "mean": None, "sd": None}
    a = np.asarray(values, dtype=np.float64)
    return {"n": int(a.size), "mean": float(a.mean()), "sd": float(a.std(ddof=1)) if a.size > 1 else None}


def aggregate_team(traces: Sequence[TeamTrace], per_rep: Sequence[dict]) -> dict:
    n = len(traces[0].metrics) - 1
    reps = len(traces)
    hrq_by_round = [[t.hrq_true_rate[r] for t in traces] for r in range(n)]
    hrq_means = [_mean(v) for v in hrq_by_round]
    out = {
        "replicates": reps,
        "mean_auprc": {m: [_mean([d["auprc"][m][r] for d in per_rep]) for r in range(n + 1)]
                       for m in ("binary", "multiclass")},
        "hrq_true_rate_mean": hrq_means,
        "hrq_trend": _safe_trend([[v] for v in hrq_means], "increasing"),
        "hrq_trend_pooled": _safe_trend(hrq_by_round, "increasing"),
        "final_multiclass_ge_binary": sum(bool(d["final_multiclass_ge_binary"]) for d in per_rep),
        "final_multiclass_gt_round1": sum(bool(d["final_multiclass_gt_round1"]) for d in per_rep),
    }
    rs = [d["pearson_confidence_vs_delta_auprc"].get("r") for d in per_rep]
    defined = [r for r in rs if r is not None]
    out["pearson_confidence_vs_delta_auprc"] = {
        "defined": len(defined),
        "nonnegative": sum(r >= 0 for r in defined),
        "mean_r": _mean(defined),
    }
    slots: dict[str, list[int]] = {"HRQ": [], "UQ": [], "RQ": []}
    for t in traces:
        for s, v in _confidence_by_slot(t).items():
            slots[s].extend(v)
    out["true_confidence_by_slot"] = {s: _slot_summary(v) for s, v in slots.items()}
    if any("alpha" in d for d in per_rep):
        alpha = {}
        for m in ("interval", "nominal"):
            by_round = [[d["alpha"][m][r] for d in per_rep if "alpha" in d] for r in range(n)]
            means = [_mean(v) for v in by_round]
            alpha[m] = {"mean": means,
                        "trend": _safe_trend([[v] for v in means], "decreasing"),
                        "trend_pooled": _safe_trend(by_round, "decreasing")}
        out["alpha"] = alpha
    return out


def analyze(config: ExperimentConfig | None, replicates: Sequence[dict[str, TeamTrace]]) -> dict:
    """The metrics document: per-replicate team analyses and cross-replicate aggregates."""
    if not replicates:
        raise ValueError("no replicates to analyze")
    team_ids = sorted(replicates[0])
    for k, rep in enumerate(replicates):
        if sorted(rep) != team_ids:
            raise ValueError(f"replicate {k} has teams {list(rep)}, expected {team_ids}")
    per_rep = [{mid: analyze_team(rep[mid]) for mid in team_ids} for rep in replicates]
    aggregate = {mid: aggregate_team([rep[mid] for rep in replicates], [p[mid] for p in per_rep])
                 for mid in team_ids}
    doc = {
        "format": METRICS_FORMAT,
        "version": METRICS_VERSION,
        "teams": team_ids,
        "replicates": per_rep,
        "aggregate": aggregate,
    }
    if config is not None:
        doc["config_digest"] = config.digest()
    return doc
