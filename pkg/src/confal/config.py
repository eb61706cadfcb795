"""Experiment configuration: one versioned YAML (or JSON) document.

Top-level keys (all optional, defaults in brackets)::

    version: 1
    seed: 0
    replicates: [1]
    output_dir: [runs/default]
    n_rounds: [8]                 # must match generator.n_rounds if both are given
    init_size: [200]
    eval_size: [4000]             # held-out, ground-truth-labelled evaluation split
    batch_sizes: {hrq: 14, uq: 3, rq: 3}
    reclassify_mode: [midpoint]   # or oracle (reads ground truth during training)
    uncertainty_measure: [margin] # least_confident | margin | entropy
    query_model: [multiclass]     # which model ranks the pool: binary | multiclass
    f_betas: [[0.5, 1.0, 2.0]]
    save_models: [final]          # none | final | all
    jobs: [1]                     # replicate-level worker processes
    generator: {...}              # GeneratorConfig fields
    learner_binary: {...}         # LearnerConfig fields (class_count forced to 2)
    learner_multiclass: {...}     # LearnerConfig fields (class_count forced to 11)
    prelabeler: {...}             # AnnotatorProfile used for initializer confidences
    annotators: [{annotator_id: ..., skill: ...}, ...]
    roster: path/to/roster.csv    # alternative to `annotators`
    teams: [{kind: individual, model_id: B, annotator_ids: [i1]}, ...]
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .annotator_sim import AnnotatorProfile, TeamScheme
from .label_transform import RECLASSIFY_MODES
from .learner import LearnerConfig
from .query_strategies import MEASURES, BatchSizes
from .synth_corpus import GeneratorConfig

CONFIG_VERSION = 1


class ConfigError(ValueError):
    pass


def default_annotators() -> tuple[AnnotatorProfile, ...]:
    specs = [
        ("ind1", 0.92, 0.5), ("ind2", 0.80, -0.5), ("ind3", 0.70, 1.0),
        ("swp1", 0.85, 0.0), ("swp2", 0.75, 0.5),
        ("grp1", 0.90, 0.0), ("grp2", 0.82, 1.0), ("grp3", 0.75, -1.0), ("grp4", 0.68, 0.5), ("grp5", 0.60, 0.0),
    ]
    return tuple(
        AnnotatorProfile(a, skill=s, confidence_bias=b, confidence_noise_sd=1.0, positive_label_caution=1.5,
                         seed=101 + k)
        for k, (a, s, b) in enumerate(specs)
    )


def default_teams() -> tuple[TeamScheme, ...]:
    return (
        TeamScheme("group", ("grp1", "grp2", "grp3", "grp4", "grp5"), "A", group_threshold=2),
        TeamScheme("individual", ("ind1",), "B"),
        TeamScheme("individual", ("ind2",), "C"),
        TeamScheme("individual", ("ind3",), "D"),
        TeamScheme("swap", ("swp1", "swp2"), "E", swap_round=5),
        TeamScheme("swap", ("swp2", "swp1"), "F", swap_round=5),
    )


def default_prelabeler() -> AnnotatorProfile:
    return AnnotatorProfile("prelabeler", skill=0.95, confidence_noise_sd=1.0, positive_label_caution=2.0, seed=7)


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    learner_binary: LearnerConfig = field(default_factory=lambda: LearnerConfig(class_count=2))
    learner_multiclass: LearnerConfig = field(default_factory=lambda: LearnerConfig(class_count=11))
    batch_sizes: BatchSizes = field(default_factory=BatchSizes)
    n_rounds: int = 8
    init_size: int = 200
    eval_size: int = 4000
    teams: tuple[TeamScheme, ...] = field(default_factory=default_teams)
    annotators: tuple[AnnotatorProfile, ...] = field(default_factory=default_annotators)
    prelabeler: AnnotatorProfile = field(default_factory=default_prelabeler)
    reclassify_mode: str = "midpoint"
    uncertainty_measure: str = "margin"
    query_model: str = "multiclass"
    replicates: int = 1
    output_dir: str = "runs/default"
    f_betas: tuple[float, ...] = (0.5, 1.0, 2.0)
    save_models: str = "final"
    jobs: int = 1

    def __post_init__(self):
        problems = self.problems()
        if problems:
            raise ConfigError("; ".join(problems))

    def problems(self) -> list[str]:
        out = []
        if self.learner_binary.class_count != 2:
            out.append("learner_binary.class_count must be 2")
        if self.learner_multiclass.class_count != 11:
            out.append("learner_multiclass.class_count must be 11")
        if self.n_rounds < 1 or self.init_size < 1 or self.eval_size < 1 or self.replicates < 1:
            out.append("n_rounds, init_size, eval_size and replicates must be positive")
        if self.generator.n_rounds != self.n_rounds:
            out.append(f"generator.n_rounds={self.generator.n_rounds} differs from n_rounds={self.n_rounds}")
        if self.reclassify_mode not in RECLASSIFY_MODES:
            out.append(f"reclassify_mode must be one of {RECLASSIFY_MODES}")
        if self.uncertainty_measure not in MEASURES:
            out.append(f"uncertainty_measure must be one of {MEASURES}")
        if self.query_model not in ("binary", "multiclass"):
            out.append("query_model must be 'binary' or 'multiclass'")
        if self.save_models not in ("none", "final", "all"):
            out.append("save_models must be none, final or all")
        if self.jobs < 1:
            out.append("jobs must be positive")
        if not self.teams:
            out.append("at least one team is required")
        if any(b <= 0 for b in self.f_betas):
            out.append("f_betas must be positive")
        ids = [a.annotator_id for a in self.annotators]
        if len(set(ids)) != len(ids):
            out.append("duplicate annotator ids")
        models = [t.model_id for t in self.teams]
        if len(set(models)) != len(models):
            out.append("duplicate team model_ids")
        for t in self.teams:
            missing = [a for a in t.annotator_ids if a not in ids]
            if missing:
                out.append(f"team {t.model_id} references unknown annotators {missing}")
            if t.kind == "swap" and t.swap_round > self.n_rounds:
                out.append(f"team {t.model_id}: swap_round beyond the last round")
        pool_size = (self.generator.n_records - self.eval_size - self.init_size) // self.n_rounds
        if pool_size < self.batch_sizes.total:
            out.append(f"per-round pool of ~{pool_size} records is smaller than the batch ({self.batch_sizes.total})")
        return out

    @property
    def profiles(self) -> dict[str, AnnotatorProfile]:
        return {a.annotator_id: a for a in self.annotators}

    def to_dict(self) -> dict:
        return {
            "version": CONFIG_VERSION,
            "seed": self.seed,
            "replicates": self.replicates,
            "output_dir": self.output_dir,
            "n_rounds": self.n_rounds,
            "init_size": self.init_size,
            "eval_size": self.eval_size,
            "batch_sizes": {"hrq": self.batch_sizes.hrq, "uq": self.batch_sizes.uq, "rq": self.batch_sizes.rq},
            "reclassify_mode": self.reclassify_mode,
            "uncertainty_measure": self.uncertainty_measure,
            "query_model": self.query_model,
            "f_betas": list(self.f_betas),
            "save_models": self.save_models,
            "jobs": self.jobs,
            "generator": self.generator.to_dict(),
            "learner_binary": self.learner_binary.to_dict(),
            "learner_multiclass": self.learner_multiclass.to_dict(),
            "prelabeler": self.prelabeler.to_dict(),
            "annotators": [a.to_dict() for a in self.annotators],
            "teams": [t.to_dict() for t in self.teams],
        }

    def digest(self) -> str:
        """Hash of every setting that affects results (output location and jobs excluded)."""
        d = self.to_dict()
        d.pop("output_dir")
        d.pop("jobs")
        d.pop("save_models")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict, base_dir: Path | None = None) -> "ExperimentConfig":
        data = dict(data or {})
        version = data.pop("version", CONFIG_VERSION)
        if version != CONFIG_VERSION:
            raise ConfigError(f"unsupported config version {version!r}")
        known = {"seed", "replicates", "output_dir", "n_rounds", "init_size", "eval_size", "batch_sizes",
                 "reclassify_mode", "uncertainty_measure", "query_model", "f_betas", "save_models", "jobs",
                 "generator", "learner_binary", "learner_multiclass", "prelabeler", "annotators", "roster",
                 "teams"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kw: dict = {k: data[k] for k in ("seed", "replicates", "output_dir", "n_rounds", "init_size",
                                          "eval_size", "reclassify_mode", "uncertainty_measure",
                                          "query_model", "save_models", "jobs") if k in data}
        try:
            n_rounds = data.get("n_rounds", 8)
            gen = dict(data.get("generator") or {})
            gen.setdefault("n_rounds", n_rounds)
            kw["generator"] = GeneratorConfig.from_dict(gen)
            kw["learner_binary"] = LearnerConfig.from_dict({**(data.get("learner_binary") or {}), "class_count": 2})
            kw["learner_multiclass"] = LearnerConfig.from_dict(
                {**(data.get("learner_multiclass") or {}), "class_count": 11})
            if "batch_sizes" in data:
                kw["batch_sizes"] = BatchSizes(**data["batch_sizes"])
            if "f_betas" in data:
                kw["f_betas"] = tuple(float(b) for b in data["f_betas"])
            if "prelabeler" in data:
                kw["prelabeler"] = AnnotatorProfile.from_dict(data["prelabeler"])
            if "annotators" in data and "roster" in data:
                raise ConfigError("give either `annotators` or `roster`, not both")
            if "annotators" in data:
                kw["annotators"] = tuple(AnnotatorProfile.from_dict(a) for a in data["annotators"])
            if "roster" in data:
                from .csvio import read_roster

                path = Path(data["roster"])
                if base_dir is not None and not path.is_absolute():
                    path = base_dir / path
                kw["annotators"] = tuple(read_roster(path))
            if "teams" in data:
                kw["teams"] = tuple(TeamScheme.from_dict(t) for t in data["teams"])
            return cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError, KeyError, OSError) as exc:
            raise ConfigError(str(exc)) from exc

    def to_yaml(self) -> str:
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def with_output_dir(self, output_dir: str | Path) -> "ExperimentConfig":
        return replace(self, output_dir=str(output_dir))


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text())
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if data is not None and not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return ExperimentConfig.from_dict(data or {}, base_dir=path.parent)
