"""The active-learning experiment: corpus, initializer, rounds, evaluation, outputs.

The core loop (:func:`run_loop`) sees blinded features, evaluation truth
for scoring only, and a label source. Ground truth reaches training only
through the label source (the simulated annotators' own copy of the
world) or, in ``oracle`` reclassification mode, through ``oracle_truth``.
"""
from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Mapping, Protocol, Sequence

import numpy as np

from . import csvio
from .annotator_sim import AnnotatorProfile, TeamScheme, answer_batch, prelabel, resolve
from .config import ExperimentConfig
from .data_model import ConfidenceLabel, EmailRecord, MulticlassLabel, QueryBatch, RoundLog, check_references
from .featurize import FeatureMatrix, FeatureSchema, featurize_many
from .label_transform import reclassify_targets
from .learner import TrainedModel, anomaly_scores, train
from .metrics_stats import auprc, f_beta, hrq_true_rate, precision_recall_at
from .query_strategies import score_pool, select_batch
from .synth_corpus import DifficultyScore, generate_corpus, partition_rounds

LABEL_MODES = ("binary", "multiclass")


class ExperimentError(RuntimeError):
    """A failure inside the loop, annotated with replicate/team/round."""


def derive_seed(*keys) -> int:
    """A 64-bit seed that depends only on ``keys``."""
    digest = hashlib.sha256("\x1f".join(str(k) for k in keys).encode()).digest()
    return int.from_bytes(digest[:8], "little")


def beta_key(beta: float) -> str:
    return f"f_beta_{beta:g}"


def evaluate_round(model: TrainedModel, eval_features: FeatureMatrix, eval_truth: Sequence[int],
                   betas: Sequence[float] = (0.5, 1.0, 2.0)) -> dict[str, float]:
    """AUPRC, precision and recall at 0.5, and F-beta for each ``beta``."""
    truth = np.asarray(eval_truth, dtype=np.int64)
    if len(truth) == 0 or truth.sum() == 0:
        raise ValueError("evaluation split has no positives")
    scores = anomaly_scores(model, eval_features)
    p, r = precision_recall_at(scores, truth, 0.5)
    out = {"auprc": auprc(scores, truth), "precision": p, "recall": r}
    for b in betas:
        out[beta_key(b)] = f_beta(p, r, b)
    return out


def _prefixed(binary: dict, multiclass: dict) -> dict[str, float]:
    out = {f"binary.{k}": v for k, v in binary.items()}
    out.update({f"multiclass.{k}": v for k, v in multiclass.items()})
    return out


class LabelSource(Protocol):
    def initial_labels(self, ids: Sequence[int]) -> list[ConfidenceLabel]: ...

    def answer(self, scheme: TeamScheme, batch: QueryBatch,
               round_no: int) -> tuple[list[ConfidenceLabel], list[ConfidenceLabel]]: ...


class SimulatedLabelSource:
    """Simulated annotators working from their own copy of the labelled corpus."""

    def __init__(self, records: Sequence[EmailRecord], difficulties: Sequence[DifficultyScore],
                 profiles: Mapping[str, AnnotatorProfile], prelabeler: AnnotatorProfile):
        self._records = {r.id: r for r in records}
        self._difficulty = {d.instance_id: d.difficulty for d in difficulties}
        self._profiles = dict(profiles)
        self._prelabeler = prelabeler

    def initial_labels(self, ids):
        missing = check_references(ids, self._records)
        if missing:
            raise KeyError(f"initializer ids not in corpus: {missing}")
        return [prelabel(self._prelabeler, self._records[i], self._difficulty[i]) for i in ids]

    def answer(self, scheme, batch, round_no):
        return answer_batch(scheme, self._profiles, batch, self._records, self._difficulty, round_no)


class ReplayLabelSource:
    """Labels read back from a labels CSV instead of being simulated.

    Raw rows are matched on (team, round, instance id); rows of kind
    ``init`` supply the initializer. Resolution (group vote) is redone.
    """

    def __init__(self, rows: Sequence[dict]):
        self._init: dict[int, ConfidenceLabel] = {}
        self._raw: dict[tuple[str, int, int], list[ConfidenceLabel]] = {}
        for row in rows:
            lab = row["label"]
            if row["kind"] == "init":
                self._init.setdefault(lab.instance_id, lab)
            elif row["kind"] == "raw":
                self._raw.setdefault((row["team"], lab.round, lab.instance_id), []).append(lab)

    def initial_labels(self, ids):
        missing = [i for i in ids if i not in self._init]
        if missing:
            raise KeyError(f"no initializer label for instances {missing}")
        return [self._init[i] for i in ids]

    def answer(self, scheme, batch, round_no):
        raw = []
        for i in batch.ids:
            labs = self._raw.get((scheme.model_id, round_no, i))
            if not labs:
                raise KeyError(f"no label for team {scheme.model_id}, round {round_no}, instance {i}")
            raw.extend(labs)
        return raw, resolve(scheme, raw, batch.ids, round_no)


@dataclass
class LoopInputs:
    """What the loop may see: blinded features, id splits, evaluation truth."""

    features: FeatureMatrix
    init_ids: list[int]
    pool_ids: list[list[int]]
    eval_ids: list[int]
    eval_truth: np.ndarray
    oracle_truth: Mapping[int, bool] | None = None


@dataclass
class TeamResult:
    scheme: TeamScheme
    initial_labels: list[ConfidenceLabel]
    initial_targets: list[MulticlassLabel]
    initial_metrics: dict[str, float]
    rounds: list[RoundLog]
    training_ids: list[int]
    models: list[dict[str, TrainedModel]] = field(default_factory=list)

    @property
    def final_models(self) -> dict[str, TrainedModel]:
        return self.models[-1] if self.models else {}


@dataclass
class ReplicateResult:
    index: int
    seed: int
    eval_prevalence: float
    teams: dict[str, TeamResult]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    schema: FeatureSchema
    replicates: list[ReplicateResult]
    metrics: dict


def _train_pair(config: ExperimentConfig, features: FeatureMatrix, y_bin, y_mc) -> dict[str, TrainedModel]:
    return {"binary": train(features, y_bin, config.learner_binary),
            "multiclass": train(features, y_mc, config.learner_multiclass)}


def run_loop(config: ExperimentConfig, inputs: LoopInputs, source: LabelSource, seed: int,
             replicate: int = 0) -> dict[str, TeamResult]:
    """Initializer models, then ``n_rounds`` query/label/retrain rounds per team."""
    fm = inputs.features
    row_of = {int(i): k for k, i in enumerate(fm.ids)}
    rows = lambda ids: [row_of[i] for i in ids]  # noqa: E731
    eval_fm = fm.take(rows(inputs.eval_ids))
    truth = inputs.eval_truth
    betas = config.f_betas
    oracle = inputs.oracle_truth if config.reclassify_mode == "oracle" else None
    if len(inputs.pool_ids) != config.n_rounds:
        raise ExperimentError(f"{len(inputs.pool_ids)} pools for {config.n_rounds} rounds")

    def evaluate(models):
        return _prefixed(evaluate_round(models["binary"], eval_fm, truth, betas),
                         evaluate_round(models["multiclass"], eval_fm, truth, betas))

    try:
        init_labels = source.initial_labels(inputs.init_ids)
        init_targets = reclassify_targets(init_labels, config.reclassify_mode, oracle)
        init_models = _train_pair(config, fm.take(rows(inputs.init_ids)), [l.label for l in init_labels],
                                  [t.pseudo_class for t in init_targets])
        init_metrics = evaluate(init_models)
    except Exception as exc:
        raise ExperimentError(f"replicate {replicate}, initializer: {exc}") from exc

    results = {}
    for team in config.teams:
        ids = [l.instance_id for l in init_labels]
        y_bin = [l.label for l in init_labels]
        y_mc = [t.pseudo_class for t in init_targets]
        models = init_models
        kept = [init_models] if config.save_models == "all" else []
        logs = []
        for r in range(1, config.n_rounds + 1):
            try:
                pool = fm.take(rows(inputs.pool_ids[r - 1]))
                anomaly, unc = score_pool(models[config.query_model], pool, config.uncertainty_measure)
                batch = select_batch(pool.ids, anomaly, unc, config.uncertainty_measure, config.batch_sizes,
                                     derive_seed(seed, "rq", team.model_id, r), round_no=r)
                raw, resolved = source.answer(team, batch, r)
                transformed = reclassify_targets(resolved, config.reclassify_mode, oracle)
                ids += [l.instance_id for l in resolved]
                y_bin += [l.label for l in resolved]
                y_mc += [t.pseudo_class for t in transformed]
                models = _train_pair(config, fm.take(rows(ids)), y_bin, y_mc)
                pos = {int(i): k for k, i in enumerate(pool.ids)}
                scores = {i: (float(anomaly[pos[i]]), float(unc[pos[i]])) for i in batch.ids}
                log = RoundLog(r, batch, list(raw), list(resolved), transformed, evaluate(models), 0.0, scores)
                log.hrq_true_rate = hrq_true_rate(log) if batch.hrq_ids else float("nan")
                logs.append(log)
                if config.save_models == "all":
                    kept.append(models)
            except ExperimentError:
                raise
            except Exception as exc:
                raise ExperimentError(f"replicate {replicate}, team {team.model_id}, round {r}: {exc}") from exc
        if len(ids) != len(set(ids)) or len(ids) != len(init_labels) + sum(len(l.batch) for l in logs):
            raise ExperimentError(f"replicate {replicate}, team {team.model_id}: training set not conserved")
        if config.save_models == "final":
            kept = [models]
        results[team.model_id] = TeamResult(team, list(init_labels), list(init_targets), init_metrics, logs,
                                            ids, kept)
    return results


def split_corpus(records: Sequence[EmailRecord], config: ExperimentConfig, seed: int):
    """Uniform evaluation hold-out, then initializer and time-ordered pools from the rest."""
    if config.eval_size + config.init_size + config.n_rounds > len(records):
        raise ExperimentError("corpus too small for the evaluation split, initializer and pools")
    rng = np.random.default_rng(derive_seed(seed, "eval"))
    eval_rows = set(rng.choice(len(records), size=config.eval_size, replace=False).tolist())
    eval_set = [records[i] for i in sorted(eval_rows)]
    rest = [r for i, r in enumerate(records) if i not in eval_rows]
    init_set, pools = partition_rounds(rest, config.n_rounds, config.init_size, derive_seed(seed, "init"))
    return eval_set, init_set, pools


def prepare_inputs(records: Sequence[EmailRecord], config: ExperimentConfig, seed: int,
                   schema: FeatureSchema) -> LoopInputs:
    eval_set, init_set, pools = split_corpus(records, config, seed)
    oracle = {r.id: r.ground_truth for r in records} if config.reclassify_mode == "oracle" else None
    return LoopInputs(
        features=featurize_many(records, schema),
        init_ids=[r.id for r in init_set],
        pool_ids=[[r.id for r in p] for p in pools],
        eval_ids=[r.id for r in eval_set],
        eval_truth=np.array([int(r.ground_truth) for r in eval_set], dtype=np.int64),
        oracle_truth=oracle,
    )


def replicate_seed(config: ExperimentConfig, index: int) -> int:
    return derive_seed(config.seed, "replicate", index)


def replicate_corpus(config: ExperimentConfig, index: int):
    seed = replicate_seed(config, index)
    return generate_corpus(replace(config.generator, seed=derive_seed(seed, "corpus")))


def run_replicate(config: ExperimentConfig, index: int,
                  source_factory: Callable[[list, list], LabelSource] | None = None,
                  corpus: tuple[list[EmailRecord], list[DifficultyScore]] | None = None) -> ReplicateResult:
    """One full replicate. ``source_factory(records, difficulties)`` swaps out the simulator."""
    seed = replicate_seed(config, index)
    records, diffs = corpus if corpus is not None else replicate_corpus(config, index)
    inputs = prepare_inputs(records, config, seed, FeatureSchema())
    if source_factory is None:
        source = SimulatedLabelSource(records, diffs, config.profiles, config.prelabeler)
    else:
        source = source_factory(records, diffs)
    teams = run_loop(config, inputs, source, seed, index)
    return ReplicateResult(index, seed, float(inputs.eval_truth.mean()), teams)


def _run_replicate_job(args):
    config, index = args
    return run_replicate(config, index)


def run_experiment(config: ExperimentConfig,
                   source_factory: Callable[[int, list, list], LabelSource] | None = None,
                   corpus: tuple[list[EmailRecord], list[DifficultyScore]] | None = None) -> ExperimentResult:
    """All replicates followed by the analysis suite.

    ``source_factory(replicate, records, difficulties)`` and ``corpus``
    (shared by every replicate) serve the replay path.
    """
    from .analysis import analyze, traces_from_result

    if config.replicates < 1:
        raise ExperimentError("no replicates requested")
    if config.jobs > 1 and source_factory is None and corpus is None:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            reps = list(pool.map(_run_replicate_job, [(config, i) for i in range(config.replicates)]))
    else:
        reps = []
        for i in range(config.replicates):
            factory = None if source_factory is None else (lambda rec, dif, i=i: source_factory(i, rec, dif))
            reps.append(run_replicate(config, i, factory, corpus))
    reps.sort(key=lambda r: r.index)
    metrics = analyze(config, [traces_from_result(r) for r in reps])
    return ExperimentResult(config, FeatureSchema(), reps, metrics)


def dump_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def team_rows(team: TeamResult) -> tuple[list, list, list]:
    """(rounds.csv rows, batches.csv rows, labels.csv rows) for one team."""
    rounds = [{"round": 0, **team.initial_metrics}]
    for log in team.rounds:
        rounds.append({"round": log.round, **log.model_metrics, "hrq_true_rate": log.hrq_true_rate})
    batches = [(log.batch, log.batch_scores) for log in team.rounds]
    mid = team.scheme.model_id
    labels = [csvio.label_row(mid, "init", l, "", t.pseudo_class)
              for l, t in zip(team.initial_labels, team.initial_targets)]
    for log in team.rounds:
        slot = log.batch.slot_of()
        labels += [csvio.label_row(mid, "raw", l, slot[l.instance_id]) for l in log.labels]
        labels += [csvio.label_row(mid, "resolved", l, slot[l.instance_id], t.pseudo_class)
                   for l, t in zip(log.resolved, log.transformed)]
    return rounds, batches, labels


def write_outputs(result: ExperimentResult, out_dir: str | Path | None = None) -> Path:
    """Per-team CSVs under ``replicates/rNNN/<team>/``, metrics JSON, config and schema."""
    out = Path(out_dir if out_dir is not None else result.config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(result.config.to_yaml())
    (out / "feature_schema.json").write_text(result.schema.to_json() + "\n")
    for rep in result.replicates:
        for mid, team in rep.teams.items():
            d = out / "replicates" / f"r{rep.index:03d}" / mid
            d.mkdir(parents=True, exist_ok=True)
            rounds, batches, labels = team_rows(team)
            csvio.write_rounds(d / "rounds.csv", rounds)
            csvio.write_batches(d / "batches.csv", batches)
            csvio.write_labels(d / "labels.csv", labels)
            (d / "team.json").write_text(dump_json({**team.scheme.to_dict(), "replicate_seed": str(rep.seed),
                                                    "eval_prevalence": rep.eval_prevalence}))
            if team.models:
                first = 0 if result.config.save_models == "all" else len(team.rounds)
                for k, pair in enumerate(team.models):
                    for mode, model in pair.items():
                        model.save(d / f"model_{mode}_round{first + k}.json")
    (out / "metrics.json").write_text(dump_json(result.metrics))
    return out
