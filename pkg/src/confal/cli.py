"""Command-line entry point: ``confal {gen-corpus,run,metrics,report,replay}``.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime error.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import csvio
from .analysis import analyze, traces_from_dir
from .config import ConfigError, ExperimentConfig, load_config
from .orchestrator import ReplayLabelSource, dump_json, replicate_corpus, run_experiment, write_outputs
from .report import write_report

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    overrides = {}
    if getattr(args, "output_dir", None):
        overrides["output_dir"] = str(args.output_dir)
    if getattr(args, "replicates", None) is not None:
        overrides["replicates"] = args.replicates
    if getattr(args, "jobs", None) is not None:
        overrides["jobs"] = args.jobs
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if overrides:
        try:
            cfg = replace(cfg, **overrides)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
    return cfg


def cmd_gen_corpus(args) -> int:
    cfg = _config(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    records, diffs = replicate_corpus(cfg, args.replicate)
    csvio.write_records(out / "records.csv", records)
    csvio.write_records(out / "records_blind.csv", records, blind=True)
    csvio.write_difficulties(out / "difficulties.csv", diffs)
    prevalence = sum(r.ground_truth for r in records) / len(records)
    print(f"wrote {len(records)} records (prevalence {prevalence:.4f}) to {out}")
    return EXIT_OK


def _finish(result, out: Path) -> None:
    write_outputs(result, out)
    write_report(result.metrics, out)
    print(f"wrote {out / 'metrics.json'} and {out / 'report.md'}")


def cmd_run(args) -> int:
    cfg = _config(args)
    result = run_experiment(cfg)
    _finish(result, Path(cfg.output_dir))
    return EXIT_OK


def cmd_metrics(args) -> int:
    run_dir = Path(args.run_dir)
    cfg = load_config(run_dir / "config.yaml") if (run_dir / "config.yaml").exists() else None
    metrics = analyze(cfg, traces_from_dir(run_dir))
    out = Path(args.out) if args.out else run_dir / "metrics.json"
    out.write_text(dump_json(metrics))
    print(f"wrote {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    src = Path(args.metrics)
    path = src / "metrics.json" if src.is_dir() else src
    metrics = json.loads(path.read_text())
    out = Path(args.out) if args.out else path.parent
    print(f"wrote {write_report(metrics, out)}")
    return EXIT_OK


def _label_rows(labels: Path, replicate: int) -> list[dict]:
    if labels.is_file():
        return csvio.read_labels(labels)
    rep_dir = labels / "replicates" / f"r{replicate:03d}"
    files = sorted(rep_dir.glob("*/labels.csv"))
    if not files:
        raise FileNotFoundError(f"no labels.csv files under {rep_dir}")
    return [row for f in files for row in csvio.read_labels(f)]


def cmd_replay(args) -> int:
    cfg = _config(args)
    labels = Path(args.labels)
    if labels.is_file() and cfg.replicates != 1:
        raise ConfigError("a single labels CSV can only drive one replicate (set --replicates 1)")
    corpus = None
    if args.corpus:
        records = csvio.read_records(args.corpus)
        corpus = (records, [])
    result = run_experiment(cfg, source_factory=lambda i, rec, dif: ReplayLabelSource(_label_rows(labels, i)),
                            corpus=corpus)
    _finish(result, Path(cfg.output_dir))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="confal", description="Confidence-aware batch active learning simulator.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp, output=True):
        sp.add_argument("--config", type=Path, help="experiment config (YAML or JSON); defaults if omitted")
        sp.add_argument("--seed", type=int, help="override the config seed")
        if output:
            sp.add_argument("--output-dir", type=Path, help="override output_dir")
            sp.add_argument("--replicates", type=int, help="override the replicate count")
            sp.add_argument("--jobs", type=int, help="worker processes for replicates")

    g = sub.add_parser("gen-corpus", help="write one replicate's synthetic corpus as CSV")
    common(g, output=False)
    g.add_argument("--replicate", type=int, default=0, help="replicate index whose corpus to write")
    g.add_argument("--out", type=Path, required=True, help="directory for records/difficulty CSVs")
    g.set_defaults(func=cmd_gen_corpus)

    r = sub.add_parser("run", help="run the experiment and write logs, metrics and report")
    common(r)
    r.set_defaults(func=cmd_run)

    m = sub.add_parser("metrics", help="recompute the metrics JSON from a run directory's CSVs")
    m.add_argument("run_dir", type=Path)
    m.add_argument("--out", type=Path, help="output path (default: <run_dir>/metrics.json)")
    m.set_defaults(func=cmd_metrics)

    rp = sub.add_parser("report", help="render report.md and figure CSVs from a metrics JSON")
    rp.add_argument("metrics", type=Path, help="metrics.json or a run directory containing it")
    rp.add_argument("--out", type=Path, help="output directory (default: next to the metrics file)")
    rp.set_defaults(func=cmd_report)

    rl = sub.add_parser("replay", help="re-run the loop with labels from CSV instead of the simulator")
    common(rl)
    rl.add_argument("--labels", type=Path, required=True,
                    help="a labels CSV (one replicate) or a run directory with per-team labels.csv files")
    rl.add_argument("--corpus", type=Path, help="records CSV with ground truth to use instead of generating one")
    rl.set_defaults(func=cmd_replay)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
