"""Markdown summary and plot-ready CSV tables, built from the metrics document only."""
from __future__ import annotations

from pathlib import Path

from .csvio import write_table

SLOTS = ("HRQ", "UQ", "RQ")
FIGURE_FILES = ("auprc_by_round.csv", "hrq_true_rate_by_round.csv", "alpha_by_round.csv",
                "confidence_vs_delta_auprc.csv", "true_confidence_by_slot.csv")


def _f(v, digits: int = 4) -> str:
    return "n/a" if v is None else f"{v:.{digits}f}"


def _p(test: dict) -> str:
    if "error" in test:
        return f"not computed ({test['error']})"
    return f"J = {test['statistic']:g}, z = {test['z']:.3f}, p = {test['pvalue']:.4g} ({test['method']})"


def figure_tables(metrics: dict) -> dict[str, tuple[tuple[str, ...], list[tuple]]]:
    """Long-format tables, one per plot."""
    agg = metrics["aggregate"]
    teams = metrics["teams"]
    auprc_rows, hrq_rows, alpha_rows, conf_rows, slot_rows = [], [], [], [], []
    for mid in teams:
        a = agg[mid]
        for r, (b, m) in enumerate(zip(a["mean_auprc"]["binary"], a["mean_auprc"]["multiclass"])):
            auprc_rows.append((mid, r, b, m))
        for r, v in enumerate(a["hrq_true_rate_mean"], start=1):
            hrq_rows.append((mid, r, v))
        if "alpha" in a:
            for r, (i, n) in enumerate(zip(a["alpha"]["interval"]["mean"], a["alpha"]["nominal"]["mean"]), start=1):
                alpha_rows.append((mid, r, i, n))
        for k, rep in enumerate(metrics["replicates"]):
            t = rep[mid]
            for r, (c, d) in enumerate(zip(t["mean_confidence"], t["delta_auprc"]), start=1):
                conf_rows.append((mid, k, r, c, d))
        for slot in SLOTS:
            s = a["true_confidence_by_slot"][slot]
            slot_rows.append((mid, slot, s["n"], s["mean"], s["sd"]))
    return {
        "auprc_by_round.csv": (("team", "round", "binary_auprc_mean", "multiclass_auprc_mean"), auprc_rows),
        "hrq_true_rate_by_round.csv": (("team", "round", "hrq_true_rate_mean"), hrq_rows),
        "alpha_by_round.csv": (("team", "round", "alpha_interval_mean", "alpha_nominal_mean"), alpha_rows),
        "confidence_vs_delta_auprc.csv": (("team", "replicate", "round", "mean_confidence", "delta_auprc"),
                                          conf_rows),
        "true_confidence_by_slot.csv": (("team", "slot", "n", "mean_confidence", "sd_confidence"), slot_rows),
    }


def render(metrics: dict) -> str:
    agg = metrics["aggregate"]
    teams = metrics["teams"]
    n_reps = len(metrics["replicates"])
    lines = ["# Active-learning experiment report", ""]
    if "config_digest" in metrics:
        lines += [f"Config digest: `{metrics['config_digest']}`", ""]
    lines += [f"Replicates: {n_reps}. Teams: {', '.join(teams)}.", ""]

    lines += ["## Multiclass AUPRC by round (mean over replicates)", ""]
    n_rounds = len(agg[teams[0]]["mean_auprc"]["multiclass"]) - 1
    header = "| team | " + " | ".join(f"r{r}" for r in range(n_rounds + 1)) + " |"
    lines += [header, "|" + "---|" * (n_rounds + 2)]
    for mid in teams:
        lines.append(f"| {mid} | " + " | ".join(_f(v, 3) for v in agg[mid]["mean_auprc"]["multiclass"]) + " |")
    lines += ["", "## Binary AUPRC by round (mean over replicates)", "", header, "|" + "---|" * (n_rounds + 2)]
    for mid in teams:
        lines.append(f"| {mid} | " + " | ".join(_f(v, 3) for v in agg[mid]["mean_auprc"]["binary"]) + " |")

    lines += ["", "## Final round: multiclass versus binary", ""]
    for mid in teams:
        a = agg[mid]
        lines.append(f"- {mid}: multiclass AUPRC >= binary in {a['final_multiclass_ge_binary']} of {n_reps} "
                     f"replicates; final multiclass above round 1 in {a['final_multiclass_gt_round1']} of {n_reps}")

    lines += ["", "## HRQ true-label rate", ""]
    for mid in teams:
        a = agg[mid]
        lines.append(f"- {mid}: per-round means " + ", ".join(_f(v, 3) for v in a["hrq_true_rate_mean"]))
        lines.append(f"  - trend test on round means (increasing): {_p(a['hrq_trend'])}")
        lines.append(f"  - trend test on pooled replicate values (increasing): {_p(a['hrq_trend_pooled'])}")

    alpha_teams = [mid for mid in teams if "alpha" in agg[mid]]
    if alpha_teams:
        lines += ["", "## Annotator agreement (Krippendorff's alpha)", ""]
        for mid in alpha_teams:
            for m in ("interval", "nominal"):
                al = agg[mid]["alpha"][m]
                direction = "n/a"
                if "error" not in al["trend"]:
                    direction = "decreasing" if al["trend"]["z"] < 0 else ("increasing" if al["trend"]["z"] > 0
                                                                            else "flat")
                lines.append(f"- {mid} ({m}): per-round means " + ", ".join(_f(v, 3) for v in al["mean"]))
                lines.append(f"  - direction: {direction}; trend test (decreasing): {_p(al['trend'])}")

    lines += ["", "## Mean confidence versus next AUPRC change", ""]
    for mid in teams:
        pc = agg[mid]["pearson_confidence_vs_delta_auprc"]
        lines.append(f"- {mid}: r >= 0 in {pc['nonnegative']} of {pc['defined']} replicates with a defined "
                     f"correlation; mean r = {_f(pc['mean_r'], 3)}")

    lines += ["", "## Confidence of True verdicts by query slot", "", "| team | slot | n | mean | sd |",
              "|---|---|---|---|---|"]
    for mid in teams:
        for slot in SLOTS:
            s = agg[mid]["true_confidence_by_slot"][slot]
            lines.append(f"| {mid} | {slot} | {s['n']} | {_f(s['mean'], 2)} | {_f(s['sd'], 2)} |")
    lines.append("")
    return "\n".join(lines)


def write_report(metrics: dict, out_dir: str | Path) -> Path:
    """``report.md`` plus ``figures/*.csv`` under ``out_dir``; returns the report path."""
    out = Path(out_dir)
    (out / "figures").mkdir(parents=True, exist_ok=True)
    for name, (columns, rows) in figure_tables(metrics).items():
        write_table(out / "figures" / name, columns, rows)
    path = out / "report.md"
    path.write_text(render(metrics), encoding="utf-8")
    return path
