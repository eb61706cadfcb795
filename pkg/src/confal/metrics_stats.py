"""Evaluation statistics: PR curves, AUPRC, F-beta, agreement and trend tests."""
from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np
from scipy import special

from .data_model import RoundLog


# ---------------------------------------------------------------------------
# precision / recall


def _check_scored(scores, truth) -> tuple[np.ndarray, np.ndarray]:
    s = np.asarray(scores, dtype=np.float64)
    t = np.asarray(truth).astype(bool)
    if s.shape != t.shape or s.ndim != 1:
        raise ValueError("scores and truth must be 1-D and of equal length")
    if not t.any():
        raise ValueError("undefined recall: no positive instances")
    return s, t


def _sweep(scores, truth):
    """Cumulative TP/FP counts at each distinct score, highest score first."""
    s, t = _check_scored(scores, truth)
    order = np.lexsort((np.arange(len(s)), -s))
    s, t = s[order], t[order]
    last_of_block = np.r_[s[1:] != s[:-1], True]
    tp = np.cumsum(t)[last_of_block]
    fp = np.cumsum(~t)[last_of_block]
    return tp, fp, int(t.sum())


def pr_curve(scores: Sequence[float], truth: Sequence[int]) -> list[tuple[float, float]]:
    """(recall, precision) at every distinct score threshold, after a (0, 1) anchor."""
    tp, fp, n_pos = _sweep(scores, truth)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    return [(0.0, 1.0)] + [(float(r), float(p)) for r, p in zip(recall, precision)]


def auprc(scores: Sequence[float], truth: Sequence[int]) -> float:
    """Average precision, sum of (R_i - R_{i-1}) * P_i over the sweep."""
    tp, fp, n_pos = _sweep(scores, truth)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def f_beta(precision: float, recall: float, beta: float) -> float:
    if beta <= 0:
        raise ValueError("beta must be positive")
    if not (0.0 <= precision <= 1.0 and 0.0 <= recall <= 1.0):
        raise ValueError("precision and recall must lie in [0, 1]")
    b2 = beta * beta
    denom = b2 * precision + recall
    # P = R = 0 is reported as 0 by convention
    return 0.0 if denom == 0 else (1 + b2) * precision * recall / denom


def precision_recall_at(scores, truth, threshold: float = 0.5) -> tuple[float, float]:
    """Precision and recall when ``score >= threshold`` is flagged; precision is 0 if nothing is flagged."""
    s, t = _check_scored(scores, truth)
    flagged = s >= threshold
    tp = int(np.sum(flagged & t))
    n_flagged = int(flagged.sum())
    return (tp / n_flagged if n_flagged else 0.0), tp / int(t.sum())


def hrq_true_rate(round_log: RoundLog) -> float:
    hrq = set(round_log.batch.hrq_ids)
    if not hrq:
        raise ValueError("round has no high-risk queries")
    labels = {l.instance_id: l.label for l in round_log.resolved}
    missing = hrq - labels.keys()
    if missing:
        raise ValueError(f"HRQ instances without a resolved label: {sorted(missing)}")
    return sum(labels[i] for i in hrq) / len(hrq)


# ---------------------------------------------------------------------------
# Krippendorff's alpha


def _is_missing(v) -> bool:
    return v is None or (isinstance(v, float) and math.isnan(v))


def krippendorff_alpha(ratings: Sequence[Sequence], metric: str = "interval") -> float:
    """Alpha for an annotator x unit matrix; ``None``/NaN cells are missing.

    Built from the coincidence matrix of pairable values: a unit with ``m``
    ratings contributes each ordered pair of its ratings with weight
    ``1 / (m - 1)``. Units with fewer than two ratings are ignored.
    """
    if metric not in ("nominal", "interval"):
        raise ValueError(f"unknown metric {metric!r}")
    n_units = max((len(row) for row in ratings), default=0)
    units: list[list[Hashable]] = []
    for u in range(n_units):
        vals = [row[u] for row in ratings if u < len(row) and not _is_missing(row[u])]
        if len(vals) >= 2:
            units.append(vals)
    if len(units) < 2:
        raise ValueError("alpha undefined: fewer than two units with two or more ratings")

    domain = sorted({v for vals in units for v in vals})
    index = {v: i for i, v in enumerate(domain)}
    counts = np.zeros((len(units), len(domain)))
    for u, vals in enumerate(units):
        for v in vals:
            counts[u, index[v]] += 1
    m = counts.sum(axis=1)
    coincidence = (counts.T / (m - 1)) @ counts - np.diag((counts.T / (m - 1)).sum(axis=1))
    n_c = coincidence.sum(axis=1)
    n = n_c.sum()
    if metric == "nominal":
        delta2 = 1.0 - np.eye(len(domain))
    else:
        vals = np.array(domain, dtype=np.float64)
        delta2 = (vals[:, None] - vals[None, :]) ** 2
    d_obs = float(np.sum(coincidence * delta2)) / n
    d_exp = float(n_c @ delta2 @ n_c) / (n * (n - 1))
    if d_exp == 0:
        raise ValueError("alpha undefined: all pairable ratings take a single value")
    return 1.0 - d_obs / d_exp


# ---------------------------------------------------------------------------
# Jonckheere-Terpstra


@dataclass(frozen=True)
class TrendTest:
    statistic: float
    z: float
    pvalue: float
    alternative: str
    method: str


EXACT_MAX_N = 12


def _jt_statistic(groups: list[np.ndarray]) -> float:
    J = 0.0
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            x = groups[i][:, None]
            y = groups[j][None, :]
            J += np.sum(x < y) + 0.5 * np.sum(x == y)
    return float(J)


def _jt_moments(sizes: np.ndarray, pooled: np.ndarray) -> tuple[float, float]:
    N = float(sizes.sum())
    ties = np.unique(pooled, return_counts=True)[1].astype(np.float64)
    n = sizes.astype(np.float64)
    mean = (N * N - np.sum(n * n)) / 4.0
    var = (N * (N - 1) * (2 * N + 5) - np.sum(n * (n - 1) * (2 * n + 5))
           - np.sum(ties * (ties - 1) * (2 * ties + 5))) / 72.0
    if N > 2:
        var += (np.sum(n * (n - 1) * (n - 2)) * np.sum(ties * (ties - 1) * (ties - 2))
                / (36.0 * N * (N - 1) * (N - 2)))
    var += np.sum(n * (n - 1)) * np.sum(ties * (ties - 1)) / (8.0 * N * (N - 1))
    return float(mean), float(max(var, 0.0))


def jt_null_distribution(sizes: Sequence[int], pooled: Sequence[float]) -> tuple[dict[int, int], int]:
    """Exact permutation distribution of ``2*J`` as ``{2J: count}`` plus the total count.

    Values are visited in tie blocks of increasing value; the state is how
    many members of each group have been placed so far. Every distinct
    assignment of the pooled values to groups is counted exactly once.
    """
    sizes = tuple(int(s) for s in sizes)
    k = len(sizes)
    blocks = np.unique(np.asarray(pooled, dtype=np.float64), return_counts=True)[1]
    states: dict[tuple[int, ...], Counter] = {tuple([0] * k): Counter({0: 1})}
    for t in blocks:
        t = int(t)
        nxt: dict[tuple[int, ...], Counter] = defaultdict(Counter)
        for state, dist in states.items():
            room = [sizes[g] - state[g] for g in range(k)]
            for comp in _compositions(t, room):
                below = 0
                inc = 0
                for g in range(k):
                    inc += 2 * comp[g] * below
                    below += state[g]
                for a in range(k):
                    for b in range(a + 1, k):
                        inc += comp[a] * comp[b]
                ways = math.factorial(t)
                for c in comp:
                    ways //= math.factorial(c)
                new_state = tuple(state[g] + comp[g] for g in range(k))
                target = nxt[new_state]
                for j2, cnt in dist.items():
                    target[j2 + inc] += cnt * ways
        states = nxt
    (final,) = states.values()
    total = math.factorial(sum(sizes))
    for s in sizes:
        total //= math.factorial(s)
    return dict(final), total


def _compositions(t: int, room: list[int]):
    """All ways to split ``t`` items over groups with the given capacities."""
    if len(room) == 1:
        if t <= room[0]:
            yield (t,)
        return
    for c in range(min(t, room[0]) + 1):
        for rest in _compositions(t - c, room[1:]):
            yield (c,) + rest


def jonckheere_terpstra(groups: Sequence[Sequence[float]], alternative: str = "increasing",
                        method: str = "auto") -> TrendTest:
    """Jonckheere-Terpstra test for an ordered trend across a priori ordered groups.

    ``method="auto"`` computes the exact permutation p-value when the total
    sample size is at most 12 and otherwise uses the tie-corrected normal
    approximation (no continuity correction).
    """
    if alternative not in ("increasing", "decreasing"):
        raise ValueError("alternative must be 'increasing' or 'decreasing'")
    if method not in ("auto", "exact", "normal"):
        raise ValueError("method must be 'auto', 'exact' or 'normal'")
    if len(groups) < 2:
        raise ValueError("need at least two groups")
    arrays = [np.asarray(g, dtype=np.float64) for g in groups]
    if any(a.size == 0 for a in arrays):
        raise ValueError("every group must be non-empty")
    sizes = np.array([a.size for a in arrays])
    pooled = np.concatenate(arrays)
    J = _jt_statistic(arrays)
    mean, var = _jt_moments(sizes, pooled)
    if var <= 1e-12:
        # every value tied: no ordering information
        return TrendTest(J, 0.0, 0.5, alternative, "degenerate")
    z = float((J - mean) / math.sqrt(var))
    use_exact = method == "exact" or (method == "auto" and pooled.size <= EXACT_MAX_N)
    if use_exact:
        dist, total = jt_null_distribution(sizes, pooled)
        j2 = int(round(2 * J))
        if alternative == "increasing":
            hits = sum(c for v, c in dist.items() if v >= j2)
        else:
            hits = sum(c for v, c in dist.items() if v <= j2)
        return TrendTest(J, z, hits / total, alternative, "exact")
    tail = 0.5 * math.erfc(z / math.sqrt(2.0)) if alternative == "increasing" else 0.5 * math.erfc(-z / math.sqrt(2.0))
    return TrendTest(J, z, tail, alternative, "normal")


# ---------------------------------------------------------------------------
# Pearson correlation trend


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t via the regularized incomplete beta."""
    if math.isinf(t):
        return 0.0
    return float(special.betainc(df / 2.0, 0.5, df / (df + t * t)))


def pearson_trend(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Pearson r and the two-sided p-value for a zero slope (n - 2 df)."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("x and y must be 1-D and of equal length")
    n = xa.size
    if n < 3:
        raise ValueError("need at least three points")
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0.0 or syy == 0.0:
        raise ValueError("zero variance: correlation undefined")
    r = float(np.clip((dx @ dy) / math.sqrt(sxx * syy), -1.0, 1.0))
    df = n - 2
    if abs(r) == 1.0:
        return r, 0.0
    t = r * math.sqrt(df / (1.0 - r * r))
    return r, t_sf_two_sided(t, df)

