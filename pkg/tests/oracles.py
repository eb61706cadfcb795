"""Independent brute-force reference implementations used by the tests.

Each oracle takes the slow, obvious route (recursion, enumeration, exact
fractions, quadrature) so it shares no code or algorithm with the
package implementation it checks.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import mpmath


def edit_distance_recursive(a: str, b: str) -> int:
    """Plain recursion over first characters; exponential, fine for short strings."""
    if not a:
        return len(b)
    if not b:
        return len(a)
    return min(
        edit_distance_recursive(a[1:], b) + 1,
        edit_distance_recursive(a, b[1:]) + 1,
        edit_distance_recursive(a[1:], b[1:]) + (a[0] != b[0]),
    )


def jt_stat_pairs(groups) -> Fraction:
    """Count ordered cross-group pairs one by one; ties score one half."""
    total = Fraction(0)
    for i in range(len(groups)):
        for j in range(i + 1, len(groups)):
            for x in groups[i]:
                for y in groups[j]:
                    if x < y:
                        total += 1
                    elif x == y:
                        total += Fraction(1, 2)
    return total


def _assignments(n, sizes):
    """Every distinct way to hand positions 0..n-1 to groups of the given sizes."""
    if not sizes:
        yield []
        return
    free = list(range(n))

    def rec(free, sizes):
        if len(sizes) == 1:
            yield [tuple(free)]
            return
        for chosen in itertools.combinations(free, sizes[0]):
            rest = [i for i in free if i not in chosen]
            for tail in rec(rest, sizes[1:]):
                yield [chosen] + tail

    yield from rec(free, list(sizes))


def jt_exact_pvalue(groups, alternative="increasing") -> float:
    """Permutation p-value: every distinct reassignment of the pooled values to groups."""
    sizes = [len(g) for g in groups]
    pooled = [v for g in groups for v in g]
    observed = jt_stat_pairs(groups)
    hits = total = 0
    for parts in _assignments(len(pooled), sizes):
        j = jt_stat_pairs([[pooled[i] for i in part] for part in parts])
        total += 1
        if (alternative == "increasing" and j >= observed) or (alternative == "decreasing" and j <= observed):
            hits += 1
    return hits / total


def n_arrangements(sizes) -> int:
    out = math.factorial(sum(sizes))
    for s in sizes:
        out //= math.factorial(s)
    return out


def alpha_pairwise(ratings, metric="interval") -> Fraction:
    """Alpha from explicit enumeration of pairable values, in exact arithmetic.

    Observed disagreement averages the distance over every ordered pair of
    ratings within a unit, weighted 1/(m_u - 1); expected disagreement
    averages over every ordered pair of pairable values across the whole
    reliability data.
    """
    def dist(a, b):
        if metric == "nominal":
            return Fraction(0 if a == b else 1)
        return Fraction(a - b) ** 2

    units = []
    for u in range(max(len(r) for r in ratings)):
        vals = [r[u] for r in ratings if u < len(r) and r[u] is not None]
        if len(vals) >= 2:
            units.append(vals)
    pairable = [v for vals in units for v in vals]
    n = len(pairable)
    d_o = Fraction(0)
    for vals in units:
        m = len(vals)
        for i, j in itertools.permutations(range(m), 2):
            d_o += dist(vals[i], vals[j]) / (m - 1)
    d_o /= n
    d_e = Fraction(0)
    for i, j in itertools.permutations(range(n), 2):
        d_e += dist(pairable[i], pairable[j])
    d_e /= n * (n - 1)
    return 1 - d_o / d_e


def average_precision_thresholds(scores, truth) -> Fraction:
    """For every distinct threshold, build the confusion matrix from scratch."""
    n_pos = sum(truth)
    ap = Fraction(0)
    prev_recall = Fraction(0)
    for t in sorted(set(scores), reverse=True):
        tp = sum(1 for s, y in zip(scores, truth) if s >= t and y)
        fp = sum(1 for s, y in zip(scores, truth) if s >= t and not y)
        recall = Fraction(tp, n_pos)
        precision = Fraction(tp, tp + fp)
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def t_two_sided_quadrature(t: float, df: int) -> float:
    """2 * integral of the Student-t density from |t| to infinity, 30 digits."""
    with mpmath.workdps(30):
        nu = mpmath.mpf(df)
        c = mpmath.gamma((nu + 1) / 2) / (mpmath.sqrt(nu * mpmath.pi) * mpmath.gamma(nu / 2))
        dens = lambda x: c * (1 + x * x / nu) ** (-(nu + 1) / 2)  # noqa: E731
        return float(2 * mpmath.quad(dens, [abs(mpmath.mpf(t)), mpmath.inf]))


def pearson_direct(x, y) -> float:
    n = len(x)
    mx, my = sum(x) / n, sum(y) / n
    sxy = sum((a - mx) * (b - my) for a, b in zip(x, y))
    sxx = sum((a - mx) ** 2 for a in x)
    syy = sum((b - my) ** 2 for b in y)
    return sxy / math.sqrt(sxx * syy)
