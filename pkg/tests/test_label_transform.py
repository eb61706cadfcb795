import math
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from confal.data_model import ConfidenceLabel
from confal.label_transform import aggregate_group, reclassify_targets, round_half_up, to_pseudo_class


def lab(i, label, conf, who="a"):
    return ConfidenceLabel(i, who, label, conf, 1)


@pytest.mark.parametrize("label,conf,cls", [(0, 10, 0), (1, 10, 10), (1, 0, 5), (1, 5, 8), (0, 0, 10),
                                            (1, 1, 6), (1, 9, 10), (0, 4, 6)])
def test_examples(label, conf, cls):
    assert to_pseudo_class(label, conf) == cls


@pytest.mark.parametrize("label", [0, 1])
@pytest.mark.parametrize("conf", range(11))
def test_all_entries_match_direct_substitution(label, conf):
    x = Fraction(10 - conf) if label == 0 else Fraction(conf + 10, 2)
    assert to_pseudo_class(label, conf) == math.floor(x + Fraction(1, 2))


def test_round_half_up():
    assert round_half_up(15, 2) == 8
    assert round_half_up(13, 2) == 7
    assert round_half_up(7, 3) == 2
    assert round_half_up(5, 3) == 2
    with pytest.raises(ValueError):
        round_half_up(1, 0)


@pytest.mark.parametrize("conf", [-1, 11, 2.0, True])
def test_bad_confidence(conf):
    with pytest.raises(ValueError):
        to_pseudo_class(1, conf)
    with pytest.raises(ValueError):
        to_pseudo_class(2, 3)


def test_ranges_monotonicity_and_overlap():
    ones = [to_pseudo_class(1, c) for c in range(11)]
    zeros = [to_pseudo_class(0, c) for c in range(11)]
    assert set(ones) <= set(range(5, 11)) and set(zeros) == set(range(11))
    assert ones == sorted(ones)
    assert zeros == sorted(zeros, reverse=True)
    assert to_pseudo_class(0, 0) == to_pseudo_class(1, 10) == 10


def test_reclassify_modes():
    labels = [lab(1, 0, 4), lab(2, 1, 3), lab(3, 0, 4), lab(4, 0, 7)]
    truth = {1: True, 2: True, 3: False, 4: True}
    mid = [m.pseudo_class for m in reclassify_targets(labels, "midpoint")]
    assert mid == [6, 7, 6, 3]
    orc = [m.pseudo_class for m in reclassify_targets(labels, "oracle", truth)]
    assert orc == [10, 7, 6, 3]
    with pytest.raises(ValueError):
        reclassify_targets(labels, "oracle")
    with pytest.raises(ValueError):
        reclassify_targets(labels, "guess")


def test_group_examples():
    five = lambda votes: [lab(1, v, 5, who=str(k)) for k, v in enumerate(votes)]  # noqa: E731
    assert aggregate_group(five([1, 1, 0, 0, 0]), 2)[0] == 1
    assert aggregate_group(five([1, 0, 0, 0, 0]), 2)[0] == 0
    votes = [lab(1, 1, 8, "a"), lab(1, 1, 6, "b"), lab(1, 0, 2, "c"), lab(1, 0, 9, "d"), lab(1, 0, 1, "e")]
    assert aggregate_group(votes, 2) == (1, 7)
    assert aggregate_group([lab(1, 0, 3, "a"), lab(1, 0, 4, "b")], 2) == (0, 4)


def test_group_errors():
    with pytest.raises(ValueError):
        aggregate_group([], 2)
    with pytest.raises(ValueError):
        aggregate_group([lab(1, 1, 5), lab(2, 1, 5)], 2)
    with pytest.raises(ValueError):
        aggregate_group([lab(1, 1, 5)], 0)


@given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 10)), min_size=1, max_size=7),
       st.integers(1, 4), st.data())
def test_group_vote_is_monotone(votes, threshold, data):
    labels = [lab(1, v, c, who=str(k)) for k, (v, c) in enumerate(votes)]
    before = aggregate_group(labels, threshold)[0]
    zeros = [k for k, (v, _) in enumerate(votes) if v == 0]
    if zeros:
        k = data.draw(st.sampled_from(zeros))
        flipped = list(labels)
        flipped[k] = lab(1, 1, votes[k][1], who=str(k))
        assert aggregate_group(flipped, threshold)[0] >= before
