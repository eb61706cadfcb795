import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from confal.data_model import EmailRecord
from confal.featurize import (
    FeatureMatrix, FeatureSchema, featurize, featurize_many, levenshtein, max_name_address_similarity,
    name_address_similarity, normalize_name,
)
from conftest import make_record
from oracles import edit_distance_recursive

short = st.text(alphabet="abcd", max_size=6)


@pytest.mark.parametrize("a,b,d", [("", "abc", 3), ("abc", "abc", 0), ("kitten", "sitting", 3), ("", "", 0),
                                   ("flaw", "lawn", 2)])
def test_levenshtein_examples(a, b, d):
    assert levenshtein(a, b) == d


def test_levenshtein_kitten_matches_oracle():
    assert levenshtein("kitten", "sitting") == edit_distance_recursive("kitten", "sitting")


@settings(max_examples=200, deadline=None)
@given(short, short)
def test_levenshtein_matches_recursive_oracle(a, b):
    assert levenshtein(a, b) == edit_distance_recursive(a, b)


@settings(max_examples=200, deadline=None)
@given(short, short, short)
def test_levenshtein_is_a_metric(a, b, c):
    assert levenshtein(a, b) == levenshtein(b, a)
    assert (levenshtein(a, b) == 0) == (a == b)
    assert levenshtein(a, c) <= levenshtein(a, b) + levenshtein(b, c)


def test_normalize_name():
    assert normalize_name("John.Doe") == "johndoe"
    assert normalize_name("j_doe-x@Mail.com") == "jdoex"


def test_similarity_examples():
    assert name_address_similarity("jdoe", "jdoe@gmail.com") == 1.0
    assert name_address_similarity("jdoe", "xqzw@corp.com") == 0.0
    # "johndoe" vs "jdoe": distance 3 over length 7
    assert edit_distance_recursive("johndoe", "jdoe") == 3
    assert name_address_similarity("john.doe", "jdoe@mail.com") == pytest.approx(1 - 3 / 7, abs=1e-12)
    assert name_address_similarity("", "@x.com") == 1.0


def test_max_similarity_over_recipients():
    assert max_name_address_similarity("jdoe", ["zz@a.com", "jdoe@b.com"]) == 1.0
    assert max_name_address_similarity("jdoe", []) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.text(max_size=12), st.text(max_size=12))
def test_similarity_in_unit_interval(a, b):
    assert 0.0 <= name_address_similarity(a, b) <= 1.0


def test_schema_layout_and_digest():
    s = FeatureSchema()
    assert len(s.feature_names) == 11 + 6 + 4
    assert s.feature_names[:2] == ("subject_sensitive", "attachment_sensitive")
    assert "role=__other__" in s.feature_names and "status=__other__" in s.feature_names
    assert FeatureSchema.from_dict(s.to_dict()) == s
    assert s.digest == FeatureSchema().digest
    assert FeatureSchema(roles=("x",)).digest != s.digest


def test_featurize_booleans_and_log1p():
    s = FeatureSchema()
    v = featurize(make_record(subject_sensitive=True, attachment_sensitive=False, attachment_size=0), s)
    named = dict(zip(v.feature_names, v.values))
    assert named["subject_sensitive"] == 1.0
    assert named["attachment_sensitive"] == 0.0
    assert named["log1p_attachment_size"] == 0.0
    assert named["log1p_recipient_count"] == pytest.approx(math.log(2))


def test_featurize_cyclic_hour():
    v = featurize(make_record(hour_of_day=6), FeatureSchema())
    named = dict(zip(v.feature_names, v.values))
    assert named["hour_sin"] == pytest.approx(1.0, abs=1e-12)
    assert named["hour_cos"] == pytest.approx(0.0, abs=1e-12)


def test_unknown_category_goes_to_other():
    v = featurize(make_record(sender_role="astronaut", sender_status="retired"), FeatureSchema())
    named = dict(zip(v.feature_names, v.values))
    assert named["role=__other__"] == 1.0 and named["status=__other__"] == 1.0
    assert sum(val for k, val in named.items() if k.startswith("role=")) == 1.0


def test_ground_truth_never_reaches_features():
    a = featurize(make_record(ground_truth=False), FeatureSchema())
    b = featurize(make_record(ground_truth=True), FeatureSchema())
    assert a == b
    assert not any("ground" in n for n in a.feature_names)


def test_featurize_many_matches_single_and_is_pure():
    recs = [make_record(i, hour_of_day=i % 24, attachment_size=100 * i) for i in range(1, 30)]
    s = FeatureSchema()
    fm = featurize_many(recs, s)
    assert fm.X.shape == (29, len(s))
    for row, rec in zip(fm.rows(), recs):
        assert row == featurize(rec, s)
    assert np.array_equal(featurize_many(recs, s).X, fm.X)
    assert FeatureMatrix.from_vectors(fm.rows(), s).X.tolist() == fm.X.tolist()
    sub = fm.take([3, 1])
    assert sub.ids.tolist() == [4, 2]
