import dataclasses

import pytest

from confal.data_model import (
    RECORD_FIELDS, BlindRecord, ClassDistribution, ConfidenceLabel, EmailRecord, MulticlassLabel, QueryBatch,
    check_references, validate_corpus,
)
from conftest import make_record


def test_blind_projection_drops_ground_truth():
    rec = make_record(ground_truth=True)
    view = rec.blind()
    assert isinstance(view, BlindRecord)
    assert not hasattr(view, "ground_truth")
    assert "ground_truth" not in RECORD_FIELDS
    assert all(getattr(view, f) == getattr(rec, f) for f in RECORD_FIELDS)


def test_email_record_is_not_a_blind_record():
    # code typed against the blinded view cannot be handed the labelled copy by accident
    assert not isinstance(make_record(), BlindRecord)


def test_records_are_immutable():
    with pytest.raises(dataclasses.FrozenInstanceError):
        make_record().ground_truth = True


@pytest.mark.parametrize("label,conf", [(2, 5), (-1, 5), (1, 11), (0, -1), (1, 2.5)])
def test_confidence_label_rejects_out_of_range(label, conf):
    with pytest.raises(ValueError):
        ConfidenceLabel(1, "a", label, conf, 1)


def test_confidence_label_bounds_accepted():
    for c in range(11):
        assert ConfidenceLabel(1, "a", 1, c, 0).confidence == c


def test_multiclass_label_range():
    MulticlassLabel(1, 0)
    MulticlassLabel(1, 10)
    with pytest.raises(ValueError):
        MulticlassLabel(1, 11)


def test_class_distribution_validation():
    assert len(ClassDistribution((0.25, 0.75))) == 2
    with pytest.raises(ValueError):
        ClassDistribution((0.5, 0.6))
    with pytest.raises(ValueError):
        ClassDistribution((1.2, -0.2))
    with pytest.raises(ValueError):
        ClassDistribution(())
    ClassDistribution((0.1, 0.2, 0.7 + 5e-10))


def test_query_batch_disjoint_and_slots():
    b = QueryBatch(1, (1, 2), (3,), (4,))
    assert b.ids == (1, 2, 3, 4)
    assert len(b) == 4
    assert b.slot_of() == {1: "HRQ", 2: "HRQ", 3: "UQ", 4: "RQ"}
    with pytest.raises(ValueError):
        QueryBatch(1, (1, 2), (2,), ())
    with pytest.raises(ValueError):
        QueryBatch(1, (1, 1), (), ())


def test_validate_corpus_flags_violations():
    good = make_record(1)
    bad = make_record(2, recipient_count=3, hour_of_day=25, name_address_similarity=1.5)
    dup = make_record(1)
    report = validate_corpus([good, bad, dup])
    assert not report.ok
    msgs = [m for _, m in report.violations]
    assert any("recipient_count" in m for m in msgs)
    assert any("hour_of_day" in m for m in msgs)
    assert any("name_address_similarity" in m for m in msgs)
    assert any("duplicate" in m for m in msgs)
    assert validate_corpus([good]).ok


def test_validate_corpus_prevalence():
    recs = [make_record(i, ground_truth=(i % 4 == 0)) for i in range(1, 9)]
    assert validate_corpus(recs).anomaly_prevalence == 0.25


def test_check_references():
    assert check_references([1, 5, 7], {1: None, 7: None}) == [5]
