import numpy as np
import pytest

from confal.data_model import validate_corpus
from confal.featurize import max_name_address_similarity
from confal.synth_corpus import (
    DifficultyScore, GeneratorConfig, difficulty_from_evidence, generate_corpus, partition_rounds,
)


@pytest.fixture(scope="module")
def corpus_1k():
    return generate_corpus(GeneratorConfig(seed=7, n_records=1000))


def test_seeded_anomaly_count(corpus_1k):
    records, diffs = corpus_1k
    assert len(records) == 1000 and len(diffs) == 1000
    n_anom = sum(r.ground_truth for r in records)
    assert 20 <= n_anom <= 60
    assert n_anom == 41  # golden value for seed 7


def test_records_are_valid_and_ids_line_up(corpus_1k):
    records, diffs = corpus_1k
    assert validate_corpus(records).ok
    assert [r.id for r in records] == [d.instance_id for d in diffs]
    assert all(0.0 <= d.difficulty <= 1.0 for d in diffs)


def test_stored_similarity_matches_recomputation(corpus_1k):
    records, _ = corpus_1k
    for r in records[:200]:
        assert r.name_address_similarity == pytest.approx(
            max_name_address_similarity(r.sender_name, r.recipient_addresses), abs=1e-12)


def test_generation_is_deterministic():
    a = generate_corpus(GeneratorConfig(seed=11, n_records=300))
    b = generate_corpus(GeneratorConfig(seed=11, n_records=300))
    c = generate_corpus(GeneratorConfig(seed=12, n_records=300))
    assert a == b
    assert a != c


@pytest.mark.parametrize("kw", [dict(n_records=0), dict(anomaly_rate=0.0), dict(anomaly_rate=1.0),
                                dict(anomaly_rate=0.6), dict(sensitive_term_rate_benign=1.5),
                                dict(size_scale_benign=0.0)])
def test_config_rejects_invalid(kw):
    with pytest.raises(ValueError):
        GeneratorConfig(**kw)


def test_config_round_trip_and_unknown_keys():
    cfg = GeneratorConfig(seed=3, n_records=50)
    assert GeneratorConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ValueError):
        GeneratorConfig.from_dict({"bogus": 1})


def test_anomalies_differ_in_expectation():
    sens_a, sens_b, sim_a, sim_b = [], [], [], []
    for seed in range(10):
        recs, _ = generate_corpus(GeneratorConfig(seed=seed, n_records=2000, anomaly_rate=0.1))
        gt = np.array([r.ground_truth for r in recs])
        sens = np.array([r.subject_sensitive or r.attachment_sensitive for r in recs])
        sim = np.array([r.name_address_similarity for r in recs])
        sens_a.append(sens[gt].mean()); sens_b.append(sens[~gt].mean())
        sim_a.append(sim[gt].mean()); sim_b.append(sim[~gt].mean())
    assert np.mean(sens_a) > np.mean(sens_b)
    assert np.mean(sim_a) > np.mean(sim_b)


def test_difficulty_from_evidence():
    assert difficulty_from_evidence(0.5) == 1.0
    assert difficulty_from_evidence(0.0) == 0.0
    assert difficulty_from_evidence(1.0) == 0.0
    assert difficulty_from_evidence(0.99) == pytest.approx(0.02)
    with pytest.raises(ValueError):
        DifficultyScore(1, 1.5)


def test_partition_arithmetic(corpus_1k):
    recs = corpus_1k[0][:1800] if len(corpus_1k[0]) >= 1800 else generate_corpus(
        GeneratorConfig(seed=1, n_records=1800))[0]
    init, pools = partition_rounds(recs, 8, 200, seed=4)
    assert len(init) == 200 and [len(p) for p in pools] == [200] * 8
    ids = [r.id for r in init] + [r.id for p in pools for r in p]
    assert sorted(ids) == sorted(r.id for r in recs)
    for a, b in zip(pools, pools[1:]):
        assert max(r.timestamp for r in a) <= min(r.timestamp for r in b)


def test_partition_single_round_and_errors(corpus_1k):
    recs = corpus_1k[0]
    init, pools = partition_rounds(recs, 1, 100)
    assert len(pools) == 1 and len(pools[0]) == 900
    with pytest.raises(ValueError):
        partition_rounds(recs[:10], 8, 5)
    a = partition_rounds(recs, 4, 50, seed=2)
    assert a == partition_rounds(recs, 4, 50, seed=2)


def test_pools_near_equal():
    recs, _ = generate_corpus(GeneratorConfig(seed=2, n_records=1003))
    _, pools = partition_rounds(recs, 8, 200)
    sizes = [len(p) for p in pools]
    assert max(sizes) - min(sizes) <= 1 and sum(sizes) == 803
