import pytest
import yaml

from confal.annotator_sim import AnnotatorProfile
from confal.config import ConfigError, ExperimentConfig, load_config
from confal.csvio import write_roster
from conftest import TINY, tiny_config


def test_defaults_are_valid():
    cfg = ExperimentConfig()
    assert (cfg.batch_sizes.hrq, cfg.batch_sizes.uq, cfg.batch_sizes.rq) == (14, 3, 3)
    assert cfg.n_rounds == 8 and cfg.init_size == 200
    assert [t.model_id for t in cfg.teams] == ["A", "B", "C", "D", "E", "F"]
    assert cfg.problems() == []


def test_yaml_round_trip(tmp_path):
    cfg = tiny_config()
    path = tmp_path / "c.yaml"
    path.write_text(cfg.to_yaml())
    again = load_config(path)
    assert again == cfg
    assert again.digest() == cfg.digest()


def test_digest_ignores_output_location():
    cfg = tiny_config()
    assert cfg.with_output_dir("elsewhere").digest() == cfg.digest()
    assert tiny_config(seed=4).digest() != cfg.digest()


def test_generator_rounds_follow_experiment():
    assert tiny_config().generator.n_rounds == 3
    with pytest.raises(ConfigError, match="generator.n_rounds"):
        tiny_config(generator={"n_records": 3000, "n_rounds": 5})


@pytest.mark.parametrize("override,message", [
    ({"teams": [{"kind": "individual", "model_id": "X", "annotator_ids": ["nobody"]}]}, "unknown annotators"),
    ({"reclassify_mode": "psychic"}, "reclassify_mode"),
    ({"query_model": "both"}, "query_model"),
    ({"colour": "blue"}, "unknown config keys"),
    ({"version": 2}, "version"),
    ({"batch_sizes": {"hrq": 900, "uq": 3, "rq": 3}}, "smaller than the batch"),
    ({"teams": [{"kind": "swap", "model_id": "S", "annotator_ids": ["a", "b"], "swap_round": 9}]}, "swap_round"),
    ({"annotators": [{"annotator_id": "a"}, {"annotator_id": "a"}]}, "duplicate annotator"),
    ({"annotators": [{"annotator_id": "a", "skill": 3}]}, "skill"),
])
def test_invalid_configs(override, message):
    with pytest.raises(ConfigError, match=message):
        ExperimentConfig.from_dict({**TINY, **override})


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        load_config(bad)


def test_roster_file(tmp_path):
    profiles = [AnnotatorProfile("a", skill=0.8, seed=4), AnnotatorProfile("b", skill=0.6, confidence_bias=-1.0),
                AnnotatorProfile("c", motivation_decay=0.05)]
    write_roster(tmp_path / "roster.csv", profiles)
    data = {k: v for k, v in TINY.items() if k != "annotators"}
    data["roster"] = "roster.csv"
    (tmp_path / "c.yaml").write_text(yaml.safe_dump(data))
    cfg = load_config(tmp_path / "c.yaml")
    assert cfg.annotators == tuple(profiles)
    with pytest.raises(ConfigError, match="either"):
        ExperimentConfig.from_dict({**TINY, "roster": "r.csv"})


def test_acceptance_config_loads():
    from pathlib import Path

    cfg = load_config(Path(__file__).parent.parent / "configs" / "acceptance.yaml")
    assert cfg.replicates == 20 and cfg.n_rounds == 8
    assert cfg.generator.n_records == 32_000 and cfg.generator.anomaly_rate == 0.04
