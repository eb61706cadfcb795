import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from confal.data_model import EmailRecord  # noqa: E402

ACCEPTANCE_LINES: list[str] = []


def make_record(id=1, **overrides) -> EmailRecord:
    base = dict(
        id=id, timestamp=1000 * id, sender_name="ada.lovelace", sender_address="ada.lovelace@corp.example.com",
        recipient_addresses=("bob.smith@corp.example.com",), recipient_count=1, subject_sensitive=False,
        attachment_sensitive=False, attachment_count=0, attachment_size=0, hour_of_day=10, day_of_week=2,
        sender_role="analyst", sender_tenure_days=400, sender_status="active", name_address_similarity=0.2,
        ground_truth=False,
    )
    base.update(overrides)
    return EmailRecord(**base)


@pytest.fixture
def record_factory():
    return make_record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


TINY = {
    "seed": 3,
    "replicates": 2,
    "n_rounds": 3,
    "init_size": 120,
    "eval_size": 800,
    "save_models": "final",
    "generator": {"n_records": 3000, "anomaly_rate": 0.06},
    "learner_binary": {"n_boosting_rounds": 20},
    "learner_multiclass": {"n_boosting_rounds": 20},
    "annotators": [
        {"annotator_id": "a", "skill": 0.9, "confidence_noise_sd": 1.0, "seed": 1},
        {"annotator_id": "b", "skill": 0.7, "seed": 2},
        {"annotator_id": "c", "skill": 0.6, "seed": 3},
    ],
    "teams": [
        {"kind": "individual", "model_id": "I", "annotator_ids": ["a"]},
        {"kind": "swap", "model_id": "S", "annotator_ids": ["a", "b"], "swap_round": 2},
        {"kind": "group", "model_id": "G", "annotator_ids": ["a", "b", "c"]},
    ],
}


def tiny_config(**overrides):
    """A few-second experiment: 3000 records, 3 rounds, 3 teams."""
    from confal.config import ExperimentConfig

    return ExperimentConfig.from_dict({**TINY, **overrides})
