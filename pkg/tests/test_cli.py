import json

import pytest
import yaml

from confal.cli import main
from confal.csvio import read_blind_records, read_records
from conftest import TINY


@pytest.fixture(scope="module")
def cfg_path(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    path = d / "tiny.yaml"
    path.write_text(yaml.safe_dump({**TINY, "replicates": 1, "output_dir": str(d / "out")}))
    return path


@pytest.fixture(scope="module")
def run_dir(cfg_path):
    assert main(["run", "--config", str(cfg_path)]) == 0
    return cfg_path.parent / "out"


def test_gen_corpus(cfg_path, tmp_path, capsys):
    assert main(["gen-corpus", "--config", str(cfg_path), "--out", str(tmp_path)]) == 0
    records = read_records(tmp_path / "records.csv")
    assert len(records) == 3000
    blind = read_blind_records(tmp_path / "records_blind.csv")
    assert [b.id for b in blind] == [r.id for r in records]
    assert "ground_truth" not in (tmp_path / "records_blind.csv").read_text().splitlines()[0]
    assert (tmp_path / "difficulties.csv").exists()
    assert "wrote 3000 records" in capsys.readouterr().out


def test_run_outputs(run_dir):
    for name in ("config.yaml", "feature_schema.json", "metrics.json", "report.md"):
        assert (run_dir / name).exists()
    assert sorted(p.name for p in (run_dir / "replicates" / "r000").iterdir()) == ["G", "I", "S"]


def test_metrics_and_report_commands(run_dir, tmp_path):
    out = tmp_path / "m.json"
    assert main(["metrics", str(run_dir), "--out", str(out)]) == 0
    assert out.read_text() == (run_dir / "metrics.json").read_text()
    assert main(["report", str(out), "--out", str(tmp_path / "rep")]) == 0
    assert (tmp_path / "rep" / "report.md").read_text() == (run_dir / "report.md").read_text()


def test_replay_command(cfg_path, run_dir, tmp_path):
    out = tmp_path / "replayed"
    assert main(["replay", "--config", str(cfg_path), "--labels", str(run_dir), "--output-dir", str(out)]) == 0
    assert (out / "metrics.json").read_text() == (run_dir / "metrics.json").read_text()
    one = run_dir / "replicates" / "r000" / "I" / "labels.csv"
    assert main(["replay", "--config", str(cfg_path), "--labels", str(one), "--output-dir",
                 str(tmp_path / "partial")]) == 2


def test_config_errors_exit_1(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("reclassify_mode: sometimes\n")
    assert main(["run", "--config", str(bad)]) == 1
    assert "config error" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "absent.yaml")]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["run", "--replicates", "many"])
    assert exc.value.code == 1
    with pytest.raises(SystemExit) as exc:
        main([])
    assert exc.value.code == 1


def test_runtime_errors_exit_2(tmp_path, capsys):
    assert main(["metrics", str(tmp_path)]) == 2
    assert main(["report", str(tmp_path / "nothing.json")]) == 2
    assert "error" in capsys.readouterr().err


def test_seed_override_changes_results(cfg_path, run_dir, tmp_path):
    out = tmp_path / "other"
    assert main(["run", "--config", str(cfg_path), "--seed", "99", "--output-dir", str(out)]) == 0
    a = json.loads((run_dir / "metrics.json").read_text())
    b = json.loads((out / "metrics.json").read_text())
    assert a["config_digest"] != b["config_digest"]
