import json

import pytest

from cvqkd.cli import main
from cvqkd.config import ExperimentConfig


def test_run_prints_summary_and_exits_zero(capsys):
    code = main(["run", "--events", "3000", "--seed", "11", "--threshold", "0.79"])
    out = capsys.readouterr().out
    assert code == 0
    assert "key distillation run summary" in out
    assert "final key bits" in out


def test_run_writes_artifacts(tmp_path, capsys):
    out_dir = tmp_path / "artifacts"
    code = main(
        [
            "run",
            "--events",
            "2000",
            "--seed",
            "11",
            "--threshold",
            "0.79",
            "--out",
            str(out_dir),
        ]
    )
    assert code == 0
    stdout = capsys.readouterr().out
    for name in ("config.json", "events.csv", "report.json", "report.txt", "transcript.bin"):
        assert (out_dir / name).exists()
        assert f"wrote {name}" in stdout
    payload = json.loads((out_dir / "report.json").read_text())
    assert payload["seed"] == 11


def test_run_config_file_with_override(tmp_path, capsys):
    cfg_path = tmp_path / "exp.json"
    cfg_path.write_text(ExperimentConfig(n_events=1500, seed=5, threshold=0.8).to_json())
    code = main(["run", "--config", str(cfg_path), "--seed", "77"])
    assert code == 0
    assert "seed                        77" in capsys.readouterr().out


def test_run_rejects_bad_config_value(capsys):
    code = main(["run", "--events", "0"])
    assert code == 2
    assert "config error" in capsys.readouterr().err


def test_run_rejects_eta_loss_conflict():
    with pytest.raises(SystemExit) as info:
        main(["run", "--eta", "0.8", "--loss", "0.2"])
    assert info.value.code == 2


def test_run_aborted_session_exits_one(capsys):
    code = main(["run", "--events", "200", "--threshold", "50", "--seed", "3"])
    assert code == 1
    assert "no events survived post-selection" in capsys.readouterr().out


def test_loss_flag_is_eta_complement(capsys):
    code = main(["run", "--events", "2000", "--seed", "4", "--loss", "0.21", "--threshold", "0.79"])
    assert code == 0
    assert "transmission / loss         0.79 / 0.21" in capsys.readouterr().out


def test_scan_table_shape(capsys):
    code = main(["scan", "--steps", "5", "--loss-min", "0.1", "--loss-max", "0.6"])
    out = capsys.readouterr().out
    assert code == 0
    lines = [line for line in out.splitlines() if line.strip()]
    assert len(lines) == 2 + 5  # banner, header, rows
    assert "secure_frac" in lines[1]


def test_scan_rejects_bad_range(capsys):
    assert main(["scan", "--loss-min", "0.9", "--loss-max", "0.2"]) == 2
    assert main(["scan", "--steps", "0"]) == 2
    capsys.readouterr()


def test_scatter_qfunction(tmp_path, capsys):
    out = tmp_path / "q.csv"
    code = main(["scatter", "--mode", "qfunction", "--events", "40", "--out", str(out)])
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "s2,s3"
    assert len(lines) == 41
    assert "qfunction scatter: 40 events" in capsys.readouterr().out


def test_scatter_dual_detector(tmp_path, capsys):
    out = tmp_path / "d.csv"
    code = main(
        ["scatter", "--mode", "dual-detector", "--events", "5000", "--out", str(out)]
    )
    assert code == 0
    assert out.read_text().splitlines()[0] == "detector_1,detector_2"
    assert "correlation" in capsys.readouterr().out


def test_scatter_needs_two_events(capsys):
    assert main(["scatter", "--mode", "qfunction", "--events", "1", "--out", "x.csv"]) == 2
    capsys.readouterr()


def test_verify_passes_by_default(capsys):
    code = main(["verify"])
    out = capsys.readouterr().out
    assert code == 0
    assert "7/7 checks passed" in out
    assert "FAIL" not in out


def test_verify_small_cutoff_fails(capsys):
    code = main(["verify", "--n-max", "3"])
    out = capsys.readouterr().out
    assert code == 1
    assert "FAIL" in out


def test_verify_oversized_amplitude_fails(capsys):
    code = main(["verify", "--n-max", "8", "--amplitude", "2.5"])
    out = capsys.readouterr().out
    assert code == 1
    assert "truncation adequacy" in out
