import math

import numpy as np
import pytest

from cvqkd.config import ExperimentConfig
from cvqkd.pipeline import resolve_threshold, run_experiment, write_artifacts
from cvqkd.postselect import InfoParams, solve_threshold
from cvqkd.privacy import final_key_length
from cvqkd.protocol import SessionAborted
from cvqkd.wire import MessageType

T79 = 0.7911468093130068


@pytest.fixture(scope="module")
def small_artifacts():
    return run_experiment(
        ExperimentConfig(threshold=T79, n_events=20_000, seed=27182)
    )


def test_resolve_threshold_auto_matches_solver():
    cfg = ExperimentConfig(seed=1)
    info = InfoParams(alpha=0.6, eta=0.79, sigma2=0.5)
    assert resolve_threshold(cfg) == pytest.approx(solve_threshold(info), abs=1e-12)


def test_resolve_threshold_units():
    assert resolve_threshold(
        ExperimentConfig(threshold=0.8, threshold_units="outcome", seed=1)
    ) == pytest.approx(0.8)
    assert resolve_threshold(
        ExperimentConfig(threshold=2.0, threshold_units="alpha", seed=1)
    ) == pytest.approx(1.2)
    assert resolve_threshold(
        ExperimentConfig(threshold=2.0, threshold_units="alpha_received", seed=1)
    ) == pytest.approx(2.0 * 0.6 * math.sqrt(0.79))


def test_run_experiment_end_to_end(small_artifacts):
    art = small_artifacts
    assert art.reconciliation is not None and art.reconciliation.verified
    np.testing.assert_array_equal(
        art.reconciliation.corrected_bits, art.session.alice_bits
    )
    assert art.final_key is not None
    assert art.final_key.n_bits == final_key_length(
        art.session.n_selected,
        art.reconciliation.ledger.total,
        art.report.advantage_per_event,
        0,
    )
    assert art.report.final_bits == art.final_key.n_bits


def test_transcript_spans_all_stages(small_artifacts):
    types = {f.msg_type for f in small_artifacts.transcript.frames()}
    assert types == {
        MessageType.BASIS_ANNOUNCEMENT,
        MessageType.SIFT_RESPONSE,
        MessageType.CASCADE_PARITY_REQUEST,
        MessageType.CASCADE_PARITY_RESPONSE,
        MessageType.HASH_CHECK,
        MessageType.HASH_VERDICT,
    }


def test_run_experiment_deterministic():
    cfg = ExperimentConfig(threshold=T79, n_events=8_000, seed=555)
    a = run_experiment(cfg)
    b = run_experiment(cfg)
    assert a.report.to_json() == b.report.to_json()
    assert a.transcript.to_bytes() == b.transcript.to_bytes()
    np.testing.assert_array_equal(a.final_key.bits, b.final_key.bits)


def test_safety_margin_shrinks_key():
    base = ExperimentConfig(threshold=T79, n_events=8_000, seed=555)
    trimmed = run_experiment(base.replace(safety_margin=100))
    full = run_experiment(base)
    assert trimmed.final_key.n_bits == full.final_key.n_bits - 100


def test_huge_margin_gives_no_key():
    cfg = ExperimentConfig(threshold=T79, n_events=2_000, seed=555, safety_margin=10**6)
    art = run_experiment(cfg)
    assert art.final_key is None
    assert art.report.final_bits == 0
    assert art.report.reconciliation_ok  # correction itself succeeded


def test_aborting_threshold_propagates():
    with pytest.raises(SessionAborted):
        run_experiment(ExperimentConfig(threshold=40.0, n_events=300, seed=1))


def test_write_artifacts_deterministic_across_directories(tmp_path, small_artifacts):
    dir_a = tmp_path / "deep" / "run_a"
    dir_b = tmp_path / "run_b"
    names_a = write_artifacts(small_artifacts, dir_a)
    names_b = write_artifacts(small_artifacts, dir_b)
    assert names_a == names_b
    assert "key.bin" in names_a
    for name in names_a:
        assert (dir_a / name).read_bytes() == (dir_b / name).read_bytes()


def test_written_artifacts_content(tmp_path, small_artifacts):
    out = tmp_path / "run"
    write_artifacts(small_artifacts, out)
    csv_lines = (out / "events.csv").read_text().splitlines()
    assert csv_lines[0] == "event_id,basis,x,selected"
    assert len(csv_lines) == small_artifacts.config.n_events + 1
    first = csv_lines[1].split(",")
    assert first[0] == "0" and first[1] in {"2", "3"}
    assert float(first[2]) == small_artifacts.session.xs[0]
    from cvqkd.config import parse_config

    assert parse_config((out / "config.json").read_text()) == small_artifacts.config
    assert (out / "transcript.bin").read_bytes() == small_artifacts.transcript.to_bytes()
    key_bytes = (out / "key.bin").read_bytes()
    assert len(key_bytes) == (small_artifacts.final_key.n_bits + 7) // 8


def test_eve_column_present_when_simulated(tmp_path):
    cfg = ExperimentConfig(threshold=T79, n_events=500, seed=12, simulate_eve=True)
    art = run_experiment(cfg)
    out = tmp_path / "run"
    write_artifacts(art, out)
    header = (out / "events.csv").read_text().splitlines()[0]
    assert header == "event_id,basis,x,selected,eve_x"
