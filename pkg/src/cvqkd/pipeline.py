"""End-to-end experiment: session, correction, compression, artifacts.

run_experiment wires the stages together; write_artifacts serializes the
results deterministically (byte-identical across runs with equal configs,
regardless of where the output directory lives).
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cascade import CascadeConfig, ReconciliationError, ReconciliationResult, cascade_reconcile
from .config import ExperimentConfig
from .postselect import InfoParams, selection_stats, solve_threshold
from .privacy import FinalKey, distill, final_key_length
from .protocol import SessionParams, SessionResult, run_session
from .reporting import SessionReport, build_report
from .rng import COMPRESS_SEED, RngStream, derive_seed
from .wire import (
    MessageType,
    Transcript,
    build_compress_seed,
    build_hash_verdict,
    loopback_pair,
    parse_hash_check,
    parse_hash_verdict,
)


@dataclass
class ExperimentArtifacts:
    config: ExperimentConfig
    threshold_outcome: float
    session: SessionResult
    reconciliation: ReconciliationResult | None
    final_key: FinalKey | None
    report: SessionReport
    transcript: Transcript


def resolve_threshold(config: ExperimentConfig) -> float:
    """The post-selection threshold in outcome units, solving if requested."""
    info = InfoParams(alpha=config.alpha, eta=config.eta, sigma2=0.5 + config.excess_noise)
    if config.threshold == "auto":
        return solve_threshold(info)
    t = float(config.threshold)
    if config.threshold_units == "outcome":
        return t
    if config.threshold_units == "alpha":
        return t * config.alpha
    return t * info.receiver_amplitude  # alpha_received


def _announce_compress_seed(transcript: Transcript, seed: int, output_length: int) -> None:
    """Public seed announcement for the compression matrix, acknowledged."""
    alice_link, bob_link = loopback_pair(transcript)
    alice_link.send(build_compress_seed(seed, output_length))
    _, (got_seed, got_length) = parse_hash_check(bob_link.recv(MessageType.HASH_CHECK))
    bob_link.send(build_hash_verdict(got_seed == seed and got_length == output_length))
    if not parse_hash_verdict(alice_link.recv(MessageType.HASH_VERDICT)):
        raise RuntimeError("compression seed acknowledgement failed")


def run_experiment(config: ExperimentConfig) -> ExperimentArtifacts:
    """Simulate one full key exchange under the given configuration.

    Raises SessionAborted when nothing survives post-selection.  A failed
    reconciliation is reported, not raised: the artifacts carry
    reconciliation=None and an empty final key.
    """
    threshold = resolve_threshold(config)
    params = SessionParams(
        alpha=config.alpha,
        eta=config.eta,
        excess_noise=config.excess_noise,
        threshold=threshold,
        n_events=config.n_events,
        seed=config.seed,
        simulate_eve=config.simulate_eve,
    )
    transcript = Transcript()
    session = run_session(params, transcript)

    info = InfoParams(alpha=config.alpha, eta=config.eta, sigma2=0.5 + config.excess_noise)
    stats = selection_stats(info, threshold)
    cascade_cfg = CascadeConfig(
        seed=config.seed,
        passes=config.cascade_passes,
        initial_block=config.cascade_block,
        design_error_rate=max(stats.post_error, 1e-6),
        recovery_passes=config.cascade_recovery_passes,
    )

    recon: ReconciliationResult | None
    final_key: FinalKey | None = None
    try:
        recon = cascade_reconcile(session.alice_bits, session.bob_bits, cascade_cfg, transcript)
    except ReconciliationError:
        recon = None

    if recon is not None and np.array_equal(recon.corrected_bits, session.alice_bits):
        n_final = final_key_length(
            session.n_selected,
            recon.ledger.total,
            max(0.0, stats.advantage),
            config.safety_margin,
        )
        if n_final > 0:
            compress_rng = RngStream(derive_seed(config.seed, COMPRESS_SEED))
            pa_seed = int(compress_rng.integers(0, 2**63))
            _announce_compress_seed(transcript, pa_seed, n_final)
            final_key = distill(recon.corrected_bits, pa_seed, n_final)
            sender_key = distill(session.alice_bits, pa_seed, n_final)
            if not np.array_equal(final_key.bits, sender_key.bits):
                raise RuntimeError("compressed keys disagree despite verified input")
    elif recon is not None:
        # digest collision let unequal keys through; treat as a failed run
        recon = None

    report = build_report(config, threshold, session, recon, final_key)
    return ExperimentArtifacts(
        config=config,
        threshold_outcome=threshold,
        session=session,
        reconciliation=recon,
        final_key=final_key,
        report=report,
        transcript=transcript,
    )


def _events_csv_lines(session: SessionResult):
    has_eve = session.eve_xs is not None
    yield "event_id,basis,x,selected" + (",eve_x" if has_eve else "")
    selected = np.zeros(session.n_events, dtype=bool)
    selected[session.selected_ids] = True
    basis_codes = session.bases + 2
    for start in range(0, session.n_events, 100_000):
        stop = min(start + 100_000, session.n_events)
        chunk = []
        for i in range(start, stop):
            row = (
                f"{i},{basis_codes[i]},{float(session.xs[i])!r},{int(selected[i])}"
            )
            if has_eve:
                row += f",{float(session.eve_xs[i])!r}"
            chunk.append(row)
        yield "\n".join(chunk)


def write_artifacts(artifacts: ExperimentArtifacts, out_dir: str | Path) -> list[str]:
    """Write the run record; returns the file names written (sorted).

    Contents are a pure function of the configuration: no timestamps,
    hostnames, or absolute paths appear in any artifact.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    (out / "config.json").write_text(artifacts.config.to_json())
    (out / "report.txt").write_text(artifacts.report.to_text() + "\n")
    (out / "report.json").write_text(artifacts.report.to_json())
    (out / "transcript.bin").write_bytes(artifacts.transcript.to_bytes())
    with (out / "events.csv").open("w") as fh:
        for block in _events_csv_lines(artifacts.session):
            fh.write(block)
            fh.write("\n")
    written = ["config.json", "events.csv", "report.json", "report.txt", "transcript.bin"]
    if artifacts.final_key is not None and artifacts.final_key.n_bits:
        (out / "key.bin").write_bytes(artifacts.final_key.to_bytes())
        written.append("key.bin")
    return sorted(written)
