"""Coherent-polarization-state QKD: simulator and key-distillation toolkit.

Subpackages map onto the pipeline stages:

- ``fock``       truncated two-mode Fock algebra backing the operator checks
- ``channel``    Gaussian signal/loss/measurement model and the eavesdropper tap
- ``postselect`` mutual information, threshold solving, selection statistics
- ``wire``       framed two-party messages, loopback transport, transcripts
- ``protocol``   prepare/measure peers, sifting, seeded sessions
- ``cascade``    interactive parity-exchange error correction with a leakage ledger
- ``privacy``    Toeplitz-hash privacy amplification
- ``pipeline``   end-to-end run: session -> reconcile -> amplify -> report
"""

from .cascade import CascadeConfig, LeakageLedger, cascade_reconcile, choose_block_length
from .channel import Basis, ChannelParams, MeasurementOutcome, Signal, apply_loss, eve_tap, measure
from .config import ConfigError, ExperimentConfig, load_config, parse_config
from .fock import (
    FockCutoff,
    TruncatedState,
    coherent_state,
    overlap,
    signal_overlap,
    stokes_operators,
)
from .pipeline import ExperimentArtifacts, run_experiment, write_artifacts
from .postselect import (
    InfoParams,
    SelectionResult,
    binary_mutual_info,
    eve_info,
    mean_error,
    posterior_error,
    selection_stats,
    solve_threshold,
)
from .privacy import FinalKey, distill, final_key_length, toeplitz_compress
from .protocol import SessionParams, SessionResult, run_session
from .rng import RngStream

__all__ = [
    "Basis",
    "CascadeConfig",
    "ChannelParams",
    "ConfigError",
    "ExperimentArtifacts",
    "ExperimentConfig",
    "FinalKey",
    "FockCutoff",
    "InfoParams",
    "LeakageLedger",
    "MeasurementOutcome",
    "RngStream",
    "SelectionResult",
    "SessionParams",
    "SessionResult",
    "Signal",
    "TruncatedState",
    "apply_loss",
    "binary_mutual_info",
    "cascade_reconcile",
    "choose_block_length",
    "coherent_state",
    "distill",
    "eve_info",
    "eve_tap",
    "final_key_length",
    "load_config",
    "mean_error",
    "measure",
    "overlap",
    "parse_config",
    "posterior_error",
    "run_experiment",
    "run_session",
    "selection_stats",
    "signal_overlap",
    "solve_threshold",
    "stokes_operators",
    "toeplitz_compress",
    "write_artifacts",
]

__version__ = "0.1.0"
