"""Quantum-transmission session and the sifting dialogue.

One session is: the sender draws two sign bits per event and prepares a
coherent state whose S2 and S3 displacements are (+/-)alpha, the lossy channel
scales amplitudes by sqrt(eta), the receiver picks one Stokes axis per event
at random and gets a Gaussian outcome centred on the surviving displacement.
The receiver keeps outcomes with |x| >= threshold, announces their event ids
and measured axes over the classical channel, and the sender acknowledges.
Both sides then hold the same ordered bit string: the receiver's bit is the
outcome sign, the sender's bit is the sign she modulated on the announced
axis.  Key bits never travel on the wire; only event ids and axis labels do.

The vectorized run_session and the per-event helpers consume random draws in
the same canonical order (sign pairs row by row, then one basis draw and one
noise draw per event), so single-event unit checks reproduce vectorized runs
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import Basis, ChannelParams, MeasurementOutcome, Signal, apply_loss, eve_tap, measure, measurement_sigma
from .rng import ALICE_SIGNS, BOB_BASIS, BOB_NOISE, EVE_NOISE, RngStream, derive_seed
from .wire import (
    MessageType,
    Transcript,
    build_basis_announcement,
    build_sift_response,
    loopback_pair,
    parse_basis_announcement,
    parse_sift_response,
)


class ProtocolError(RuntimeError):
    """A peer received a malformed or inconsistent sifting message."""


class SessionAborted(RuntimeError):
    """Session could not produce key material; partial transcript attached."""

    def __init__(self, message: str, transcript: Transcript):
        super().__init__(message)
        self.transcript = transcript


@dataclass(frozen=True)
class SessionParams:
    """Physical and protocol settings for one simulated session.

    threshold is in outcome units (the measured variable x); 0.0 disables
    post-selection.
    """

    alpha: float
    eta: float
    excess_noise: float
    threshold: float
    n_events: int
    seed: int
    simulate_eve: bool = False

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        ChannelParams(eta=self.eta, excess_noise=self.excess_noise)  # reuse range checks
        if self.threshold < 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")
        if self.n_events < 1:
            raise ValueError(f"n_events must be >= 1, got {self.n_events}")
        if self.seed < 0:
            raise ValueError(f"seed must be >= 0, got {self.seed}")

    @property
    def channel(self) -> ChannelParams:
        return ChannelParams(eta=self.eta, excess_noise=self.excess_noise)

    @property
    def sigma(self) -> float:
        return measurement_sigma(self.excess_noise)


@dataclass(frozen=True)
class EventRecord:
    """One event as seen by both simulated parties (test/debug accessor)."""

    event_id: int
    sign_s2: int
    sign_s3: int
    basis: Basis
    x: float
    selected: bool


@dataclass
class SessionResult:
    params: SessionParams
    alice_signs: np.ndarray  # (n, 2) sign bits, column 0 -> S2, column 1 -> S3
    bases: np.ndarray  # (n,) 0 -> S2, 1 -> S3
    xs: np.ndarray  # (n,) receiver outcomes
    selected_ids: np.ndarray  # strictly increasing event ids passing the threshold
    alice_bits: np.ndarray  # sifted sender bits, uint8
    bob_bits: np.ndarray  # sifted receiver bits, uint8
    transcript: Transcript
    eve_xs: np.ndarray | None = None  # tap outcomes on the announced axes
    eve_bits: np.ndarray | None = None  # sifted eavesdropper bits, uint8

    @property
    def n_events(self) -> int:
        return self.params.n_events

    @property
    def n_selected(self) -> int:
        return int(self.selected_ids.size)

    @property
    def yield_fraction(self) -> float:
        return self.n_selected / self.n_events

    def pre_selection_error(self) -> float:
        """Sign disagreement over all events, before the threshold cut."""
        alice_all = self.alice_signs[np.arange(self.n_events), self.bases]
        bob_all = (self.xs > 0).astype(np.uint8)
        return float(np.mean(alice_all != bob_all))

    def post_selection_error(self) -> float:
        if self.n_selected == 0:
            raise ValueError("no selected events")
        return float(np.mean(self.alice_bits != self.bob_bits))

    def eve_error(self) -> float:
        if self.eve_bits is None:
            raise ValueError("session ran without the eavesdropper model")
        if self.n_selected == 0:
            raise ValueError("no selected events")
        return float(np.mean(self.eve_bits != self.alice_bits))

    def event(self, event_id: int) -> EventRecord:
        sign2, sign3 = self.alice_signs[event_id]
        return EventRecord(
            event_id=event_id,
            sign_s2=int(sign2),
            sign_s3=int(sign3),
            basis=Basis.S2 if self.bases[event_id] == 0 else Basis.S3,
            x=float(self.xs[event_id]),
            selected=bool(np.isin(event_id, self.selected_ids)),
        )


# ---------------------------------------------------------------------------
# per-event helpers (canonical draw order shared with run_session)
# ---------------------------------------------------------------------------


def alice_prepare(alpha: float, rng: RngStream) -> tuple[Signal, int, int]:
    """Draw one sign pair and build the modulated state."""
    pair = rng.integers(0, 2, size=2)
    sign2, sign3 = int(pair[0]), int(pair[1])
    return (
        Signal(alpha * (2 * sign2 - 1), alpha * (2 * sign3 - 1)),
        sign2,
        sign3,
    )


def bob_measure_event(
    received: Signal,
    excess_noise: float,
    basis_rng: RngStream,
    noise_rng: RngStream,
) -> MeasurementOutcome:
    """Draw one basis, then one outcome, from separate streams."""
    basis = Basis(int(basis_rng.integers(0, 2)) + 2)
    return measure(received, basis, excess_noise, noise_rng)


# ---------------------------------------------------------------------------
# sifting dialogue
# ---------------------------------------------------------------------------


def alice_sift_bits(
    signs: np.ndarray, event_ids: np.ndarray, basis_codes: np.ndarray
) -> np.ndarray:
    """Validate an announcement and extract the sender's matching sign bits."""
    n = signs.shape[0]
    ids = np.asarray(event_ids)
    codes = np.asarray(basis_codes)
    if ids.size != codes.size:
        raise ProtocolError("announcement id/basis arrays differ in length")
    if ids.size:
        if ids.min() < 0 or ids.max() >= n:
            raise ProtocolError("announced event id out of range")
        if np.any(np.diff(ids) <= 0):
            raise ProtocolError("announced event ids must be strictly increasing")
    if not np.all((codes == int(Basis.S2)) | (codes == int(Basis.S3))):
        raise ProtocolError("announcement carries an unknown basis code")
    columns = codes.astype(np.int64) - int(Basis.S2)
    return signs[ids, columns].astype(np.uint8)


def run_sift_exchange(
    signs: np.ndarray,
    selected_ids: np.ndarray,
    selected_codes: np.ndarray,
    transcript: Transcript,
) -> np.ndarray:
    """Run the announcement/acknowledgement round trip over a loopback link."""
    alice_link, bob_link = loopback_pair(transcript)
    bob_link.send(build_basis_announcement(selected_ids, selected_codes))
    got_ids, got_codes = parse_basis_announcement(
        alice_link.recv(MessageType.BASIS_ANNOUNCEMENT)
    )
    alice_bits = alice_sift_bits(signs, got_ids, got_codes)
    alice_link.send(build_sift_response(int(got_ids.size)))
    acked = parse_sift_response(bob_link.recv(MessageType.SIFT_RESPONSE))
    if acked != selected_ids.size:
        raise ProtocolError(
            f"acknowledged count {acked} != announced count {selected_ids.size}"
        )
    return alice_bits


def replay_alice_bits(transcript: Transcript, signs: np.ndarray) -> np.ndarray:
    """Re-derive the sender's sifted bits from a recorded transcript."""
    announcements = transcript.frames(MessageType.BASIS_ANNOUNCEMENT)
    if len(announcements) != 1:
        raise ProtocolError(
            f"transcript holds {len(announcements)} announcements, expected 1"
        )
    ids, codes = parse_basis_announcement(announcements[0])
    return alice_sift_bits(signs, ids, codes)


# ---------------------------------------------------------------------------
# full session
# ---------------------------------------------------------------------------


def run_session(params: SessionParams, transcript: Transcript | None = None) -> SessionResult:
    """Simulate one full transmission plus sifting, vectorized over events."""
    n = params.n_events
    transcript = transcript if transcript is not None else Transcript()

    alice_rng = RngStream(derive_seed(params.seed, ALICE_SIGNS))
    basis_rng = RngStream(derive_seed(params.seed, BOB_BASIS))
    noise_rng = RngStream(derive_seed(params.seed, BOB_NOISE))

    signs = alice_rng.integers(0, 2, size=(n, 2)).astype(np.uint8)
    bases = basis_rng.integers(0, 2, size=n).astype(np.uint8)

    # amplitude surviving to the receiver on the measured axis
    amp_bob = params.alpha * np.sqrt(params.eta)
    signs_measured = signs[np.arange(n), bases]
    means = amp_bob * (2.0 * signs_measured - 1.0)
    xs = means + noise_rng.normal(0.0, params.sigma, size=n)

    selected = np.abs(xs) >= params.threshold
    selected &= xs != 0.0  # a zero outcome carries no sign
    selected_ids = np.flatnonzero(selected)
    if selected_ids.size == 0:
        raise SessionAborted(
            f"no events passed the threshold {params.threshold}", transcript
        )

    selected_codes = (bases[selected_ids] + 2).astype(np.uint8)
    alice_bits = run_sift_exchange(signs, selected_ids, selected_codes, transcript)
    bob_bits = (xs[selected_ids] > 0).astype(np.uint8)

    eve_xs = eve_bits = None
    if params.simulate_eve:
        # the tap stores the beam and reads the announced axis, vacuum limited
        eve_rng = RngStream(derive_seed(params.seed, EVE_NOISE))
        amp_eve = params.alpha * np.sqrt(1.0 - params.eta)
        eve_means = amp_eve * (2.0 * signs_measured - 1.0)
        eve_xs = eve_means + eve_rng.normal(0.0, measurement_sigma(0.0), size=n)
        eve_bits = (eve_xs[selected_ids] > 0).astype(np.uint8)

    return SessionResult(
        params=params,
        alice_signs=signs,
        bases=bases,
        xs=xs,
        selected_ids=selected_ids,
        alice_bits=alice_bits,
        bob_bits=bob_bits,
        transcript=transcript,
        eve_xs=eve_xs,
        eve_bits=eve_bits,
    )
