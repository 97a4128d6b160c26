"""Gaussian signal, lossy channel, beam-splitter tap, and sign measurement.

A prepared event is a pair of signed amplitudes on the two modulation axes.
Loss scales amplitudes by sqrt(eta); the eavesdropper's tap gets the
complementary sqrt(1 - eta), so power is conserved exactly. A measurement
of one axis returns the signed amplitude plus Gaussian noise of variance
0.5 (vacuum) + excess_noise, in the same outcome units the post-selection
formulas use.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from math import isfinite, sqrt

import numpy as np

from .postselect import VACUUM_VARIANCE
from .rng import DETECTOR_NOISE, DETECTOR_SIGNS, RngStream

__all__ = [
    "Basis",
    "ChannelParams",
    "MeasurementOutcome",
    "Signal",
    "apply_loss",
    "dual_detector_experiment",
    "dual_detector_samples",
    "eve_tap",
    "measure",
]


class Basis(IntEnum):
    """Measured polarization axis; values double as wire codes."""

    S2 = 2
    S3 = 3


@dataclass(frozen=True)
class Signal:
    """Signed modulation amplitudes on the two axes for one event."""

    s2_amp: float
    s3_amp: float

    def __post_init__(self) -> None:
        if not (isfinite(self.s2_amp) and isfinite(self.s3_amp)):
            raise ValueError("amplitudes must be finite")

    def amplitude(self, basis: Basis) -> float:
        return self.s2_amp if basis == Basis.S2 else self.s3_amp


@dataclass(frozen=True)
class ChannelParams:
    """Transmission eta in (0, 1] and non-negative excess measurement noise."""

    eta: float
    excess_noise: float = 0.0

    def __post_init__(self) -> None:
        if not (0 < self.eta <= 1):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if self.excess_noise < 0:
            raise ValueError(f"excess_noise must be >= 0, got {self.excess_noise}")


@dataclass(frozen=True)
class MeasurementOutcome:
    basis: Basis
    x: float


def apply_loss(sig: Signal, ch: ChannelParams) -> Signal:
    """Receiver's share after the lossy channel: amplitudes scale by sqrt(eta)."""
    root = sqrt(ch.eta)
    return Signal(sig.s2_amp * root, sig.s3_amp * root)


def eve_tap(sig: Signal, ch: ChannelParams) -> Signal:
    """Eavesdropper's beam-splitter share: amplitudes scale by sqrt(1 - eta).

    Together with apply_loss this conserves power exactly:
    eta + (1 - eta) = 1 on every event.
    """
    root = sqrt(1.0 - ch.eta)
    return Signal(sig.s2_amp * root, sig.s3_amp * root)


def measurement_sigma(excess_noise: float = 0.0) -> float:
    if excess_noise < 0:
        raise ValueError(f"excess_noise must be >= 0, got {excess_noise}")
    return sqrt(VACUUM_VARIANCE + excess_noise)


def measure(sig: Signal, basis: Basis, excess_noise: float, rng: RngStream) -> MeasurementOutcome:
    """One sign measurement: x ~ Normal(signed amplitude on the axis, 0.5 + excess)."""
    sigma = measurement_sigma(excess_noise)
    x = float(rng.normal(sig.amplitude(basis), sigma))
    return MeasurementOutcome(basis=basis, x=x)


def dual_detector_samples(
    sig: Signal, n_events: int, modulated: bool, rng: RngStream
) -> tuple[np.ndarray, np.ndarray]:
    """Outcomes of two detectors behind a 50:50 split of one axis.

    Each detector sees amplitude |s2_amp|/sqrt(2) with a per-event shared
    random sign (when modulated; zero amplitude otherwise) plus independent
    vacuum noise.
    """
    if n_events < 2:
        raise ValueError(f"need at least 2 events to correlate, got {n_events}")
    sign_rng = rng.spawn(DETECTOR_SIGNS)
    noise_rng = rng.spawn(DETECTOR_NOISE)

    amp = abs(sig.s2_amp) / sqrt(2.0)
    if modulated:
        signs = sign_rng.integers(0, 2, size=n_events).astype(float) * 2.0 - 1.0
        shared = signs * amp
    else:
        shared = np.zeros(n_events)
    sigma = measurement_sigma(0.0)
    det1 = shared + noise_rng.normal(0.0, sigma, size=n_events)
    det2 = shared + noise_rng.normal(0.0, sigma, size=n_events)
    return det1, det2


def dual_detector_experiment(
    sig: Signal, n_events: int, modulated: bool, rng: RngStream
) -> float:
    """Pearson correlation of the dual-detector outcomes.

    Expected: mu^2 / (mu^2 + 0.5) with mu = |s2_amp|/sqrt(2) when modulated;
    zero without modulation.
    """
    det1, det2 = dual_detector_samples(sig, n_events, modulated, rng)
    return float(np.corrcoef(det1, det2)[0, 1])
