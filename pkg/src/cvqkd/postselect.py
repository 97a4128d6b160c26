"""Information rates and post-selection for the binary Gaussian channel.

The receiver sees x ~ Normal(+-alpha_eff, sigma2) with equiprobable signs.
Everything here is closed form or one-dimensional quadrature:

- binary_mutual_info: capacity of the induced binary symmetric channel,
- mean_error: unconditioned sign-error probability,
- posterior_error: error probability given the observed |x|,
- eve_info: the beam-splitting eavesdropper's mean information,
- solve_threshold: smallest |x| cut where the receiver's conditional
  information beats the eavesdropper's,
- selection_stats: yield, post-selected error, and information advantage
  for a given cut.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import erfc, isfinite, log2, sqrt

import numpy as np
from scipy.integrate import quad
from scipy.special import expit

__all__ = [
    "InfoParams",
    "SelectionResult",
    "binary_mutual_info",
    "eve_info",
    "mean_error",
    "posterior_error",
    "selection_stats",
    "solve_threshold",
]

# Var(x) for a single vacuum-noise-limited polarization measurement, in the
# outcome units used throughout (amplitudes carry the signal).
VACUUM_VARIANCE = 0.5


@dataclass(frozen=True)
class InfoParams:
    """Channel parameters for the information-rate formulas.

    alpha is the sender's modulation amplitude, eta the channel transmission,
    sigma2 the measurement variance (vacuum 0.5 plus any excess noise).
    """

    alpha: float
    eta: float
    sigma2: float = VACUUM_VARIANCE

    def __post_init__(self) -> None:
        if not (isfinite(self.alpha) and self.alpha > 0):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")
        if not (0 < self.eta <= 1):
            raise ValueError(f"eta must lie in (0, 1], got {self.eta}")
        if not (isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be positive and finite, got {self.sigma2}")

    @property
    def receiver_amplitude(self) -> float:
        """Amplitude after the lossy channel: alpha * sqrt(eta)."""
        return self.alpha * sqrt(self.eta)

    @property
    def eavesdropper_amplitude(self) -> float:
        """Amplitude on the beam-splitter tap: alpha * sqrt(1 - eta)."""
        return self.alpha * sqrt(1.0 - self.eta)

    @property
    def sigma(self) -> float:
        return sqrt(self.sigma2)


@dataclass(frozen=True)
class SelectionResult:
    """Closed-form statistics of post-selecting on |x| >= threshold."""

    threshold: float
    yield_fraction: float
    post_error: float
    advantage: float          # per-event mean of I_AB(x) over kept events, minus I_AE
    advantage_pooled: float   # 1 - h(post_error) - I_AE


def binary_mutual_info(p_error):
    """Mutual information 1 + p log2 p + (1-p) log2 (1-p) of a BSC.

    Accepts scalars or arrays; p log2 p is taken as 0 at p = 0 and p = 1.
    """
    p = np.asarray(p_error, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("error probability must lie in [0, 1]")
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        result = 1.0 + np.where(p > 0, p * np.log2(p, where=p > 0), 0.0) + np.where(
            q > 0, q * np.log2(q, where=q > 0), 0.0
        )
    result = np.clip(result, 0.0, 1.0)
    return float(result) if np.isscalar(p_error) or result.ndim == 0 else result


def mean_error(alpha_eff: float, sigma2: float = VACUUM_VARIANCE) -> float:
    """P(sign flip) without post-selection: Phi(-alpha_eff / sigma)."""
    if alpha_eff < 0:
        raise ValueError(f"alpha_eff must be >= 0, got {alpha_eff}")
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    return 0.5 * erfc(alpha_eff / sqrt(2.0 * sigma2))


def posterior_error(x, alpha_eff: float, sigma2: float = VACUUM_VARIANCE):
    """P(sign wrong | outcome x) = 1 / (1 + exp(2 alpha_eff |x| / sigma2)).

    Even in x, monotone decreasing in |x|, equals 1/2 at x = 0. Accepts
    scalars or arrays.
    """
    if sigma2 <= 0:
        raise ValueError(f"sigma2 must be positive, got {sigma2}")
    p = expit(-2.0 * alpha_eff * np.abs(x) / sigma2)
    return float(p) if np.isscalar(x) else p


def eve_info(params: InfoParams) -> float:
    """Mean information of the beam-splitter eavesdropper, I_AE.

    Unconditioned on the receiver's post-selection: the tap needs no
    threshold to define its average information.
    """
    return binary_mutual_info(mean_error(params.eavesdropper_amplitude, params.sigma2))


def _receiver_info(x, params: InfoParams):
    return binary_mutual_info(posterior_error(x, params.receiver_amplitude, params.sigma2))


def solve_threshold(params: InfoParams, tol: float = 1e-9) -> float:
    """Smallest |x| cut where kept events carry more information than I_AE.

    Bisection to absolute tolerance ``tol`` on the threshold. Returns 0.0
    when even x = 0 already meets the condition (eta = 1: the tap is empty).
    """
    target = eve_info(params)
    if target >= 1.0:
        raise ValueError("eavesdropper information saturates the channel; no threshold exists")
    if _receiver_info(0.0, params) >= target:
        return 0.0

    lo, hi = 0.0, params.sigma
    for _ in range(200):
        if _receiver_info(hi, params) > target:
            break
        hi *= 2.0
    else:  # pragma: no cover - unreachable for valid params
        raise ValueError("failed to bracket the information crossing")

    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if _receiver_info(mid, params) > target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _gauss_pdf(x: float, mu: float, sigma: float) -> float:
    z = (x - mu) / sigma
    return np.exp(-0.5 * z * z) / (sigma * sqrt(2.0 * np.pi))


def selection_stats(params: InfoParams, threshold: float) -> SelectionResult:
    """Closed-form yield, post-selected error, and advantage at a given cut.

    yield = Phi((mu - t)/sigma) + Phi((-t - mu)/sigma) with mu the receiver
    amplitude; post_error is the wrong-sign share of the kept tail. The
    advantage integrates the per-event receiver information over the kept
    region by quadrature (relative tolerance 1e-6 or better) and subtracts
    I_AE. The pooled variant applies the entropy to the pooled post-selected
    error instead.
    """
    if threshold < 0:
        raise ValueError(f"threshold must be >= 0, got {threshold}")
    mu, sigma, s2 = params.receiver_amplitude, params.sigma, params.sigma2

    def upper_tail(z: float) -> float:
        return 0.5 * erfc(z / sqrt(2.0))

    kept_right = upper_tail((threshold - mu) / sigma)
    kept_left = upper_tail((threshold + mu) / sigma)
    yield_fraction = kept_right + kept_left
    if yield_fraction <= 0.0:
        raise ValueError(f"threshold {threshold} keeps nothing; selection is degenerate")
    post_error = kept_left / yield_fraction

    def integrand(x: float) -> float:
        return _gauss_pdf(x, mu, sigma) * binary_mutual_info(
            posterior_error(x, mu, s2)
        )

    right, _ = quad(integrand, threshold, np.inf, epsabs=1e-13, epsrel=1e-9)
    left, _ = quad(integrand, -np.inf, -threshold, epsabs=1e-13, epsrel=1e-9)
    kept_info = (right + left) / yield_fraction

    i_ae = eve_info(params)
    return SelectionResult(
        threshold=float(threshold),
        yield_fraction=yield_fraction,
        post_error=post_error,
        advantage=kept_info - i_ae,
        advantage_pooled=binary_mutual_info(post_error) - i_ae,
    )
