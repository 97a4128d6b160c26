"""Truncated two-mode Fock-space algebra for polarization observables.

This is the verification core for the operator identities the Gaussian
channel model leans on. Everything lives in the tensor product of two
photon-number-truncated oscillators (the x and y polarization modes):

- coherent and number states, overlaps computed as plain inner products,
- the four polarization observables built from mode operators,
    S0 = ax'ax + ay'ay      S1 = ax'ax - ay'ay
    S2 = ax'ay + ay'ax      S3 = i(ay'ax - ax'ay)
- their commutation relations [S_k, S_l] = 2i eps_klm S_m (k,l,m in 1..3),
- the uncertainty product V_k V_l >= |eps_klm <S_m>|^2,
- the coherent-state shot-noise identity V(S2) = V(S3) = <S0> that fixes
  the variance floor of the Gaussian measurement model.

Matrices are dense complex arrays; dimensions stay tiny (n_max <= ~16),
so no sparsity is needed. Truncation artifacts live on the top photon
levels only, hence identity checks restrict to total photon number
<= n_max - 2, where a product of two mode-transfer operators cannot
touch the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from math import exp, factorial, sqrt

import numpy as np

__all__ = [
    "FockCutoff",
    "ModeOperator",
    "TruncatedState",
    "TruncationError",
    "annihilation",
    "creation",
    "coherent_state",
    "commutator_check",
    "expectation",
    "fock_state",
    "levi_civita",
    "overlap",
    "shot_noise_gap",
    "signal_overlap",
    "stokes_operators",
    "total_number",
    "uncertainty_check",
    "variance",
]


class TruncationError(ValueError):
    """Amplitude too large for the photon-number cutoff to represent faithfully.

    Carries the probability mass of the discarded tail so callers can report
    how bad the request was.
    """

    def __init__(self, message: str, tail_mass: float):
        super().__init__(message)
        self.tail_mass = tail_mass


@dataclass(frozen=True)
class FockCutoff:
    """Per-mode photon-number cutoff; each mode keeps levels 0..n_max."""

    n_max: int

    def __post_init__(self) -> None:
        if not isinstance(self.n_max, int) or self.n_max < 1:
            raise ValueError(f"n_max must be an integer >= 1, got {self.n_max!r}")

    @property
    def mode_dim(self) -> int:
        return self.n_max + 1

    @property
    def dim(self) -> int:
        """Dimension of the two-mode space."""
        return self.mode_dim**2


@dataclass(frozen=True)
class ModeOperator:
    """A labeled dense operator on the two-mode truncated space."""

    matrix: np.ndarray
    label: str

    @property
    def dagger(self) -> "ModeOperator":
        return ModeOperator(self.matrix.conj().T, self.label + "'")

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


@dataclass(frozen=True)
class TruncatedState:
    """State vector over the two-mode basis |n_x, n_y>.

    Flattening convention: index = n_x * (n_max + 1) + n_y, matching
    np.kron(x_vector, y_vector). Amplitudes are stored exactly as built;
    a truncated coherent state keeps its norm deficit rather than being
    silently renormalized (expectation helpers divide by the norm).
    """

    amplitudes: np.ndarray
    cutoff: FockCutoff

    def __post_init__(self) -> None:
        if self.amplitudes.shape != (self.cutoff.dim,):
            raise ValueError(
                f"amplitude vector has shape {self.amplitudes.shape}, "
                f"expected ({self.cutoff.dim},)"
            )

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def norm_deficit(self) -> float:
        """Probability mass lost to truncation: 1 - <psi|psi>."""
        return 1.0 - float(np.vdot(self.amplitudes, self.amplitudes).real)


def _mode_annihilation(dim: int) -> np.ndarray:
    # a|n> = sqrt(n)|n-1>
    mat = np.zeros((dim, dim), dtype=complex)
    for n in range(1, dim):
        mat[n - 1, n] = sqrt(n)
    return mat


@lru_cache(maxsize=None)
def _mode_matrices(n_max: int) -> tuple[np.ndarray, np.ndarray]:
    d = n_max + 1
    a = _mode_annihilation(d)
    eye = np.eye(d, dtype=complex)
    ax = np.kron(a, eye)  # |n_x> factor first
    ay = np.kron(eye, a)
    return ax, ay


def annihilation(mode: str, cutoff: FockCutoff) -> ModeOperator:
    ax, ay = _mode_matrices(cutoff.n_max)
    if mode == "x":
        return ModeOperator(ax, "a_x")
    if mode == "y":
        return ModeOperator(ay, "a_y")
    raise ValueError(f"mode must be 'x' or 'y', got {mode!r}")


def creation(mode: str, cutoff: FockCutoff) -> ModeOperator:
    return annihilation(mode, cutoff).dagger


def total_number(cutoff: FockCutoff) -> ModeOperator:
    ax, ay = _mode_matrices(cutoff.n_max)
    return ModeOperator(ax.conj().T @ ax + ay.conj().T @ ay, "n")


@lru_cache(maxsize=None)
def _stokes_matrices(n_max: int) -> tuple[np.ndarray, ...]:
    ax, ay = _mode_matrices(n_max)
    axd, ayd = ax.conj().T, ay.conj().T
    s0 = axd @ ax + ayd @ ay
    s1 = axd @ ax - ayd @ ay
    s2 = axd @ ay + ayd @ ax
    s3 = 1j * (ayd @ ax - axd @ ay)
    return s0, s1, s2, s3


def stokes_operators(cutoff: FockCutoff) -> tuple[ModeOperator, ModeOperator, ModeOperator, ModeOperator]:
    """The four polarization observables S0..S3 at the given cutoff.

    All four are Hermitian by construction; ``hermiticity_defect`` stays at
    float rounding (<= 1e-12) for any sane cutoff.
    """
    mats = _stokes_matrices(cutoff.n_max)
    return tuple(ModeOperator(m, f"S{k}") for k, m in enumerate(mats))  # type: ignore[return-value]


def levi_civita(k: int, l: int, m: int) -> int:
    """Structure constant eps_klm on axes 1..3."""
    perm = (k, l, m)
    if sorted(perm) != [1, 2, 3]:
        return 0
    even = perm in ((1, 2, 3), (2, 3, 1), (3, 1, 2))
    return 1 if even else -1


def _third_axis(k: int, l: int) -> int:
    if k == l or k not in (1, 2, 3) or l not in (1, 2, 3):
        raise ValueError(f"axes must be distinct and in 1..3, got k={k}, l={l}")
    return 6 - k - l


def _coherent_coefficients(alpha: complex, n_max: int) -> np.ndarray:
    lam = abs(alpha) ** 2
    if lam > n_max / 4.0:
        tail = _poisson_tail(lam, n_max)
        raise TruncationError(
            f"|alpha|^2 = {lam:.4g} exceeds the adequacy bound n_max/4 = {n_max / 4:.4g}; "
            f"discarded tail mass = {tail:.3g}",
            tail_mass=tail,
        )
    coeffs = np.array(
        [alpha**n / sqrt(factorial(n)) for n in range(n_max + 1)], dtype=complex
    )
    return exp(-lam / 2.0) * coeffs


def _poisson_tail(lam: float, n_max: int) -> float:
    kept = sum(lam**n / factorial(n) for n in range(n_max + 1))
    return max(0.0, 1.0 - exp(-lam) * kept)


def coherent_state(alpha_x: complex, alpha_y: complex, cutoff: FockCutoff) -> TruncatedState:
    """Two-mode coherent state |alpha_x> (x) |alpha_y>, truncated per mode.

    Coefficients follow exp(-|a|^2/2) a^n / sqrt(n!). Raises TruncationError
    (with the computed tail mass) if either amplitude violates the adequacy
    heuristic |alpha|^2 <= n_max/4.
    """
    cx = _coherent_coefficients(alpha_x, cutoff.n_max)
    cy = _coherent_coefficients(alpha_y, cutoff.n_max)
    return TruncatedState(np.kron(cx, cy), cutoff)


def fock_state(n_x: int, n_y: int, cutoff: FockCutoff) -> TruncatedState:
    """Number state |n_x, n_y>."""
    if not (0 <= n_x <= cutoff.n_max and 0 <= n_y <= cutoff.n_max):
        raise ValueError(f"occupations must lie in 0..{cutoff.n_max}")
    vec = np.zeros(cutoff.dim, dtype=complex)
    vec[n_x * cutoff.mode_dim + n_y] = 1.0
    return TruncatedState(vec, cutoff)


def overlap(a: TruncatedState, b: TruncatedState) -> complex:
    """Inner product <a|b>; both states must share the cutoff."""
    if a.cutoff != b.cutoff:
        raise ValueError(
            f"cutoff mismatch: {a.cutoff.n_max} vs {b.cutoff.n_max}"
        )
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def signal_overlap(alpha: float) -> float:
    """Closed-form overlap of the two opposite-sign signal states.

    <alpha|-alpha> = exp(-2 |alpha|^2) for coherent states on one axis;
    this is the non-orthogonality that post-selection has to fight.
    """
    return exp(-2.0 * abs(alpha) ** 2)


def expectation(state: TruncatedState, op: ModeOperator) -> complex:
    """<psi|O|psi> / <psi|psi>; norm deficit is divided out, not hidden."""
    nrm2 = float(np.vdot(state.amplitudes, state.amplitudes).real)
    if nrm2 == 0.0:
        raise ValueError("expectation of the zero vector is undefined")
    return complex(np.vdot(state.amplitudes, op.matrix @ state.amplitudes)) / nrm2


def variance(state: TruncatedState, op: ModeOperator) -> float:
    sq = ModeOperator(op.matrix @ op.matrix, op.label + "^2")
    mean = expectation(state, op)
    return float((expectation(state, sq) - mean * mean).real)


def _protected_mask(cutoff: FockCutoff) -> np.ndarray:
    # Total photon number <= n_max - 2: one operator product can move at most
    # two quanta between modes, so these matrix elements carry no boundary
    # artifacts.
    d = cutoff.mode_dim
    idx = np.arange(cutoff.dim)
    return (idx // d + idx % d) <= cutoff.n_max - 2


def commutator_check(k: int, l: int, cutoff: FockCutoff) -> float:
    """Max |[S_k, S_l] - 2i eps_klm S_m| matrix element on the protected subspace.

    Exact algebra makes this zero; on the truncated space it is zero up to
    float rounding as long as rows and columns stay at total photon number
    <= n_max - 2.
    """
    m = _third_axis(k, l)
    eps = levi_civita(k, l, m)
    s = _stokes_matrices(cutoff.n_max)
    comm = s[k] @ s[l] - s[l] @ s[k]
    defect = comm - 2j * eps * s[m]
    mask = _protected_mask(cutoff)
    return float(np.max(np.abs(defect[np.ix_(mask, mask)])))


def uncertainty_check(state: TruncatedState, k: int, l: int) -> tuple[float, float]:
    """(lhs, rhs) of the uncertainty product V_k V_l >= |eps_klm <S_m>|^2.

    Coherent states saturate the bound (all three variances equal <S0>), so
    callers should assert lhs >= rhs - tol rather than strict inequality.
    """
    m = _third_axis(k, l)
    ops = stokes_operators(state.cutoff)
    lhs = variance(state, ops[k]) * variance(state, ops[l])
    mean_m = expectation(state, ops[m])
    rhs = abs(levi_civita(k, l, m) * mean_m) ** 2
    return lhs, rhs


def shot_noise_gap(state: TruncatedState) -> float:
    """Max deviation of V(S2), V(S3) from <S0> on the given state.

    Zero (up to truncation) for coherent states; this identity is what pins
    the Gaussian measurement model's vacuum variance.
    """
    s0, _, s2, s3 = stokes_operators(state.cutoff)
    target = expectation(state, s0).real
    return max(abs(variance(state, s2) - target), abs(variance(state, s3) - target))
