"""Final key sizing and two-universal compression.

The corrected key is compressed with a random binary Toeplitz matrix drawn
from a publicly announced seed.  The surviving length is the per-bit
information advantage applied to whatever the correction dialogue did not
disclose, minus a configurable safety margin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve


def final_key_length(
    n_bits: int,
    disclosed_bits: int,
    advantage: float,
    safety_margin: int = 0,
) -> int:
    """Distillable length: floor((n - disclosed) * advantage) - margin, >= 0."""
    if n_bits < 0 or disclosed_bits < 0:
        raise ValueError("bit counts must be non-negative")
    if not 0.0 <= advantage <= 1.0:
        raise ValueError(f"advantage must be in [0, 1], got {advantage}")
    if safety_margin < 0:
        raise ValueError("safety margin must be non-negative")
    usable = n_bits - disclosed_bits
    if usable <= 0:
        return 0
    return max(0, math.floor(usable * advantage) - safety_margin)


def toeplitz_seed_bits(seed: int, n_in: int, n_out: int) -> np.ndarray:
    """The n_out + n_in - 1 matrix-defining bits for a given public seed."""
    gen = np.random.default_rng(np.random.SeedSequence(int(seed)))
    return gen.integers(0, 2, n_out + n_in - 1, dtype=np.uint8)


def toeplitz_compress(bits: np.ndarray, seed: int, output_length: int) -> np.ndarray:
    """Multiply by the seeded binary Toeplitz matrix, mod 2.

    Row i of the matrix is s[i + n - 1 - j] for j in 0..n-1, where s is the
    seed bit string; the product is evaluated as one convolution.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if bits.ndim != 1:
        raise ValueError("input key must be a 1-d bit array")
    n = bits.size
    m = int(output_length)
    if m < 0:
        raise ValueError("output length must be non-negative")
    if m == 0:
        return np.empty(0, dtype=np.uint8)
    if m > n:
        raise ValueError(f"cannot expand {n} bits to {m}")
    s = toeplitz_seed_bits(seed, n, m)
    counts = fftconvolve(s.astype(np.float64), bits.astype(np.float64))
    # counts are integers <= n, far below float64's exact range
    return (np.rint(counts[n - 1 : n - 1 + m]).astype(np.int64) & 1).astype(np.uint8)


@dataclass(frozen=True)
class FinalKey:
    bits: np.ndarray
    compress_seed: int

    @property
    def n_bits(self) -> int:
        return int(self.bits.size)

    def to_bytes(self) -> bytes:
        return np.packbits(self.bits).tobytes() if self.bits.size else b""

    def hex(self) -> str:
        return self.to_bytes().hex()


def distill(bits: np.ndarray, seed: int, output_length: int) -> FinalKey:
    return FinalKey(toeplitz_compress(bits, seed, output_length), seed)
