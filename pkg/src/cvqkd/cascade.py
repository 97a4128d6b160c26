"""Interactive parity-exchange error correction over the framed channel.

The receiver (noisy key) drives: each pass partitions a fresh shuffle of the
bit positions into blocks, fetches the sender's block parities in one bulk
request, and binary-searches every mismatched block for a bit to flip.  A
flip toggles the parity of the containing block in every earlier pass, which
re-queues those blocks and lets later passes clean up errors the earlier
coarse blocks masked.  The sender's bits never change, so her sub-block
parities are cached and each is paid for on the wire at most once; only
parity bits and a closing digest are disclosed, and every disclosed bit is
tallied in a ledger the privacy-amplification stage consumes.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from .rng import CASCADE_SHUFFLE, RngStream, derive_seed
from .wire import (
    KEY_DIGEST_BYTES,
    LoopbackEndpoint,
    MessageType,
    Transcript,
    build_hash_verdict,
    build_key_digest_check,
    build_parity_request,
    build_parity_response,
    loopback_pair,
    parse_hash_check,
    parse_hash_verdict,
    parse_parity_request,
    parse_parity_response,
)

MIN_BLOCK = 4
BLOCK_RATE_CONSTANT = 0.73  # initial block length targets ~0.73 expected errors


class ReconciliationError(RuntimeError):
    """Keys still differ after all correction and recovery passes."""


def choose_block_length(error_rate: float, key_length: int | None = None) -> int:
    """First-pass block length for an expected bit error rate."""
    if not 0.0 < error_rate < 0.5:
        raise ValueError(f"error rate must be in (0, 0.5), got {error_rate}")
    length = int(math.floor(BLOCK_RATE_CONSTANT / error_rate + 0.5))
    length = max(MIN_BLOCK, length)
    if key_length is not None:
        length = min(length, key_length)
    return length


@dataclass(frozen=True)
class CascadeConfig:
    seed: int
    passes: int = 5
    initial_block: int | None = None  # None -> derive from design_error_rate
    design_error_rate: float | None = None
    recovery_passes: int = 2

    def __post_init__(self):
        if self.passes < 1:
            raise ValueError("need at least one pass")
        if self.recovery_passes < 0:
            raise ValueError("recovery_passes must be >= 0")
        if self.initial_block is None and self.design_error_rate is None:
            raise ValueError("give either initial_block or design_error_rate")
        if self.initial_block is not None and self.initial_block < 2:
            raise ValueError("initial_block must be >= 2")

    def first_block_length(self, key_length: int) -> int:
        if self.initial_block is not None:
            return min(self.initial_block, key_length)
        return choose_block_length(self.design_error_rate, key_length)


@dataclass
class LeakageLedger:
    """Wire-disclosure tally; every bit the dialogue reveals lands here."""

    parity_bits_disclosed: int = 0
    per_pass: dict[int, int] = field(default_factory=dict)
    hash_bits_disclosed: int = 0

    def charge_parity(self, pass_index: int, n_bits: int) -> None:
        self.parity_bits_disclosed += n_bits
        self.per_pass[pass_index] = self.per_pass.get(pass_index, 0) + n_bits

    def charge_hash(self, n_bits: int) -> None:
        self.hash_bits_disclosed += n_bits

    @property
    def total(self) -> int:
        return self.parity_bits_disclosed + self.hash_bits_disclosed

    def disclosed_fraction(self, key_length: int) -> float:
        return self.total / key_length


@dataclass
class ReconciliationResult:
    corrected_bits: np.ndarray
    ledger: LeakageLedger
    n_flips: int
    passes_run: int
    recovery_used: int
    verified: bool


def key_digest(bits: np.ndarray) -> bytes:
    return hashlib.blake2b(
        np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes(),
        digest_size=KEY_DIGEST_BYTES,
    ).digest()


def _block_parities(bits: np.ndarray, blocks: list[np.ndarray]) -> np.ndarray:
    flat = np.concatenate(blocks)
    starts = np.concatenate([[0], np.cumsum([len(b) for b in blocks])[:-1]])
    return np.bitwise_xor.reduceat(bits[flat], starts)


@dataclass
class _PassState:
    index: int
    blocks: list[np.ndarray]
    block_of: np.ndarray  # bit position -> owning block within this pass
    alice_parity: np.ndarray
    bob_parity: np.ndarray


class _SenderResponder:
    """The reference-key side: answers parity and digest requests verbatim."""

    def __init__(self, bits: np.ndarray, link: LoopbackEndpoint):
        self.bits = np.asarray(bits, dtype=np.uint8)
        self.link = link

    def serve_parity(self) -> None:
        _, _, blocks = parse_parity_request(self.link.recv(MessageType.CASCADE_PARITY_REQUEST))
        self.link.send(build_parity_response(_block_parities(self.bits, blocks)))

    def serve_digest(self) -> None:
        _, digest = parse_hash_check(self.link.recv(MessageType.HASH_CHECK))
        self.link.send(build_hash_verdict(digest == key_digest(self.bits)))


class _Reconciler:
    """The noisy-key side; owns all correction state."""

    def __init__(
        self,
        bob_bits: np.ndarray,
        config: CascadeConfig,
        link: LoopbackEndpoint,
        responder: _SenderResponder,
        ledger: LeakageLedger,
    ):
        self.bits = np.asarray(bob_bits, dtype=np.uint8).copy()
        self.n = self.bits.size
        self.config = config
        self.link = link
        self.responder = responder
        self.ledger = ledger
        self.shuffle_root = RngStream(derive_seed(config.seed, CASCADE_SHUFFLE))
        self.states: list[_PassState] = []
        self.parity_cache: dict[tuple[int, int, int, int], int] = {}
        self.queue: list[tuple[int, int]] = []
        self.n_flips = 0

    # --- wire helpers ---

    def _ask_parities(self, pass_index: int, shuffle_seed: int, blocks: list[np.ndarray]) -> np.ndarray:
        self.link.send(build_parity_request(pass_index, shuffle_seed, blocks))
        self.responder.serve_parity()
        parities = parse_parity_response(self.link.recv(MessageType.CASCADE_PARITY_RESPONSE))
        self.ledger.charge_parity(pass_index, len(blocks))
        return parities

    def _sender_parity(self, state: _PassState, block_index: int, lo: int, hi: int) -> int:
        """Sender parity of blocks[block_index][lo:hi], cached across searches."""
        key = (state.index, block_index, lo, hi)
        if key not in self.parity_cache:
            segment = state.blocks[block_index][lo:hi]
            (parity,) = self._ask_parities(state.index, 0, [segment])
            self.parity_cache[key] = int(parity)
        return self.parity_cache[key]

    # --- correction machinery ---

    def run_pass(self, pass_index: int, block_length: int) -> None:
        if pass_index == 1:
            perm = np.arange(self.n)
            shuffle_seed = 0
        else:
            shuffle_seed = derive_seed(self.shuffle_root.seed, pass_index)
            perm = RngStream(shuffle_seed).permutation(self.n)
        block_length = min(block_length, self.n)
        blocks = [perm[i : i + block_length] for i in range(0, self.n, block_length)]
        block_of = np.empty(self.n, dtype=np.int64)
        for b, idx in enumerate(blocks):
            block_of[idx] = b

        alice_parity = self._ask_parities(pass_index, shuffle_seed, blocks).astype(np.uint8)
        bob_parity = _block_parities(self.bits, blocks)
        state = _PassState(pass_index, blocks, block_of, alice_parity, bob_parity)
        self.states.append(state)

        # seed the cache with the whole-block parities just paid for
        for b, idx in enumerate(blocks):
            self.parity_cache[(pass_index, b, 0, len(idx))] = int(alice_parity[b])

        state_pos = len(self.states) - 1
        for b in range(len(blocks)):
            if alice_parity[b] != bob_parity[b]:
                self.queue.append((state_pos, b))
        self.drain_queue()

    def drain_queue(self) -> None:
        while self.queue:
            state_pos, b = self.queue.pop()
            state = self.states[state_pos]
            if state.alice_parity[b] == state.bob_parity[b]:
                continue  # an earlier flip already evened this block out
            self.binary_search_flip(state, b)

    def binary_search_flip(self, state: _PassState, block_index: int) -> None:
        idx = state.blocks[block_index]
        lo, hi = 0, len(idx)
        while hi - lo > 1:
            mid = (lo + hi + 1) // 2
            a_first = self._sender_parity(state, block_index, lo, mid)
            # the second half comes for free: parity(lo,hi) is always cached
            whole = self.parity_cache[(state.index, block_index, lo, hi)]
            self.parity_cache.setdefault((state.index, block_index, mid, hi), whole ^ a_first)
            b_first = int(np.bitwise_xor.reduce(self.bits[idx[lo:mid]]))
            if a_first != b_first:
                hi = mid
            else:
                lo = mid
        self.flip(int(idx[lo]))

    def flip(self, pos: int) -> None:
        self.bits[pos] ^= 1
        self.n_flips += 1
        for state_pos, state in enumerate(self.states):
            b = int(state.block_of[pos])
            state.bob_parity[b] ^= 1
            if state.alice_parity[b] != state.bob_parity[b]:
                self.queue.append((state_pos, b))

    # --- verification ---

    def digest_matches(self) -> bool:
        self.link.send(build_key_digest_check(key_digest(self.bits)))
        self.responder.serve_digest()
        verdict = parse_hash_verdict(self.link.recv(MessageType.HASH_VERDICT))
        self.ledger.charge_hash(8 * KEY_DIGEST_BYTES)
        return verdict


def cascade_reconcile(
    alice_bits: np.ndarray,
    bob_bits: np.ndarray,
    config: CascadeConfig,
    transcript: Transcript | None = None,
) -> ReconciliationResult:
    """Correct the receiver's key against the sender's over the framed link.

    Returns the corrected bits plus the full disclosure ledger; raises
    ReconciliationError if the keys still disagree after recovery.
    """
    alice_bits = np.asarray(alice_bits, dtype=np.uint8)
    bob_bits = np.asarray(bob_bits, dtype=np.uint8)
    if alice_bits.shape != bob_bits.shape or alice_bits.ndim != 1:
        raise ValueError("keys must be 1-d arrays of equal length")
    if alice_bits.size == 0:
        raise ValueError("keys are empty")

    alice_link, bob_link = loopback_pair(transcript)
    responder = _SenderResponder(alice_bits, alice_link)
    ledger = LeakageLedger()
    engine = _Reconciler(bob_bits, config, bob_link, responder, ledger)

    n = alice_bits.size
    block_length = config.first_block_length(n)
    passes_run = 0
    for pass_index in range(1, config.passes + 1):
        engine.run_pass(pass_index, block_length)
        passes_run += 1
        block_length = min(2 * block_length, n)

    verified = engine.digest_matches()
    recovery_used = 0
    while not verified and recovery_used < config.recovery_passes:
        recovery_used += 1
        block_length = min(2 * block_length, max(MIN_BLOCK, n // 2))
        engine.run_pass(config.passes + recovery_used, block_length)
        passes_run += 1
        verified = engine.digest_matches()

    if not verified:
        raise ReconciliationError(
            f"digest mismatch after {passes_run} passes "
            f"({engine.n_flips} flips, {ledger.total} bits disclosed)"
        )
    return ReconciliationResult(
        corrected_bits=engine.bits,
        ledger=ledger,
        n_flips=engine.n_flips,
        passes_run=passes_run,
        recovery_used=recovery_used,
        verified=True,
    )
