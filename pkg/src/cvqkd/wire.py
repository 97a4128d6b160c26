"""Classical-channel message framing for the key-distillation dialogue.

Every message the two parties exchange after the quantum transmission is
carried in a framed binary envelope so a session transcript can be stored,
replayed, and audited byte for byte.  Frame layout (all integers big endian):

    magic   4 bytes  b"CVQK"
    version 1 byte   0x01
    type    1 byte   MessageType value
    length  4 bytes  payload byte count
    payload <length> bytes

Payload layouts for each message type are documented in protocol.md and
implemented by the build_* / parse_* pairs below.
"""

from __future__ import annotations

import io
import struct
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

MAGIC = b"CVQK"
WIRE_VERSION = 0x01
HEADER = struct.Struct(">4sBBI")

# HashCheck payload subtypes
HASH_SUBTYPE_KEY_DIGEST = 0x01
HASH_SUBTYPE_COMPRESS_SEED = 0x02

KEY_DIGEST_BYTES = 8


class MessageType(IntEnum):
    BASIS_ANNOUNCEMENT = 0x01
    SIFT_RESPONSE = 0x02
    CASCADE_PARITY_REQUEST = 0x10
    CASCADE_PARITY_RESPONSE = 0x11
    HASH_CHECK = 0x20
    HASH_VERDICT = 0x21


class FramingError(ValueError):
    """Raised when bytes on the wire do not form a valid frame."""


class TransportError(RuntimeError):
    """Raised when an endpoint cannot send or receive a frame."""


@dataclass(frozen=True)
class Frame:
    msg_type: MessageType
    payload: bytes

    def encode(self) -> bytes:
        return HEADER.pack(MAGIC, WIRE_VERSION, int(self.msg_type), len(self.payload)) + self.payload


def decode_frame(data: bytes, offset: int = 0) -> tuple[Frame, int]:
    """Decode one frame starting at offset; return (frame, next_offset)."""
    if len(data) - offset < HEADER.size:
        raise FramingError(f"truncated header: {len(data) - offset} bytes available")
    magic, version, type_code, length = HEADER.unpack_from(data, offset)
    if magic != MAGIC:
        raise FramingError(f"bad magic {magic!r}")
    if version != WIRE_VERSION:
        raise FramingError(f"unsupported version {version:#x}")
    try:
        msg_type = MessageType(type_code)
    except ValueError:
        raise FramingError(f"unknown message type {type_code:#x}") from None
    start = offset + HEADER.size
    if len(data) - start < length:
        raise FramingError(f"truncated payload: want {length}, have {len(data) - start}")
    return Frame(msg_type, bytes(data[start : start + length])), start + length


def decode_stream(data: bytes) -> list[Frame]:
    frames, offset = [], 0
    while offset < len(data):
        frame, offset = decode_frame(data, offset)
        frames.append(frame)
    return frames


@dataclass
class Transcript:
    """Ordered record of every frame a session put on the wire."""

    entries: list[tuple[str, Frame]] = field(default_factory=list)

    def record(self, sender: str, frame: Frame) -> None:
        self.entries.append((sender, frame))

    def frames(self, msg_type: MessageType | None = None) -> list[Frame]:
        return [f for _, f in self.entries if msg_type is None or f.msg_type == msg_type]

    def to_bytes(self) -> bytes:
        buf = io.BytesIO()
        for _, frame in self.entries:
            buf.write(frame.encode())
        return buf.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes, sender: str = "?") -> "Transcript":
        t = cls()
        for frame in decode_stream(data):
            t.record(sender, frame)
        return t


class LoopbackEndpoint:
    """In-memory duplex link endpoint; see loopback_pair()."""

    def __init__(self, name: str, inbox: deque, outbox: deque, transcript: Transcript | None):
        self.name = name
        self._inbox = inbox
        self._outbox = outbox
        self._transcript = transcript

    def send(self, frame: Frame) -> None:
        if self._transcript is not None:
            self._transcript.record(self.name, frame)
        self._outbox.append(frame.encode())

    def recv(self, expect: MessageType | None = None) -> Frame:
        if not self._inbox:
            raise TransportError(f"{self.name}: no pending frame")
        frame, trailing = decode_frame(self._inbox.popleft())
        if expect is not None and frame.msg_type != expect:
            raise TransportError(
                f"{self.name}: expected {expect.name}, got {frame.msg_type.name}"
            )
        return frame


def loopback_pair(transcript: Transcript | None = None) -> tuple[LoopbackEndpoint, LoopbackEndpoint]:
    """Two connected in-memory endpoints sharing one transcript."""
    a_to_b: deque = deque()
    b_to_a: deque = deque()
    alice = LoopbackEndpoint("alice", b_to_a, a_to_b, transcript)
    bob = LoopbackEndpoint("bob", a_to_b, b_to_a, transcript)
    return alice, bob


# ---------------------------------------------------------------------------
# payload builders / parsers
# ---------------------------------------------------------------------------


def build_basis_announcement(event_ids: np.ndarray, bases: np.ndarray) -> Frame:
    """count u32, then count x (event_id u32, basis u8)."""
    ids = np.ascontiguousarray(event_ids, dtype=">u4")
    codes = np.ascontiguousarray(bases, dtype=np.uint8)
    if ids.shape != codes.shape or ids.ndim != 1:
        raise ValueError("event_ids and bases must be matching 1-d arrays")
    if not np.all((codes == 0x02) | (codes == 0x03)):
        raise ValueError("basis codes must be 0x02 or 0x03")
    body = np.empty(ids.size, dtype=[("id", ">u4"), ("basis", "u1")])
    body["id"] = ids
    body["basis"] = codes
    payload = struct.pack(">I", ids.size) + body.tobytes()
    return Frame(MessageType.BASIS_ANNOUNCEMENT, payload)


def parse_basis_announcement(frame: Frame) -> tuple[np.ndarray, np.ndarray]:
    if frame.msg_type != MessageType.BASIS_ANNOUNCEMENT:
        raise FramingError(f"not a basis announcement: {frame.msg_type.name}")
    payload = frame.payload
    if len(payload) < 4:
        raise FramingError("basis announcement shorter than its count field")
    (count,) = struct.unpack_from(">I", payload)
    body = payload[4:]
    record = np.dtype([("id", ">u4"), ("basis", "u1")])
    if len(body) != count * record.itemsize:
        raise FramingError(f"basis announcement length mismatch for count {count}")
    table = np.frombuffer(body, dtype=record)
    return table["id"].astype(np.int64), table["basis"].astype(np.uint8)


def build_sift_response(accepted_count: int) -> Frame:
    # acknowledgement only: key bits never travel on the wire
    return Frame(MessageType.SIFT_RESPONSE, struct.pack(">I", accepted_count))


def parse_sift_response(frame: Frame) -> int:
    if frame.msg_type != MessageType.SIFT_RESPONSE:
        raise FramingError(f"not a sift response: {frame.msg_type.name}")
    if len(frame.payload) != 4:
        raise FramingError("sift response payload must be 4 bytes")
    return struct.unpack(">I", frame.payload)[0]


def build_parity_request(
    pass_index: int, shuffle_seed: int, blocks: list[np.ndarray]
) -> Frame:
    """pass u8, shuffle_seed u64, group_count u32, sizes u32 x G, flat indices u32."""
    sizes = np.array([len(b) for b in blocks], dtype=">u4")
    # concatenate in native order first: np.concatenate drops non-native byte order
    flat_native = (
        np.concatenate([np.asarray(b) for b in blocks])
        if blocks
        else np.empty(0, dtype=np.int64)
    )
    flat = flat_native.astype(">u4")
    payload = (
        struct.pack(">BQI", pass_index, shuffle_seed, len(blocks))
        + sizes.tobytes()
        + flat.tobytes()
    )
    return Frame(MessageType.CASCADE_PARITY_REQUEST, payload)


def parse_parity_request(frame: Frame) -> tuple[int, int, list[np.ndarray]]:
    if frame.msg_type != MessageType.CASCADE_PARITY_REQUEST:
        raise FramingError(f"not a parity request: {frame.msg_type.name}")
    payload = frame.payload
    head = struct.Struct(">BQI")
    if len(payload) < head.size:
        raise FramingError("parity request shorter than its header")
    pass_index, shuffle_seed, group_count = head.unpack_from(payload)
    sizes_end = head.size + 4 * group_count
    if len(payload) < sizes_end:
        raise FramingError("parity request truncated in size table")
    sizes = np.frombuffer(payload, dtype=">u4", count=group_count, offset=head.size).astype(np.int64)
    total = int(sizes.sum())
    if len(payload) != sizes_end + 4 * total:
        raise FramingError("parity request index area length mismatch")
    flat = np.frombuffer(payload, dtype=">u4", offset=sizes_end).astype(np.int64)
    bounds = np.concatenate([[0], np.cumsum(sizes)])
    blocks = [flat[bounds[i] : bounds[i + 1]] for i in range(group_count)]
    return pass_index, shuffle_seed, blocks


def build_parity_response(parities: np.ndarray) -> Frame:
    """bit_count u32, then parities packed 8 per byte, most significant first."""
    bits = np.asarray(parities, dtype=np.uint8)
    if bits.ndim != 1 or not np.all(bits <= 1):
        raise ValueError("parities must be a 1-d 0/1 array")
    payload = struct.pack(">I", bits.size) + np.packbits(bits).tobytes()
    return Frame(MessageType.CASCADE_PARITY_RESPONSE, payload)


def parse_parity_response(frame: Frame) -> np.ndarray:
    if frame.msg_type != MessageType.CASCADE_PARITY_RESPONSE:
        raise FramingError(f"not a parity response: {frame.msg_type.name}")
    payload = frame.payload
    if len(payload) < 4:
        raise FramingError("parity response shorter than its count field")
    (count,) = struct.unpack_from(">I", payload)
    packed = np.frombuffer(payload, dtype=np.uint8, offset=4)
    if packed.size != (count + 7) // 8:
        raise FramingError(f"parity response length mismatch for count {count}")
    return np.unpackbits(packed, count=count) if count else np.empty(0, dtype=np.uint8)


def build_key_digest_check(digest: bytes) -> Frame:
    if len(digest) != KEY_DIGEST_BYTES:
        raise ValueError(f"key digest must be {KEY_DIGEST_BYTES} bytes")
    return Frame(MessageType.HASH_CHECK, bytes([HASH_SUBTYPE_KEY_DIGEST]) + digest)


def build_compress_seed(seed: int, output_length: int) -> Frame:
    payload = bytes([HASH_SUBTYPE_COMPRESS_SEED]) + struct.pack(">QI", seed, output_length)
    return Frame(MessageType.HASH_CHECK, payload)


def parse_hash_check(frame: Frame) -> tuple[int, object]:
    """Return (subtype, value): digest bytes, or (seed, output_length)."""
    if frame.msg_type != MessageType.HASH_CHECK:
        raise FramingError(f"not a hash check: {frame.msg_type.name}")
    payload = frame.payload
    if not payload:
        raise FramingError("hash check payload is empty")
    subtype = payload[0]
    if subtype == HASH_SUBTYPE_KEY_DIGEST:
        if len(payload) != 1 + KEY_DIGEST_BYTES:
            raise FramingError("key digest payload must be 9 bytes")
        return subtype, payload[1:]
    if subtype == HASH_SUBTYPE_COMPRESS_SEED:
        if len(payload) != 1 + 12:
            raise FramingError("compress seed payload must be 13 bytes")
        return subtype, struct.unpack(">QI", payload[1:])
    raise FramingError(f"unknown hash check subtype {subtype:#x}")


def build_hash_verdict(ok: bool) -> Frame:
    return Frame(MessageType.HASH_VERDICT, bytes([1 if ok else 0]))


def parse_hash_verdict(frame: Frame) -> bool:
    if frame.msg_type != MessageType.HASH_VERDICT:
        raise FramingError(f"not a hash verdict: {frame.msg_type.name}")
    if len(frame.payload) != 1:
        raise FramingError("hash verdict payload must be 1 byte")
    return frame.payload[0] != 0
