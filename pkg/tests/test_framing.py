import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cvqkd.wire import (
    HASH_SUBTYPE_COMPRESS_SEED,
    HASH_SUBTYPE_KEY_DIGEST,
    HEADER,
    MAGIC,
    Frame,
    FramingError,
    MessageType,
    Transcript,
    TransportError,
    build_basis_announcement,
    build_compress_seed,
    build_hash_verdict,
    build_key_digest_check,
    build_parity_request,
    build_parity_response,
    build_sift_response,
    decode_frame,
    decode_stream,
    loopback_pair,
    parse_basis_announcement,
    parse_hash_check,
    parse_hash_verdict,
    parse_parity_request,
    parse_parity_response,
    parse_sift_response,
)


def test_frame_layout_is_stable():
    raw = Frame(MessageType.SIFT_RESPONSE, b"\x00\x00\x00\x07").encode()
    assert raw[:4] == MAGIC
    assert raw[4] == 0x01  # version
    assert raw[5] == 0x02  # type code
    assert raw[6:10] == b"\x00\x00\x00\x04"  # payload length, big endian
    assert raw[10:] == b"\x00\x00\x00\x07"


@settings(max_examples=50, deadline=None)
@given(
    msg_type=st.sampled_from(list(MessageType)),
    payload=st.binary(max_size=200),
)
def test_frame_roundtrip(msg_type, payload):
    frame, end = decode_frame(Frame(msg_type, payload).encode())
    assert frame.msg_type == msg_type
    assert frame.payload == payload
    assert end == HEADER.size + len(payload)


def test_decode_rejects_bad_magic():
    raw = bytearray(Frame(MessageType.HASH_VERDICT, b"\x01").encode())
    raw[0] = ord("X")
    with pytest.raises(FramingError):
        decode_frame(bytes(raw))


def test_decode_rejects_bad_version():
    raw = bytearray(Frame(MessageType.HASH_VERDICT, b"\x01").encode())
    raw[4] = 0x02
    with pytest.raises(FramingError):
        decode_frame(bytes(raw))


def test_decode_rejects_unknown_type():
    raw = bytearray(Frame(MessageType.HASH_VERDICT, b"\x01").encode())
    raw[5] = 0xEE
    with pytest.raises(FramingError):
        decode_frame(bytes(raw))


def test_decode_rejects_truncation():
    raw = Frame(MessageType.SIFT_RESPONSE, b"\x00\x00\x00\x07").encode()
    with pytest.raises(FramingError):
        decode_frame(raw[:6])
    with pytest.raises(FramingError):
        decode_frame(raw[:-1])


def test_decode_stream_concatenated_frames():
    frames = [
        build_sift_response(3),
        build_hash_verdict(True),
        build_parity_response(np.array([1, 0, 1], dtype=np.uint8)),
    ]
    decoded = decode_stream(b"".join(f.encode() for f in frames))
    assert [f.msg_type for f in decoded] == [f.msg_type for f in frames]
    assert [f.payload for f in decoded] == [f.payload for f in frames]


def test_basis_announcement_roundtrip():
    ids = np.array([0, 5, 17, 1000000], dtype=np.int64)
    bases = np.array([0x02, 0x03, 0x03, 0x02], dtype=np.uint8)
    out_ids, out_bases = parse_basis_announcement(build_basis_announcement(ids, bases))
    np.testing.assert_array_equal(out_ids, ids)
    np.testing.assert_array_equal(out_bases, bases)


def test_basis_announcement_rejects_bad_code():
    with pytest.raises(ValueError):
        build_basis_announcement(np.array([1]), np.array([0x04], dtype=np.uint8))


def test_basis_announcement_rejects_length_mismatch():
    frame = build_basis_announcement(np.array([1, 2]), np.array([2, 3], dtype=np.uint8))
    clipped = Frame(frame.msg_type, frame.payload[:-1])
    with pytest.raises(FramingError):
        parse_basis_announcement(clipped)


def test_sift_response_roundtrip():
    assert parse_sift_response(build_sift_response(415)) == 415


def test_parity_request_roundtrip():
    blocks = [np.array([0, 3, 9]), np.array([1]), np.array([2, 4, 5, 6])]
    frame = build_parity_request(2, 0xDEADBEEF, blocks)
    pass_index, seed, out = parse_parity_request(frame)
    assert pass_index == 2
    assert seed == 0xDEADBEEF
    assert len(out) == 3
    for got, want in zip(out, blocks):
        np.testing.assert_array_equal(got, want)


def test_parity_request_empty():
    pass_index, seed, blocks = parse_parity_request(build_parity_request(1, 0, []))
    assert pass_index == 1 and seed == 0 and blocks == []


def test_parity_request_rejects_truncated_indices():
    frame = build_parity_request(1, 7, [np.array([0, 1, 2])])
    bad = Frame(frame.msg_type, frame.payload[:-2])
    with pytest.raises(FramingError):
        parse_parity_request(bad)


@settings(max_examples=50, deadline=None)
@given(bits=st.lists(st.integers(0, 1), max_size=100))
def test_parity_response_roundtrip(bits):
    arr = np.array(bits, dtype=np.uint8)
    np.testing.assert_array_equal(parse_parity_response(build_parity_response(arr)), arr)


def test_parity_response_packs_msb_first():
    frame = build_parity_response(np.array([1, 0, 0, 0, 0, 0, 0, 0, 1], dtype=np.uint8))
    assert frame.payload == b"\x00\x00\x00\x09" + b"\x80\x80"


def test_hash_check_key_digest_roundtrip():
    digest = bytes(range(8))
    subtype, value = parse_hash_check(build_key_digest_check(digest))
    assert subtype == HASH_SUBTYPE_KEY_DIGEST
    assert value == digest


def test_hash_check_compress_seed_roundtrip():
    subtype, (seed, out_len) = parse_hash_check(build_compress_seed(987654321, 189))
    assert subtype == HASH_SUBTYPE_COMPRESS_SEED
    assert seed == 987654321
    assert out_len == 189


def test_hash_check_rejects_wrong_digest_size():
    with pytest.raises(ValueError):
        build_key_digest_check(b"\x00" * 7)


def test_hash_verdict_roundtrip():
    assert parse_hash_verdict(build_hash_verdict(True)) is True
    assert parse_hash_verdict(build_hash_verdict(False)) is False


def test_parsers_reject_wrong_message_type():
    frame = build_sift_response(2)
    with pytest.raises(FramingError):
        parse_hash_verdict(frame)
    with pytest.raises(FramingError):
        parse_parity_response(frame)


def test_loopback_pair_delivers_in_order():
    alice, bob = loopback_pair()
    alice.send(build_sift_response(1))
    alice.send(build_hash_verdict(False))
    assert parse_sift_response(bob.recv(MessageType.SIFT_RESPONSE)) == 1
    assert parse_hash_verdict(bob.recv(MessageType.HASH_VERDICT)) is False


def test_loopback_recv_empty_raises():
    alice, _ = loopback_pair()
    with pytest.raises(TransportError):
        alice.recv()


def test_loopback_recv_type_mismatch_raises():
    alice, bob = loopback_pair()
    alice.send(build_sift_response(1))
    with pytest.raises(TransportError):
        bob.recv(MessageType.HASH_VERDICT)


def test_transcript_records_and_serializes():
    transcript = Transcript()
    alice, bob = loopback_pair(transcript)
    alice.send(build_sift_response(9))
    bob.recv()
    bob.send(build_hash_verdict(True))
    alice.recv()
    assert [s for s, _ in transcript.entries] == ["alice", "bob"]
    restored = Transcript.from_bytes(transcript.to_bytes())
    assert [f.msg_type for f in restored.frames()] == [
        MessageType.SIFT_RESPONSE,
        MessageType.HASH_VERDICT,
    ]
    assert restored.to_bytes() == transcript.to_bytes()


def test_transcript_filter_by_type():
    transcript = Transcript()
    transcript.record("alice", build_sift_response(1))
    transcript.record("bob", build_hash_verdict(True))
    only = transcript.frames(MessageType.HASH_VERDICT)
    assert len(only) == 1 and only[0].msg_type == MessageType.HASH_VERDICT
