import pytest
from hypothesis import given, settings, strategies as st

from wot.base_ot import OtResponse
from wot.catalog import Manifest, ManifestEntry
from wot.errors import FrameError
from wot.framing import (CtData, CtReq, Done, ErrorMsg, Hello, ManifestMsg,
                         OtBatchQuery, OtBatchResp, MAX_FRAME_LEN,
                         decode_frame, decode_manifest, encode_frame,
                         encode_manifest, read_frame)

ids = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789._-", min_size=1, max_size=20)


def manifest_strategy():
    entry = st.builds(
        ManifestEntry,
        id=ids,
        weight=st.integers(min_value=1, max_value=1 << 20),
        ct_len=st.integers(min_value=0, max_value=1 << 40),
        digest_hex=st.binary(min_size=32, max_size=32).map(bytes.hex),
    )
    return st.builds(
        Manifest,
        mode=st.sampled_from(["p1", "p2"]),
        group_id=st.sampled_from(["p23", "p47", "modp-2048"]),
        key_bits=st.sampled_from([128, 256]),
        entries=st.lists(entry, min_size=1, max_size=6, unique_by=lambda e: e.id).map(tuple),
    )


def response_strategy(elem_len, mask_len, n):
    pair = st.tuples(st.integers(min_value=0, max_value=(1 << (8 * elem_len)) - 1),
                     st.binary(min_size=mask_len, max_size=mask_len))
    return st.builds(OtResponse, pairs=st.lists(pair, min_size=n, max_size=n).map(tuple))


def message_strategy():
    batch_query = st.integers(min_value=1, max_value=4).flatmap(
        lambda elem_len: st.builds(
            OtBatchQuery,
            elem_len=st.just(elem_len),
            queries=st.lists(st.integers(min_value=0, max_value=(1 << (8 * elem_len)) - 1),
                             min_size=0, max_size=8).map(tuple),
        ))
    batch_resp = st.tuples(st.integers(1, 3), st.integers(0, 24), st.integers(1, 4)).flatmap(
        lambda dims: st.builds(
            OtBatchResp,
            elem_len=st.just(dims[0]),
            responses=st.lists(response_strategy(dims[0], dims[1], dims[2]),
                               min_size=0, max_size=4).map(tuple),
        ))
    return st.one_of(
        st.builds(Hello, version=st.integers(0, 255), mode=st.sampled_from(["", "p1", "p2"]),
                  group_id=st.sampled_from(["", "p23", "modp-2048"]),
                  key_bits=st.sampled_from([0, 128, 256])),
        st.builds(ManifestMsg, manifest=manifest_strategy()),
        st.builds(CtReq, item_id=ids),
        st.builds(CtData, item_id=ids, ciphertext=st.binary(max_size=200)),
        batch_query,
        batch_resp,
        st.builds(Done, billed=st.integers(min_value=0, max_value=(1 << 32) - 1)),
        st.builds(ErrorMsg, code=st.integers(0, 255), text=st.text(max_size=50)),
    )


def test_done_frame_frozen_layout():
    # Billing echo of T=4: 4-byte length (5), type 0x07, 4-byte total.
    frame = encode_frame(Done(billed=4))
    assert frame == bytes.fromhex("00000005" "07" "00000004")
    assert len(frame) == 9
    assert decode_frame(frame) == Done(billed=4)


@given(message_strategy())
@settings(max_examples=300, deadline=None)
def test_round_trip_property(msg):
    assert decode_frame(encode_frame(msg)) == msg


def test_oversize_length_rejected_before_allocation():
    header = (1 << 30).to_bytes(4, "big") + b"\x07"
    with pytest.raises(FrameError, match="too large"):
        decode_frame(header)


def test_truncated_frames_rejected():
    frame = encode_frame(Done(billed=4))
    for cut in range(len(frame)):
        with pytest.raises(FrameError):
            decode_frame(frame[:cut])


def test_trailing_bytes_rejected():
    frame = encode_frame(Done(billed=4))
    with pytest.raises(FrameError, match="trailing"):
        decode_frame(frame + b"\x00")


def test_unknown_type_rejected():
    frame = bytes.fromhex("00000001" "55")
    with pytest.raises(FrameError, match="unknown message type"):
        decode_frame(frame)


def test_zero_length_rejected():
    with pytest.raises(FrameError, match="no type byte"):
        decode_frame(bytes.fromhex("00000000") + b"\x00")


def test_garbled_payload_rejected():
    good = encode_frame(Done(billed=4))
    short_payload = good[:4] + good[4:5] + good[5:7]  # truncated u32
    fixed = (3).to_bytes(4, "big") + short_payload[4:]
    with pytest.raises(FrameError):
        decode_frame(fixed)


def test_encode_rejects_oversize_frame():
    with pytest.raises(FrameError, match="too large"):
        encode_frame(CtData(item_id="a", ciphertext=b"\x00" * MAX_FRAME_LEN))


@given(manifest_strategy())
@settings(max_examples=100, deadline=None)
def test_manifest_record_round_trip(manifest):
    assert decode_manifest(encode_manifest(manifest)) == manifest


def test_manifest_rejects_traversal_item_id():
    """A hostile manifest must not smuggle path components into item ids."""
    good = Manifest(mode="p2", group_id="p23", key_bits=128,
                    entries=(ManifestEntry(id="ok", weight=1, ct_len=1,
                                           digest_hex="0" * 64),))
    raw = encode_manifest(good)
    evil = raw.replace(b"\x00\x02ok", b"\x00\x02..")
    with pytest.raises(FrameError, match="invalid manifest entry"):
        decode_manifest(evil)
    with pytest.raises(Exception, match="invalid item id"):
        ManifestEntry(id="../evil", weight=1, ct_len=1, digest_hex="0" * 64)
    with pytest.raises(Exception, match="malformed digest"):
        ManifestEntry(id="ok", weight=1, ct_len=1, digest_hex="ZZ" * 32)


def test_manifest_rejects_bad_version():
    raw = bytearray(encode_manifest(Manifest(
        mode="p2", group_id="p23", key_bits=128,
        entries=(ManifestEntry(id="a", weight=1, ct_len=1, digest_hex="0" * 64),))))
    raw[0] = 9
    with pytest.raises(FrameError, match="version"):
        decode_manifest(bytes(raw))


def test_read_frame_from_stream():
    frames = encode_frame(CtReq(item_id="paper-a")) + encode_frame(Done(billed=7))
    stream = {"pos": 0}

    def recv_exact(n):
        out = frames[stream["pos"]:stream["pos"] + n]
        stream["pos"] += n
        return out

    assert read_frame(recv_exact) == CtReq(item_id="paper-a")
    assert read_frame(recv_exact) == Done(billed=7)
