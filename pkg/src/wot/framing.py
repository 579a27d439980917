"""Length-prefixed binary framing and message codecs.

Frame layout::

    [4 bytes - big-endian length of everything after this field]
    [1 byte  - message type]
    [N bytes - payload]

The length field therefore equals ``1 + len(payload)`` and is capped at
16 MiB; a frame claiming more is rejected before any allocation. All
integers on the wire are big-endian. Group elements travel as fixed-width
integers whose width is carried inside the transfer messages, keeping the
codec self-contained.

Session grammar (enforced by the server in ``wot.net``)::

    HELLO -> MANIFEST -> (CT_REQ/CT_DATA)* -> OT_BATCH_QUERY
          -> OT_BATCH_RESP -> DONE

Any deviation earns an ERROR frame and a closed connection.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from .base_ot import OtResponse
from .catalog import Manifest, ManifestEntry, MODES
from .errors import CatalogError, FrameError

LENGTH_FIELD = 4
MAX_FRAME_LEN = 1 << 24  # cap on the length field (type byte + payload)

PROTOCOL_VERSION = 1

TYPE_HELLO = 0x01
TYPE_MANIFEST = 0x02
TYPE_CT_REQ = 0x03
TYPE_CT_DATA = 0x04
TYPE_OT_BATCH_QUERY = 0x05
TYPE_OT_BATCH_RESP = 0x06
TYPE_DONE = 0x07
TYPE_ERROR = 0x7F

ERR_GRAMMAR = 0x01
ERR_UNKNOWN_ITEM = 0x02
ERR_INCOMPATIBLE = 0x03
ERR_BAD_QUERY = 0x04
ERR_INTERNAL = 0x05

# Wildcards a client may send in HELLO before it has seen the manifest.
ANY_MODE = ""
ANY_GROUP = ""
ANY_KEY_BITS = 0


@dataclass(frozen=True)
class Hello:
    version: int = PROTOCOL_VERSION
    mode: str = ANY_MODE
    group_id: str = ANY_GROUP
    key_bits: int = ANY_KEY_BITS


@dataclass(frozen=True)
class ManifestMsg:
    manifest: Manifest


@dataclass(frozen=True)
class CtReq:
    item_id: str


@dataclass(frozen=True)
class CtData:
    item_id: str
    ciphertext: bytes


@dataclass(frozen=True)
class OtBatchQuery:
    elem_len: int
    queries: tuple[int, ...]  # one blinded element per pick


@dataclass(frozen=True)
class OtBatchResp:
    elem_len: int
    responses: tuple[OtResponse, ...]


@dataclass(frozen=True)
class Done:
    billed: int  # the total the sender charges; both sides must agree


@dataclass(frozen=True)
class ErrorMsg:
    code: int
    text: str


Message = Hello | ManifestMsg | CtReq | CtData | OtBatchQuery | OtBatchResp | Done | ErrorMsg

_MODE_CODES = {mode: i + 1 for i, mode in enumerate(MODES)}
_MODE_NAMES = {i + 1: mode for i, mode in enumerate(MODES)}
_MODE_CODES[ANY_MODE] = 0
_MODE_NAMES[0] = ANY_MODE


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FrameError("truncated payload")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack("!H", self.take(2))[0]

    def u32(self) -> int:
        return struct.unpack("!I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("!Q", self.take(8))[0]

    def string(self) -> str:
        n = self.u16()
        try:
            return self.take(n).decode()
        except UnicodeDecodeError:
            raise FrameError("invalid string encoding") from None

    def rest(self) -> bytes:
        out = self.data[self.pos:]
        self.pos = len(self.data)
        return out

    def done(self):
        if self.pos != len(self.data):
            raise FrameError("trailing bytes in payload")


def _string(s: str) -> bytes:
    raw = s.encode()
    if len(raw) > 0xFFFF:
        raise FrameError("string too long")
    return struct.pack("!H", len(raw)) + raw


def _encode_mode(mode: str) -> int:
    if mode not in _MODE_CODES:
        raise FrameError(f"unknown mode {mode!r}")
    return _MODE_CODES[mode]


def _decode_mode(code: int) -> str:
    if code not in _MODE_NAMES:
        raise FrameError(f"unknown mode code {code}")
    return _MODE_NAMES[code]


def encode_manifest(manifest: Manifest) -> bytes:
    """Length-prefixed record form, the bundle's on-disk manifest format."""
    out = bytearray()
    out += struct.pack("!BBH", PROTOCOL_VERSION, _encode_mode(manifest.mode), manifest.key_bits)
    out += _string(manifest.group_id)
    out += struct.pack("!I", manifest.n)
    for e in manifest.entries:
        record = _string(e.id) + struct.pack("!IQ", e.weight, e.ct_len) + bytes.fromhex(e.digest_hex)
        out += struct.pack("!I", len(record)) + record
    return bytes(out)


def decode_manifest(data: bytes) -> Manifest:
    r = _Reader(data)
    version = r.u8()
    if version != PROTOCOL_VERSION:
        raise FrameError(f"unsupported manifest version {version}")
    mode = _decode_mode(r.u8())
    key_bits = r.u16()
    group_id = r.string()
    n = r.u32()
    entries = []
    for _ in range(n):
        rec = _Reader(r.take(r.u32()))
        item_id = rec.string()
        weight = rec.u32()
        ct_len = rec.u64()
        digest = rec.take(32)
        rec.done()
        try:
            entries.append(ManifestEntry(id=item_id, weight=weight, ct_len=ct_len,
                                         digest_hex=digest.hex()))
        except CatalogError as exc:
            raise FrameError(f"invalid manifest entry: {exc}") from None
    r.done()
    try:
        return Manifest(mode=mode, group_id=group_id, key_bits=key_bits,
                        entries=tuple(entries))
    except CatalogError as exc:
        raise FrameError(f"invalid manifest: {exc}") from None


def _encode_payload(msg: Message) -> tuple[int, bytes]:
    if isinstance(msg, Hello):
        return TYPE_HELLO, (struct.pack("!BB", msg.version, _encode_mode(msg.mode))
                            + _string(msg.group_id)
                            + struct.pack("!H", msg.key_bits))
    if isinstance(msg, ManifestMsg):
        return TYPE_MANIFEST, encode_manifest(msg.manifest)
    if isinstance(msg, CtReq):
        return TYPE_CT_REQ, _string(msg.item_id)
    if isinstance(msg, CtData):
        return TYPE_CT_DATA, _string(msg.item_id) + msg.ciphertext
    if isinstance(msg, OtBatchQuery):
        out = bytearray(struct.pack("!IH", len(msg.queries), msg.elem_len))
        for y in msg.queries:
            out += y.to_bytes(msg.elem_len, "big")
        return TYPE_OT_BATCH_QUERY, bytes(out)
    if isinstance(msg, OtBatchResp):
        counts = {resp.n_secrets for resp in msg.responses}
        if len(counts) > 1:
            raise FrameError("responses disagree on secret count")
        n = counts.pop() if counts else 0
        mask_lens = {len(m) for resp in msg.responses for _, m in resp.pairs}
        if len(mask_lens) > 1:
            raise FrameError("responses disagree on mask length")
        mask_len = mask_lens.pop() if mask_lens else 0
        out = bytearray(struct.pack("!IIHH", len(msg.responses), n, msg.elem_len, mask_len))
        for resp in msg.responses:
            for a, masked in resp.pairs:
                out += a.to_bytes(msg.elem_len, "big")
                out += masked
        return TYPE_OT_BATCH_RESP, bytes(out)
    if isinstance(msg, Done):
        return TYPE_DONE, struct.pack("!I", msg.billed)
    if isinstance(msg, ErrorMsg):
        return TYPE_ERROR, struct.pack("!B", msg.code) + msg.text.encode()
    raise FrameError(f"cannot encode {type(msg).__name__}")


def _decode_payload(msg_type: int, payload: bytes) -> Message:
    r = _Reader(payload)
    if msg_type == TYPE_HELLO:
        version, mode_code = r.u8(), r.u8()
        group_id = r.string()
        key_bits = r.u16()
        r.done()
        return Hello(version=version, mode=_decode_mode(mode_code),
                     group_id=group_id, key_bits=key_bits)
    if msg_type == TYPE_MANIFEST:
        return ManifestMsg(manifest=decode_manifest(payload))
    if msg_type == TYPE_CT_REQ:
        item_id = r.string()
        r.done()
        return CtReq(item_id=item_id)
    if msg_type == TYPE_CT_DATA:
        item_id = r.string()
        return CtData(item_id=item_id, ciphertext=r.rest())
    if msg_type == TYPE_OT_BATCH_QUERY:
        count, elem_len = r.u32(), r.u16()
        queries = tuple(int.from_bytes(r.take(elem_len), "big") for _ in range(count))
        r.done()
        return OtBatchQuery(elem_len=elem_len, queries=queries)
    if msg_type == TYPE_OT_BATCH_RESP:
        count, n, elem_len, mask_len = r.u32(), r.u32(), r.u16(), r.u16()
        responses = []
        for _ in range(count):
            pairs = tuple((int.from_bytes(r.take(elem_len), "big"), r.take(mask_len))
                          for _ in range(n))
            responses.append(OtResponse(pairs=pairs))
        r.done()
        return OtBatchResp(elem_len=elem_len, responses=tuple(responses))
    if msg_type == TYPE_DONE:
        billed = r.u32()
        r.done()
        return Done(billed=billed)
    if msg_type == TYPE_ERROR:
        code = r.u8()
        try:
            text = r.rest().decode()
        except UnicodeDecodeError:
            raise FrameError("invalid error text") from None
        return ErrorMsg(code=code, text=text)
    raise FrameError(f"unknown message type 0x{msg_type:02x}")


def encode_frame(msg: Message) -> bytes:
    msg_type, payload = _encode_payload(msg)
    length = 1 + len(payload)
    if length > MAX_FRAME_LEN:
        raise FrameError(f"frame too large: {length} bytes")
    return struct.pack("!IB", length, msg_type) + payload


def decode_frame(data: bytes) -> Message:
    """Decode exactly one complete frame."""
    if len(data) < LENGTH_FIELD + 1:
        raise FrameError("incomplete frame")
    length = struct.unpack("!I", data[:LENGTH_FIELD])[0]
    if length > MAX_FRAME_LEN:
        raise FrameError(f"frame too large: {length} bytes")
    if length < 1:
        raise FrameError("frame has no type byte")
    if len(data) - LENGTH_FIELD < length:
        raise FrameError("incomplete frame")
    if len(data) - LENGTH_FIELD > length:
        raise FrameError("trailing bytes after frame")
    msg_type = data[LENGTH_FIELD]
    return _decode_payload(msg_type, data[LENGTH_FIELD + 1:LENGTH_FIELD + length])


def read_frame(recv_exact) -> Message:
    """Read one frame from a ``recv_exact(n) -> bytes`` callable."""
    header = recv_exact(LENGTH_FIELD)
    length = struct.unpack("!I", header)[0]
    if length > MAX_FRAME_LEN:
        raise FrameError(f"frame too large: {length} bytes")
    if length < 1:
        raise FrameError("frame has no type byte")
    body = recv_exact(length)
    return _decode_payload(body[0], body[1:])
