"""RPL control messages and their byte codec on the simulated medium.

Layout of one frame (all multi-byte integers big-endian)::

    [0]     ICMPv6 type (155)
    [1]     code
    [2..3]  checksum
    [4..7]  security counter           (secure messages only)
    [...]   kind-specific body
    [...]   options as type|length|value TLVs, to the end of the frame

Body layouts:

    DIS      empty
    DIO      rank(2) | version(1) | dodag_id(16)
    DAO      seq(1) | prefix_len(1, bits) | prefix(ceil(prefix_len/8) <= 16)
    DAO-ACK  seq(1) | status(1)
    CC       flags(1, bit0 = response) | nonce(2) | dest_counter(4)
"""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Union

ICMP_TYPE_RPL = 155
HEADER_LEN = 4
COUNTER_LEN = 4
DODAG_ID_LEN = 16
MAX_OPTION_LEN = 255

SECURE_BIT = 0x80
CODE_CC = 0x8A

SC_UC_NEXT = 0x0A
SC_MC_NEXT = 0x0B
SC_OPTION_TYPES = frozenset({SC_UC_NEXT, SC_MC_NEXT})


class WireError(ValueError):
    """Base class for codec failures."""


class EncodingError(WireError):
    pass


class MalformedError(WireError):
    pass


class ChecksumError(WireError):
    pass


class UnknownCodeError(WireError):
    """The code byte maps to no RPL message; kept apart from MalformedError
    because CSM drops on it before any decryption."""


class MsgKind(enum.Enum):
    DIS = "DIS"
    DIO = "DIO"
    DAO = "DAO"
    DAO_ACK = "DAO_ACK"
    CC_REQ = "CC_REQ"
    CC_RESP = "CC_RESP"


class CodeFamily(enum.Enum):
    """What the code byte alone reveals. CC request/response share one code."""

    DIS = 0x00
    DIO = 0x01
    DAO = 0x02
    DAO_ACK = 0x03
    CC = CODE_CC


class CodeClass(NamedTuple):
    family: CodeFamily
    secure: bool


_BASE_CODES = {
    MsgKind.DIS: 0x00,
    MsgKind.DIO: 0x01,
    MsgKind.DAO: 0x02,
    MsgKind.DAO_ACK: 0x03,
}

CODE_TABLE: dict[int, CodeClass] = {}
for _fam in (CodeFamily.DIS, CodeFamily.DIO, CodeFamily.DAO, CodeFamily.DAO_ACK):
    CODE_TABLE[_fam.value] = CodeClass(_fam, False)
    CODE_TABLE[_fam.value | SECURE_BIT] = CodeClass(_fam, True)
CODE_TABLE[CODE_CC] = CodeClass(CodeFamily.CC, True)
del _fam

MAPPED_CODES = frozenset(CODE_TABLE)


def classify_code(code: int) -> Optional[CodeClass]:
    """Map a raw code byte to its message family, or ``None`` if unmapped."""
    return CODE_TABLE.get(code & 0xFF)


def code_for(kind: MsgKind, secure: bool) -> int:
    if kind in (MsgKind.CC_REQ, MsgKind.CC_RESP):
        return CODE_CC
    return _BASE_CODES[kind] | (SECURE_BIT if secure else 0)


@dataclass(frozen=True)
class MessageOption:
    opt_type: int
    value: bytes

    @classmethod
    def sc(cls, opt_type: int, sc_value: int) -> "MessageOption":
        return cls(opt_type, (sc_value & 0xFFFFFFFF).to_bytes(4, "big"))

    @property
    def as_int(self) -> int:
        return int.from_bytes(self.value, "big")


@dataclass(frozen=True)
class DioBody:
    rank: int
    version: int
    dodag_id: bytes


@dataclass(frozen=True)
class DaoBody:
    seq: int
    prefix: bytes
    prefix_len: int = -1

    def __post_init__(self):
        if self.prefix_len < 0:
            object.__setattr__(self, "prefix_len", 8 * len(self.prefix))


@dataclass(frozen=True)
class DaoAckBody:
    seq: int
    status: int = 0


@dataclass(frozen=True)
class CcBody:
    nonce: int
    dest_counter: int


Body = Union[None, DioBody, DaoBody, DaoAckBody, CcBody]

_BODY_TYPES = {
    MsgKind.DIS: type(None),
    MsgKind.DIO: DioBody,
    MsgKind.DAO: DaoBody,
    MsgKind.DAO_ACK: DaoAckBody,
    MsgKind.CC_REQ: CcBody,
    MsgKind.CC_RESP: CcBody,
}


@dataclass(frozen=True)
class ControlMessage:
    kind: MsgKind
    secure: bool = False
    body: Body = None
    options: tuple[MessageOption, ...] = field(default=())
    counter: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "options", tuple(self.options))
        if self.kind in (MsgKind.CC_REQ, MsgKind.CC_RESP) and not self.secure:
            raise ValueError("CC messages exist only in secure form")
        if self.secure != (self.counter is not None):
            raise ValueError("counter must be present iff the message is secure")
        if not isinstance(self.body, _BODY_TYPES[self.kind]):
            raise TypeError(f"{self.kind.name} needs a {_BODY_TYPES[self.kind].__name__} body")

    @property
    def code(self) -> int:
        return code_for(self.kind, self.secure)

    def option(self, opt_type: int) -> Optional[MessageOption]:
        for opt in self.options:
            if opt.opt_type == opt_type:
                return opt
        return None


@dataclass(frozen=True)
class IcmpHeader:
    icmp_type: int
    code: int
    checksum: int


def checksum(data: bytes) -> int:
    """16-bit ones'-complement checksum; the caller zeroes the checksum field."""
    if len(data) % 2:
        data = data + b"\x00"
    total = sum(struct.unpack(f">{len(data) // 2}H", data))
    while total >> 16:
        total = (total & 0xFFFF) + (total >> 16)
    return ~total & 0xFFFF


def parse_header(data: bytes) -> IcmpHeader:
    if len(data) < HEADER_LEN:
        raise MalformedError(f"frame of {len(data)} bytes is shorter than the ICMP header")
    icmp_type, code, ck = struct.unpack_from(">BBH", data)
    return IcmpHeader(icmp_type, code, ck)


def _encode_body(msg: ControlMessage) -> bytes:
    b = msg.body
    if msg.kind is MsgKind.DIS:
        return b""
    if msg.kind is MsgKind.DIO:
        if len(b.dodag_id) != DODAG_ID_LEN:
            raise EncodingError("dodag_id must be 16 bytes")
        return struct.pack(">HB", b.rank, b.version) + b.dodag_id
    if msg.kind is MsgKind.DAO:
        nbytes = (b.prefix_len + 7) // 8
        if nbytes > 16 or nbytes != len(b.prefix):
            raise EncodingError("DAO prefix length does not match prefix bytes")
        return struct.pack(">BB", b.seq, b.prefix_len) + b.prefix
    if msg.kind is MsgKind.DAO_ACK:
        return struct.pack(">BB", b.seq, b.status)
    flags = 1 if msg.kind is MsgKind.CC_RESP else 0
    return struct.pack(">BHI", flags, b.nonce, b.dest_counter)


def encode_wire(msg: ControlMessage) -> bytes:
    out = bytearray(struct.pack(">BBH", ICMP_TYPE_RPL, msg.code, 0))
    if msg.secure:
        out += struct.pack(">I", msg.counter)
    try:
        out += _encode_body(msg)
    except struct.error as exc:
        raise EncodingError(str(exc)) from exc
    for opt in msg.options:
        if len(opt.value) > MAX_OPTION_LEN:
            raise EncodingError(f"option 0x{opt.opt_type:02x} value exceeds 255 bytes")
        out += bytes((opt.opt_type, len(opt.value))) + opt.value
    struct.pack_into(">H", out, 2, checksum(bytes(out)))
    return bytes(out)


def _need(data: bytes, pos: int, n: int, what: str) -> None:
    if pos + n > len(data):
        raise MalformedError(f"truncated {what}")


def decode_wire(data: bytes) -> ControlMessage:
    hdr = parse_header(data)
    if hdr.icmp_type != ICMP_TYPE_RPL:
        raise MalformedError(f"ICMP type {hdr.icmp_type} is not RPL")
    cls = classify_code(hdr.code)
    if cls is None:
        raise UnknownCodeError(f"unmapped code 0x{hdr.code:02x}")
    zeroed = data[:2] + b"\x00\x00" + data[4:]
    if checksum(zeroed) != hdr.checksum:
        raise ChecksumError("checksum mismatch")

    pos = HEADER_LEN
    counter = None
    if cls.secure:
        _need(data, pos, COUNTER_LEN, "security counter")
        (counter,) = struct.unpack_from(">I", data, pos)
        pos += COUNTER_LEN

    fam = cls.family
    body: Body = None
    if fam is CodeFamily.DIS:
        kind = MsgKind.DIS
    elif fam is CodeFamily.DIO:
        kind = MsgKind.DIO
        _need(data, pos, 3 + DODAG_ID_LEN, "DIO body")
        rank, version = struct.unpack_from(">HB", data, pos)
        body = DioBody(rank, version, bytes(data[pos + 3:pos + 3 + DODAG_ID_LEN]))
        pos += 3 + DODAG_ID_LEN
    elif fam is CodeFamily.DAO:
        kind = MsgKind.DAO
        _need(data, pos, 2, "DAO body")
        seq, plen = struct.unpack_from(">BB", data, pos)
        nbytes = (plen + 7) // 8
        if nbytes > 16:
            raise MalformedError("DAO prefix longer than 16 bytes")
        _need(data, pos + 2, nbytes, "DAO prefix")
        body = DaoBody(seq, bytes(data[pos + 2:pos + 2 + nbytes]), plen)
        pos += 2 + nbytes
    elif fam is CodeFamily.DAO_ACK:
        kind = MsgKind.DAO_ACK
        _need(data, pos, 2, "DAO-ACK body")
        body = DaoAckBody(*struct.unpack_from(">BB", data, pos))
        pos += 2
    else:
        _need(data, pos, 7, "CC body")
        flags, nonce, dest_counter = struct.unpack_from(">BHI", data, pos)
        if flags & ~1:
            raise MalformedError("reserved CC flag bits set")
        kind = MsgKind.CC_RESP if flags & 1 else MsgKind.CC_REQ
        body = CcBody(nonce, dest_counter)
        pos += 7

    options = []
    while pos < len(data):
        _need(data, pos, 2, "option header")
        opt_type, length = data[pos], data[pos + 1]
        _need(data, pos + 2, length, "option value")
        value = bytes(data[pos + 2:pos + 2 + length])
        if opt_type in SC_OPTION_TYPES and length != 4:
            raise MalformedError("SC options carry exactly 4 bytes")
        options.append(MessageOption(opt_type, value))
        pos += 2 + length

    return ControlMessage(kind, cls.secure, body, tuple(options), counter)
