"""Outgoing/incoming pipelines for the four RPL security modes.

``prepare_outgoing`` turns a :class:`ControlMessage` into frame bytes and
``process_incoming`` turns frame bytes back into a list of outcomes.  Both
mutate the node's :class:`ModeState` in place.

Secure frames keep the ICMP header and security counter in clear and encrypt
everything after the counter.  CSM additionally codes the Code byte and the
whole frame (minus Type and checksum) with the flow's SC value.
"""

from __future__ import annotations

import enum
import hashlib
import random
from dataclasses import dataclass, field, replace
from typing import Hashable, Optional, Union

from .chain import Flow, SCTable, encode_code, keystream_xor
from .wire import (
    HEADER_LEN,
    SC_MC_NEXT,
    SC_UC_NEXT,
    CcBody,
    ControlMessage,
    MessageOption,
    MsgKind,
    WireError,
    classify_code,
    decode_wire,
    encode_wire,
)

KEY_LEN = 16
ENC_OFFSET = 8  # header(4) + counter(4)
CHALLENGE_TIMEOUT_US = 2_000_000


class SecureMode(enum.Enum):
    UM = "um"
    PSM = "psm"
    PSMRP = "psmrp"
    CSM = "csm"

    @property
    def keyed(self) -> bool:
        return self is not SecureMode.UM


class DropReason(enum.Enum):
    NO_KEY = "NoKey"
    BAD_DECRYPT = "BadDecrypt"
    NON_DECODABLE_CODE = "NonDecodableCode"
    STALE_COUNTER = "StaleCounter"
    CHALLENGE_PENDING = "ChallengePending"
    CHALLENGE_FAILED = "ChallengeFailed"
    MALFORMED = "Malformed"


class ConfigurationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Accept:
    message: ControlMessage


@dataclass(frozen=True)
class Drop:
    reason: DropReason


@dataclass(frozen=True)
class Emit:
    message: ControlMessage
    dest: Hashable


Outcome = Union[Accept, Drop, Emit]


@dataclass
class Challenge:
    nonce: int
    deadline: int
    held: Optional[ControlMessage] = None


@dataclass
class ModeState:
    key: Optional[bytes] = None
    rng: random.Random = field(default_factory=random.Random)
    tx_counter: int = 0
    last_seen_counter: dict = field(default_factory=dict)
    verified: set = field(default_factory=set)
    pending_challenges: dict = field(default_factory=dict)
    sc_table: SCTable = field(default_factory=SCTable)
    challenge_timeout_us: int = CHALLENGE_TIMEOUT_US


def sim_cipher(key: bytes, counter: int, data: bytes) -> bytes:
    """Stand-in cipher: XOR with a BLAKE2b keystream bound to (key, counter)."""
    n = len(data)
    if n == 0:
        return b""
    nonce = counter.to_bytes(4, "big")
    blocks = []
    for i in range((n + 63) // 64):
        blocks.append(hashlib.blake2b(nonce + i.to_bytes(4, "big"), key=key).digest())
    ks = b"".join(blocks)[:n]
    return (int.from_bytes(data, "big") ^ int.from_bytes(ks, "big")).to_bytes(n, "big")


def _crypt(key: bytes, frame: bytes) -> bytes:
    counter = int.from_bytes(frame[4:ENC_OFFSET], "big")
    return frame[:ENC_OFFSET] + sim_cipher(key, counter, frame[ENC_OFFSET:])


def _chain_code(frame: bytes, sc: int) -> bytes:
    """Apply the SC keystream to Code and everything after the checksum."""
    if sc == 0:
        return frame
    coded = keystream_xor(frame[1:2] + frame[4:], sc)
    return frame[:1] + coded[:1] + frame[2:4] + coded[1:]


def _set_code(frame: bytes, code: int) -> bytes:
    return frame[:1] + bytes((code,)) + frame[2:]


def _flow(dest: Optional[Hashable]) -> Flow:
    return Flow.MC if dest is None else Flow.UC


def prepare_outgoing(
    mode: SecureMode,
    state: ModeState,
    msg: ControlMessage,
    dest: Optional[Hashable] = None,
) -> bytes:
    """Build the frame for ``msg``; ``dest=None`` means link-local broadcast."""
    if mode is SecureMode.UM:
        if msg.secure:
            raise ValueError("UM sends only unsecured messages")
        return encode_wire(msg)
    if state.key is None:
        raise ConfigurationError(f"{mode.name} needs a preinstalled key")

    options = msg.options
    if mode is SecureMode.CSM:
        flow = _flow(dest)
        table = state.sc_table
        tx_sc = table.tx_value(dest, flow)
        nxt = table.fresh_tx(dest, flow, state.rng)
        if flow is Flow.UC:
            options += (MessageOption.sc(SC_UC_NEXT, nxt), MessageOption.sc(SC_MC_NEXT, table.mc_tx))
        else:
            options += (MessageOption.sc(SC_MC_NEXT, nxt),)

    state.tx_counter += 1
    sealed = replace(msg, secure=True, counter=state.tx_counter, options=options)
    frame = encode_wire(sealed)

    if mode is SecureMode.CSM:
        frame = _set_code(frame, encode_code(frame[1], tx_sc))
        frame = _chain_code(_crypt(state.key, frame), tx_sc)
        table.commit_tx(dest, flow, nxt)
        return frame
    return _crypt(state.key, frame)


def make_cc_request(state: ModeState, sender: Hashable, now: int,
                    held: Optional[ControlMessage] = None) -> Emit:
    nonce = state.rng.getrandbits(16)
    state.pending_challenges[sender] = Challenge(nonce, now + state.challenge_timeout_us, held)
    body = CcBody(nonce, state.last_seen_counter.get(sender, 0))
    return Emit(ControlMessage(MsgKind.CC_REQ, True, body, counter=0), sender)


def _open_secure(state: ModeState, frame: bytes) -> Union[ControlMessage, Drop]:
    cls = classify_code(frame[1])
    if cls is None or not cls.secure:
        return Drop(DropReason.MALFORMED)
    if state.key is None:
        return Drop(DropReason.NO_KEY)
    try:
        return decode_wire(_crypt(state.key, frame))
    except WireError:
        return Drop(DropReason.BAD_DECRYPT)


def _replay_guard(state: ModeState, msg: ControlMessage, sender: Hashable, now: int) -> list:
    """Counter freshness and Consistency Check handling for PSMrp."""
    pending = state.pending_challenges

    if msg.kind is MsgKind.CC_REQ:
        last = state.last_seen_counter.get(sender)
        if last is not None:
            if msg.counter <= last:
                return [Drop(DropReason.STALE_COUNTER)]  # replayed request: don't answer
            state.last_seen_counter[sender] = msg.counter
        reply = CcBody(msg.body.nonce, msg.counter)
        return [Accept(msg), Emit(ControlMessage(MsgKind.CC_RESP, True, reply, counter=0), sender)]

    if msg.kind is MsgKind.CC_RESP:
        ch = pending.get(sender)
        if ch is None or ch.deadline < now or ch.nonce != msg.body.nonce:
            return [Drop(DropReason.CHALLENGE_FAILED)]
        del pending[sender]
        state.last_seen_counter[sender] = max(msg.counter, state.last_seen_counter.get(sender, 0))
        state.verified.add(sender)
        out: list = [Accept(msg)]
        if ch.held is not None:
            out.append(Accept(ch.held))
        return out

    ch = pending.get(sender)
    if ch is not None and ch.deadline < now:
        # unanswered challenge: the sender stays untrusted until one succeeds
        del pending[sender]
        state.last_seen_counter.pop(sender, None)
        state.verified.discard(sender)
        ch = None
    if ch is not None:
        return [Drop(DropReason.CHALLENGE_PENDING)]

    last = state.last_seen_counter.get(sender)
    if last is None:
        return [Drop(DropReason.CHALLENGE_PENDING), make_cc_request(state, sender, now, held=msg)]
    if msg.counter > last:
        state.last_seen_counter[sender] = msg.counter
        return [Accept(msg)]
    # stale: possibly a replay; the frame itself is never released
    return [Drop(DropReason.CHALLENGE_PENDING), make_cc_request(state, sender, now)]


def process_incoming(
    mode: SecureMode,
    state: ModeState,
    frame: bytes,
    sender: Hashable,
    now: int = 0,
    broadcast: bool = True,
) -> list:
    """Run one received frame through the mode pipeline.

    Returns a list of outcomes: usually a single Accept or Drop, with Emit
    entries for side messages (CC request/response) the caller must send.
    """
    if len(frame) < HEADER_LEN:
        return [Drop(DropReason.MALFORMED)]

    if mode is SecureMode.UM:
        cls = classify_code(frame[1])
        if cls is not None and cls.secure:
            return [Drop(DropReason.NO_KEY)]
        try:
            return [Accept(decode_wire(frame))]
        except WireError:
            return [Drop(DropReason.MALFORMED)]

    if len(frame) < ENC_OFFSET:
        return [Drop(DropReason.MALFORMED)]

    if mode is SecureMode.CSM:
        flow = Flow.MC if broadcast else Flow.UC
        table = state.sc_table
        rx_sc = table.lookup_rx(sender, flow)
        frame = _chain_code(frame, rx_sc)
        code = encode_code(frame[1], rx_sc)
        if classify_code(code) is None:
            return [Drop(DropReason.NON_DECODABLE_CODE)]
        opened = _open_secure(state, _set_code(frame, code))
        if isinstance(opened, Drop):
            return [opened]
        uc_next = opened.option(SC_UC_NEXT)
        mc_next = opened.option(SC_MC_NEXT)
        if uc_next is not None:
            table.install_next_rx(sender, Flow.UC, uc_next.as_int)
        if mc_next is not None:
            table.install_next_rx(sender, Flow.MC, mc_next.as_int)
        return [Accept(opened)]

    opened = _open_secure(state, frame)
    if isinstance(opened, Drop):
        return [opened]
    if mode is SecureMode.PSMRP:
        return _replay_guard(state, opened, sender, now)
    return [Accept(opened)]

