"""Secret Chaining (SC) values, the per-neighbor SC table, and the XOR coding.

Every control-message flow between two nodes is chained: message *k* is coded
with an SC value that travelled, encrypted, inside message *k - 1*.  Unicast
(UC) and multicast (MC) traffic form independent flows.  The very first
message of each flow is coded with zero, which leaves it unchanged.
"""

from __future__ import annotations

import enum
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Optional, Sequence

from .wire import MAPPED_CODES

SC_MASK = 0xFFFFFFFF
HISTORY_WINDOW = 64

# XOR differences between any two mapped code points.  The set is closed
# under XOR (a 16-element subspace), so a Code-byte mask lying outside it
# can never turn one mapped code into another.
_CODE_DELTAS = frozenset(a ^ b for a in MAPPED_CODES for b in MAPPED_CODES)
# Number of cosets of that subspace minus the zero coset: at most this many
# consecutive SC values can be pairwise distinguishable on the Code byte.
CODE_WINDOW = 256 // len(_CODE_DELTAS) - 2


class Flow(enum.Enum):
    UC = "UC"
    MC = "MC"


def keystream_xor(data: bytes, sc: int) -> bytes:
    """XOR ``data`` with the big-endian SC repeated cyclically."""
    n = len(data)
    if n == 0 or sc == 0:
        return bytes(data)
    ks = (sc & SC_MASK).to_bytes(4, "big") * (n // 4 + 1)
    return (int.from_bytes(data, "big") ^ int.from_bytes(ks[:n], "big")).to_bytes(n, "big")


def encode_code(code: int, sc: int) -> int:
    return (code ^ sc) & 0xFF


def code_mask(sc: int) -> int:
    """Total XOR applied to the Code byte on the wire.

    The byte is pre-encoded with the SC's low byte and then falls under the
    first keystream byte (the SC's high byte).
    """
    return ((sc >> 24) ^ sc) & 0xFF


def _code_distinct(a: int, b: int) -> bool:
    return code_mask(a) ^ code_mask(b) not in _CODE_DELTAS


def generate_sc(rng: random.Random, history: Sequence[int] = ()) -> int:
    """Draw a fresh nonzero SC value for one flow.

    ``history`` holds the flow's recent values, oldest first.  The result is
    absent from the last ``HISTORY_WINDOW`` of them, and its Code-byte mask is
    distinguishable from zero and from the last ``CODE_WINDOW`` values, so a
    receiver holding any of those stale values decodes an unmapped Code.
    """
    recent = list(history)[-HISTORY_WINDOW:]
    seen = set(recent)
    guard = [0, *recent[-CODE_WINDOW:]]
    while True:
        sc = rng.getrandbits(32)
        if sc == 0 or sc in seen:
            continue
        if all(_code_distinct(sc, old) for old in guard):
            return sc


@dataclass
class SCEntry:
    uc_rx: int = 0
    mc_rx: int = 0
    uc_tx: int = 0
    uc_history: deque = field(default_factory=lambda: deque(maxlen=HISTORY_WINDOW))


@dataclass
class SCTable:
    """Chaining state of one node: per-neighbor slots plus the node-wide SC_MC_TX."""

    entries: dict = field(default_factory=dict)
    mc_tx: int = 0
    mc_history: deque = field(default_factory=lambda: deque(maxlen=HISTORY_WINDOW))

    def entry(self, neighbor: Hashable) -> SCEntry:
        e = self.entries.get(neighbor)
        if e is None:
            e = self.entries[neighbor] = SCEntry()
        return e

    def lookup_rx(self, sender: Hashable, flow: Flow) -> int:
        e = self.entries.get(sender)
        if e is None:
            return 0
        return e.uc_rx if flow is Flow.UC else e.mc_rx

    def install_next_rx(self, sender: Hashable, flow: Flow, sc: int) -> None:
        if not 0 <= sc <= SC_MASK:
            raise ValueError(f"SC value {sc} does not fit in 32 bits")
        e = self.entry(sender)
        if flow is Flow.UC:
            e.uc_rx = sc
        else:
            e.mc_rx = sc

    def tx_value(self, neighbor: Optional[Hashable], flow: Flow) -> int:
        if flow is Flow.MC:
            return self.mc_tx
        e = self.entries.get(neighbor)
        return 0 if e is None else e.uc_tx

    def tx_history(self, neighbor: Optional[Hashable], flow: Flow) -> Iterable[int]:
        if flow is Flow.MC:
            return self.mc_history
        return self.entry(neighbor).uc_history

    def fresh_tx(self, neighbor: Optional[Hashable], flow: Flow, rng: random.Random) -> int:
        """Generate the next SC for a flow, guarding the value currently in use too."""
        hist = [*self.tx_history(neighbor, flow), self.tx_value(neighbor, flow)]
        return generate_sc(rng, hist)

    def commit_tx(self, neighbor: Optional[Hashable], flow: Flow, sc: int) -> None:
        """Record ``sc`` as the value coding the next message on the flow.

        ``neighbor`` is ignored for the MC flow, whose slot is node-wide.
        """
        if flow is Flow.MC:
            self.mc_history.append(self.mc_tx)
            self.mc_tx = sc
        else:
            e = self.entry(neighbor)
            e.uc_history.append(e.uc_tx)
            e.uc_tx = sc
