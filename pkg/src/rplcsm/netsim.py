"""Deterministic discrete-event engine with a unit-disk lossy radio.

Simulated time is an integer count of microseconds.  Events at equal times run
in scheduling order, which together with seeded random streams makes a round
fully reproducible.
"""

from __future__ import annotations

import enum
import hashlib
import heapq
import math
import random
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, NamedTuple, Optional

from .metrics import EnergyModel, RoundReport

US_PER_S = 1_000_000
US_PER_MS = 1_000
BROADCAST = None


class SimulationAbort(RuntimeError):
    """Bug trap: the event loop reached an impossible state."""


class EventKind(enum.Enum):
    FRAME_DELIVERY = "FrameDelivery"
    TIMER_FIRE = "TimerFire"
    DATA_GENERATION = "DataGeneration"
    ATTACK_START = "AttackStart"


@dataclass(order=True)
class Event:
    time: int
    seq: int
    kind: EventKind = field(compare=False)
    action: Callable = field(compare=False)
    args: tuple = field(compare=False, default=())


class EventQueue:
    def __init__(self):
        self._heap: list[Event] = []
        self._seq = 0
        self.now = 0

    def __len__(self) -> int:
        return len(self._heap)

    def schedule(self, time: int, kind: EventKind, action: Callable, *args) -> Event:
        if time < self.now:
            raise SimulationAbort(f"event {kind.value} at t={time} is before now={self.now}")
        ev = Event(int(time), self._seq, kind, action, args)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def peek_time(self) -> Optional[int]:
        return self._heap[0].time if self._heap else None

    def pop(self) -> Event:
        ev = heapq.heappop(self._heap)
        self.now = ev.time
        return ev


@dataclass
class RadioModel:
    range_m: float = 45.0
    loss_prob: float = 0.02
    ctrl_delay_us: int = 10 * US_PER_MS

    def in_range(self, a: tuple, b: tuple) -> bool:
        return math.dist(a, b) <= self.range_m


@dataclass(frozen=True)
class Frame:
    """Bytes on the air.  ``src`` is the link-layer source written in the frame;
    ``emitter``/``origin_pos`` say who physically radiated it (they differ for
    replayed frames)."""

    src: Hashable
    dst: Optional[Hashable]
    data: bytes
    tx_time: int
    is_data: bool = False
    emitter: Hashable = None
    origin_pos: tuple = (0.0, 0.0)

    @property
    def broadcast(self) -> bool:
        return self.dst is BROADCAST


class RxRecord(NamedTuple):
    time: int
    receiver: Hashable
    src: Hashable
    emitter: Hashable
    broadcast: bool
    outcome: str  # message kind on Accept, drop reason otherwise


class TxRecord(NamedTuple):
    time: int
    emitter: Hashable
    src: Hashable
    dst: Optional[Hashable]
    is_data: bool
    nbytes: int


def derive_seed(*parts: Any) -> int:
    text = "/".join(str(p) for p in parts).encode()
    return int.from_bytes(hashlib.blake2b(text, digest_size=8).digest(), "big")


class World:
    """One simulated round: nodes, adversaries, radio, clock, and counters.

    Nodes must provide ``node_id``, ``position``, ``legit``, ``active``,
    ``on_control(frame, link_m)`` and ``on_data(frame)``.  An inactive node
    with a true ``auto_ack`` attribute still acknowledges (and swallows)
    unicast frames sent to it, as a radio with hardware ACK would.
    Adversaries provide ``emitter_ids``, ``ears(now)`` -> list of
    (index, position) currently listening, and ``overhear(world, frame, index)``.
    """

    def __init__(
        self,
        radio: Optional[RadioModel] = None,
        seed: int = 0,
        energy: Optional[EnergyModel] = None,
        trace: bool = False,
    ):
        self.radio = radio or RadioModel()
        self.seed = seed
        self.energy = energy or EnergyModel()
        self.queue = EventQueue()
        self.rng = self.stream("radio")
        self.report = RoundReport()
        self.nodes: dict = {}
        self.adversaries: list = []
        self._adv_emitters: set = set()
        self.drop_filter: Optional[Callable[[Frame, Hashable], bool]] = None
        self.trace: Optional[list] = [] if trace else None
        self.tx_trace: Optional[list] = [] if trace else None

    @property
    def now(self) -> int:
        return self.queue.now

    def stream(self, *name: Any) -> random.Random:
        """Independent seeded random stream for one consumer."""
        return random.Random(derive_seed(self.seed, *name))

    def add_node(self, node) -> None:
        if node.node_id in self.nodes:
            raise ValueError(f"duplicate node id {node.node_id}")
        self.nodes[node.node_id] = node

    def add_adversary(self, adv) -> None:
        self.adversaries.append(adv)
        self._adv_emitters.update(adv.emitter_ids)

    def schedule(self, delay_us: int, kind: EventKind, action: Callable, *args) -> Event:
        return self.queue.schedule(self.now + int(delay_us), kind, action, *args)

    def schedule_at(self, time_us: int, kind: EventKind, action: Callable, *args) -> Event:
        return self.queue.schedule(int(time_us), kind, action, *args)

    def log(self, receiver, src, emitter, broadcast: bool, outcome: str) -> None:
        if self.trace is not None:
            self.trace.append(RxRecord(self.now, receiver, src, emitter, broadcast, outcome))

    def _lost(self, frame: Frame, receiver: Hashable) -> bool:
        if self.drop_filter is not None and self.drop_filter(frame, receiver):
            return True
        p = self.radio.loss_prob
        if p <= 0.0:
            return False
        return self.rng.random() < p

    def transmit(self, frame: Frame, delay_us: Optional[int] = None) -> list:
        """Put a frame on the air; returns the ids of nodes that will receive it."""
        delay = self.radio.ctrl_delay_us if delay_us is None else int(delay_us)
        sender = self.nodes.get(frame.emitter)
        nbytes = len(frame.data)
        if self.tx_trace is not None:
            self.tx_trace.append(TxRecord(self.now, frame.emitter, frame.src, frame.dst, frame.is_data, nbytes))
        counted = sender is not None and sender.legit
        if counted:
            self.report.add_energy(frame.emitter, self.energy.tx(nbytes))
            if not frame.is_data:
                self.report.ctrl_sent += 1

        receivers = []
        for nid, node in self.nodes.items():
            if nid == frame.emitter or nid == frame.src:
                continue
            if not frame.broadcast and nid != frame.dst:
                continue
            if not node.active and (frame.broadcast or not getattr(node, "auto_ack", False)):
                continue
            dist = math.dist(frame.origin_pos, node.position)
            if dist > self.radio.range_m or self._lost(frame, nid):
                continue
            receivers.append(nid)
            if node.legit:
                self.report.add_energy(nid, self.energy.rx(nbytes))
                if not frame.is_data:
                    self.report.ctrl_delivered_raw += 1
            self.schedule(delay, EventKind.FRAME_DELIVERY, self._deliver, nid, frame, dist)

        if frame.emitter in self._adv_emitters:
            return receivers
        for adv in self.adversaries:
            for idx, pos in adv.ears(self.now):
                if math.dist(frame.origin_pos, pos) > self.radio.range_m:
                    continue
                if self._lost(frame, ("ear", idx)):
                    continue
                self.schedule(delay, EventKind.FRAME_DELIVERY, adv.overhear, self, frame, idx)
        return receivers

    def _deliver(self, nid: Hashable, frame: Frame, dist: float) -> None:
        node = self.nodes[nid]
        if frame.is_data:
            if node.active:
                node.on_data(frame)
            else:
                self.report.data_dropped += 1
            return
        if node.active:
            node.on_control(frame, dist)

    def run(self, t_end_us: int) -> RoundReport:
        q = self.queue
        while q and q.peek_time() <= t_end_us:
            ev = q.pop()
            ev.action(*ev.args)
        return self.report
