"""A simplified RPL node: DODAG formation, MRHOF-style parent choice, trickle
DIOs, hop-by-hop DAO/DAO-ACK, and upward data forwarding.

Nodes talk to the rest of the simulation only through their ``world``
(see :class:`rplcsm.netsim.World`) and run every control frame through the
secure-mode pipeline before any RPL logic sees it.
"""

from __future__ import annotations

import random
import struct
from collections import deque
from dataclasses import dataclass
from typing import Hashable, Mapping, Optional

from .netsim import BROADCAST, EventKind, Frame, US_PER_MS, US_PER_S
from .secmode import Accept, Drop, Emit, ModeState, SecureMode, prepare_outgoing, process_incoming
from .wire import ControlMessage, DaoAckBody, DaoBody, DioBody, MsgKind

INFINITE_RANK = 0xFFFF
DATA_HEADER = struct.Struct(">HHQ")  # origin, seq, created_at (us)


@dataclass
class RplParams:
    min_hop_rank_increase: int = 256
    root_rank: int = 256
    link_cost_spread: int = 128
    hysteresis: int = 192
    trickle_imin_s: float = 4.0
    trickle_doublings: int = 8
    hop_delay_ms: float = 15.0
    hop_jitter_ms: float = 5.0
    dao_retries: int = 3
    dao_retry_s: float = 4.0
    dis_interval_s: float = 30.0
    data_max_tx: int = 4
    data_retry_s: float = 2.0
    data_reroutes: int = 1
    parent_hold_s: float = 60.0
    queue_capacity: int = 8
    boot_spread_s: float = 1.0


def compute_rank(parent_rank: int, link_cost: int) -> int:
    if parent_rank >= INFINITE_RANK:
        return INFINITE_RANK
    return min(parent_rank + link_cost, INFINITE_RANK)


def link_cost(distance_m: float, range_m: float, params: RplParams = RplParams()) -> int:
    """ETX-like proxy growing with the square of the relative distance."""
    x = params.min_hop_rank_increase + params.link_cost_spread * (distance_m / range_m) ** 2
    return int(x + 0.5)


@dataclass(frozen=True)
class Candidate:
    rank: int  # as advertised by the neighbor
    link_cost: int

    @property
    def path_rank(self) -> int:
        return compute_rank(self.rank, self.link_cost)


def select_parent(
    candidates: Mapping[Hashable, Candidate],
    current: Optional[Hashable],
    hysteresis: int = 192,
) -> Optional[Hashable]:
    """Minimum-rank choice; leave ``current`` only for a gain of at least ``hysteresis``."""
    if not candidates:
        return None
    best = min(candidates, key=lambda a: (candidates[a].path_rank, a))
    if current is None or current not in candidates or best == current:
        return best
    gain = candidates[current].path_rank - candidates[best].path_rank
    return best if gain >= hysteresis else current


class TrickleTimer:
    """DIO timer: fires once per interval at a random point in its second half,
    doubling the interval after each period up to ``imin * 2**doublings``."""

    def __init__(self, imin_us: int, doublings: int, rng: random.Random):
        self.imin = int(imin_us)
        self.doublings_max = doublings
        self.rng = rng
        self.interval = self.imin
        self.doublings_left = doublings
        self.start = 0
        self.t_fire = 0
        self.generation = 0

    @property
    def imax(self) -> int:
        return self.imin << self.doublings_max

    def _pick(self) -> int:
        self.t_fire = self.start + int(self.rng.uniform(self.interval / 2, self.interval))
        return self.t_fire

    def reset(self, now: int) -> int:
        self.interval = self.imin
        self.doublings_left = self.doublings_max
        self.start = now
        self.generation += 1
        return self._pick()

    def advance(self) -> int:
        self.start += self.interval
        if self.doublings_left > 0:
            self.interval *= 2
            self.doublings_left -= 1
        return self._pick()


@dataclass
class PendingDao:
    target: bytes
    parent: Hashable
    tries: int = 1


def address_bytes(node_id: int) -> bytes:
    return int(node_id).to_bytes(2, "big")


class Node:
    def __init__(
        self,
        world,
        node_id: int,
        position: tuple,
        *,
        mode: SecureMode = SecureMode.UM,
        mode_state: Optional[ModeState] = None,
        params: Optional[RplParams] = None,
        is_root: bool = False,
        legit: bool = True,
        dodag_id: bytes = bytes(16),
    ):
        self.world = world
        self.node_id = node_id
        self.position = (float(position[0]), float(position[1]))
        self.is_root = is_root
        self.legit = legit
        self.active = True
        self.mode = mode
        self.params = params or RplParams()
        self.mode_state = mode_state or ModeState(rng=world.stream("sec", node_id))
        self.dodag_id = dodag_id
        self.dodag_version = 0

        self.rank = self.params.root_rank if is_root else INFINITE_RANK
        self.preferred_parent: Optional[Hashable] = None
        self.candidates: dict = {}
        self.held_until: dict = {}
        self.routes: dict = {}
        self.trickle = TrickleTimer(
            self.params.trickle_imin_s * US_PER_S, self.params.trickle_doublings,
            world.stream("trickle", node_id),
        )
        self.dao_seq = 0
        self.pending_dao: dict = {}
        self.parent_changes = 0
        self._dis_armed = False

        self._jitter = world.stream("jitter", node_id)
        self.queue: deque = deque()
        self._tx_busy = False
        self._tx_attempts = 0
        self._reroutes = 0
        self.data_seq = 0
        self._seen_data: set = set()

    def __repr__(self) -> str:
        return f"Node({self.node_id}, rank={self.rank}, parent={self.preferred_parent})"

    @property
    def report(self):
        return self.world.report

    # -- lifecycle ---------------------------------------------------------

    def boot(self) -> None:
        if not self.active:
            return
        if self.is_root:
            self._reset_trickle()
        else:
            self._send_dis()

    def deactivate(self) -> None:
        self.active = False
        self.report.data_dropped += len(self.queue)
        self.queue.clear()

    # -- control plane -----------------------------------------------------

    def send_control(self, msg: ControlMessage, dest: Optional[Hashable] = BROADCAST) -> None:
        data = prepare_outgoing(self.mode, self.mode_state, msg, dest)
        self.world.transmit(Frame(self.node_id, dest, data, self.world.now,
                                  emitter=self.node_id, origin_pos=self.position))

    def on_control(self, frame: Frame, link_m: float) -> None:
        outcomes = process_incoming(self.mode, self.mode_state, frame.data, frame.src,
                                    self.world.now, frame.broadcast)
        for out in outcomes:
            if isinstance(out, Accept):
                if self.legit:
                    self.report.ctrl_received += 1
                self.world.log(self.node_id, frame.src, frame.emitter, frame.broadcast, out.message.kind.value)
                self._dispatch(out.message, frame.src, link_m)
            elif isinstance(out, Drop):
                if self.legit:
                    self.report.ctrl_dropped[out.reason.value] += 1
                self.world.log(self.node_id, frame.src, frame.emitter, frame.broadcast, out.reason.value)
            elif isinstance(out, Emit):
                self.send_control(out.message, out.dest)

    def _dispatch(self, msg: ControlMessage, sender: Hashable, link_m: float) -> None:
        if msg.kind is MsgKind.DIO:
            cost = link_cost(link_m, self.world.radio.range_m, self.params)
            self.handle_dio(msg.body, sender, cost)
        elif msg.kind is MsgKind.DIS:
            self.handle_dis(sender)
        elif msg.kind is MsgKind.DAO:
            self.handle_dao(msg.body, sender)
        elif msg.kind is MsgKind.DAO_ACK:
            self.handle_dao_ack(msg.body, sender)

    def _dio(self, rank: Optional[int] = None) -> ControlMessage:
        body = DioBody(self.rank if rank is None else rank, self.dodag_version, self.dodag_id)
        return ControlMessage(MsgKind.DIO, body=body)

    def _reset_trickle(self) -> None:
        t = self.trickle.reset(self.world.now)
        self.world.schedule_at(t, EventKind.TIMER_FIRE, self._on_trickle, self.trickle.generation)

    def _on_trickle(self, generation: int) -> None:
        if not self.active or generation != self.trickle.generation:
            return
        if self.rank < INFINITE_RANK:
            self.send_control(self._dio())
        t = self.trickle.advance()
        self.world.schedule_at(t, EventKind.TIMER_FIRE, self._on_trickle, generation)

    def _send_dis(self) -> None:
        self.send_control(ControlMessage(MsgKind.DIS))
        if not self._dis_armed:
            self._dis_armed = True
            self.world.schedule(self.params.dis_interval_s * US_PER_S, EventKind.TIMER_FIRE, self._dis_timer)

    def _dis_timer(self) -> None:
        self._dis_armed = False
        if self.active and self.preferred_parent is None and not self.is_root:
            self._send_dis()

    def handle_dio(self, dio: DioBody, sender: Hashable, cost: int) -> None:
        if self.is_root:
            return
        if dio.rank >= INFINITE_RANK:
            self.candidates.pop(sender, None)
        else:
            self.candidates[sender] = Candidate(dio.rank, cost)
        self.reselect()

    def handle_dis(self, sender: Hashable) -> None:
        if self.rank < INFINITE_RANK:
            self._reset_trickle()

    def eligible_candidates(self) -> dict:
        now = self.world.now
        return {
            a: c for a, c in self.candidates.items()
            if self.held_until.get(a, -1) <= now and c.rank < self.rank
        }

    def reselect(self) -> None:
        if self.is_root or not self.active:
            return
        eligible = self.eligible_candidates()
        current = self.preferred_parent if self.preferred_parent in eligible else None
        best = select_parent(eligible, current, self.params.hysteresis)
        if best is None:
            if self.preferred_parent is not None:
                self._detach()
            return
        if best != self.preferred_parent:
            self._change_parent(best, eligible[best].path_rank)
        else:
            self.rank = eligible[best].path_rank

    def _change_parent(self, parent: Hashable, rank: int) -> None:
        self.preferred_parent = parent
        self.rank = rank
        self.parent_changes += 1
        self._reset_trickle()
        self.send_dao(address_bytes(self.node_id))

    def _detach(self) -> None:
        old = self.rank
        self.preferred_parent = None
        self.rank = INFINITE_RANK
        # anything not strictly closer to the root may be our own descendant
        self.candidates = {a: c for a, c in self.candidates.items() if c.rank < old}
        self.send_control(self._dio(INFINITE_RANK))
        self._send_dis()

    def send_dao(self, target: bytes) -> None:
        parent = self.preferred_parent
        if parent is None:
            return
        self.dao_seq = (self.dao_seq + 1) & 0xFF
        seq = self.dao_seq
        self.pending_dao[seq] = PendingDao(target, parent)
        self.send_control(ControlMessage(MsgKind.DAO, body=DaoBody(seq, target)), parent)
        self.world.schedule(self.params.dao_retry_s * US_PER_S, EventKind.TIMER_FIRE, self._dao_retry, seq)

    def _dao_retry(self, seq: int) -> None:
        p = self.pending_dao.get(seq)
        if p is None or not self.active:
            return
        if p.tries > self.params.dao_retries or self.preferred_parent is None:
            del self.pending_dao[seq]
            return
        p.tries += 1
        p.parent = self.preferred_parent
        self.send_control(ControlMessage(MsgKind.DAO, body=DaoBody(seq, p.target)), p.parent)
        self.world.schedule(self.params.dao_retry_s * US_PER_S, EventKind.TIMER_FIRE, self._dao_retry, seq)

    def handle_dao(self, dao: DaoBody, sender: Hashable) -> None:
        self.routes[dao.prefix] = sender
        self.send_control(ControlMessage(MsgKind.DAO_ACK, body=DaoAckBody(dao.seq, 0)), sender)
        if not self.is_root:
            self.send_dao(dao.prefix)

    def handle_dao_ack(self, ack: DaoAckBody, sender: Hashable) -> None:
        p = self.pending_dao.get(ack.seq)
        if p is not None and p.parent == sender:
            del self.pending_dao[ack.seq]

    # -- data plane --------------------------------------------------------

    def generate_data(self) -> None:
        if not self.active:
            return
        self.report.data_sent += 1
        pkt = DATA_HEADER.pack(self.node_id, self.data_seq & 0xFFFF, self.world.now)
        self.data_seq += 1
        self._seen_data.add(DATA_HEADER.unpack(pkt)[:2])
        if self.preferred_parent is None:
            self.report.data_dropped += 1
            return
        self._enqueue(pkt)

    def on_data(self, frame: Frame) -> None:
        origin, seq, created = DATA_HEADER.unpack(frame.data)
        if (origin, seq) in self._seen_data:
            return  # a copy of something already handled
        self._seen_data.add((origin, seq))
        if self.is_root:
            self.report.record_delivery(self.world.now - created)
            return
        self._enqueue(frame.data)

    def _enqueue(self, pkt: bytes) -> None:
        if len(self.queue) >= self.params.queue_capacity:
            self.report.data_dropped += 1
            return
        self.queue.append(pkt)
        if not self._tx_busy:
            self._send_head()

    def _send_head(self) -> None:
        if not self.active:
            return
        while self.queue and self.preferred_parent is None:
            self._pop_head()
            self.report.data_dropped += 1
        if not self.queue:
            self._tx_busy = False
            self._tx_attempts = 0
            return
        self._tx_busy = True
        parent = self.preferred_parent
        p = self.params
        delay = int((p.hop_delay_ms + self._jitter.uniform(0.0, p.hop_jitter_ms)) * US_PER_MS)
        frame = Frame(self.node_id, parent, self.queue[0], self.world.now, is_data=True,
                      emitter=self.node_id, origin_pos=self.position)
        acked = parent in self.world.transmit(frame, delay)
        self.world.schedule(delay, EventKind.TIMER_FIRE, self._on_data_ack, acked, parent)

    def _on_data_ack(self, acked: bool, parent: Hashable) -> None:
        if not self.active:
            return
        if acked:
            self._pop_head()
            self._send_head()
            return
        self._tx_attempts += 1
        p = self.params
        if self._tx_attempts < p.data_max_tx:
            backoff = p.data_retry_s * 2 ** (self._tx_attempts - 1)
            self.world.schedule(backoff * US_PER_S, EventKind.TIMER_FIRE, self._send_head)
            return
        self._tx_attempts = 0
        self.link_failed(parent)
        if self.preferred_parent is None or self._reroutes >= p.data_reroutes:
            self._pop_head()
            self.report.data_dropped += 1
        else:
            self._reroutes += 1  # same packet, next parent
        self._send_head()

    def _pop_head(self) -> None:
        self.queue.popleft()
        self._tx_attempts = 0
        self._reroutes = 0

    def link_failed(self, neighbor: Hashable) -> None:
        """Neighbor unreachability: forget what it advertised and ignore it for a
        hold period; only a fresh DIO after that can bring it back."""
        hold = int(self.params.parent_hold_s * US_PER_S)
        self.held_until[neighbor] = self.world.now + hold
        self.candidates.pop(neighbor, None)
        if neighbor == self.preferred_parent:
            self.reselect()
        self.world.schedule(hold, EventKind.TIMER_FIRE, self.reselect)
