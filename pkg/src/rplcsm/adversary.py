"""External adversaries (DIO replayer, two-ended wormhole) and the
in-threat-period classifier.

Neither adversary holds a key.  They only look at the clear Type/Code bytes
and move frames around verbatim.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional

from .netsim import EventKind, Frame, US_PER_MS
from .secmode import SecureMode
from .wire import CodeFamily, classify_code

TUNNEL_DELAY_US = 1 * US_PER_MS


class AttackKind(enum.Enum):
    NEIGHBOR = "NeighborAttack"
    WORMHOLE = "Wormhole"


@dataclass(frozen=True)
class AdversaryConfig:
    kind: AttackKind
    positions: tuple  # one point, or two wormhole endpoints
    start_time_us: int = 120_000_000
    has_key: bool = False

    def __post_init__(self):
        want = 2 if self.kind is AttackKind.WORMHOLE else 1
        if len(self.positions) != want:
            raise ValueError(f"{self.kind.value} needs {want} position(s), got {len(self.positions)}")
        if self.has_key:
            raise ValueError("only external (keyless) adversaries are modelled")
        if self.start_time_us < 0:
            raise ValueError("start_time must be non-negative")


def looks_like_dio(data: bytes) -> bool:
    """What a keyless observer can tell from the Code byte alone."""
    if len(data) < 2:
        return False
    cls = classify_code(data[1])
    return cls is not None and cls.family is CodeFamily.DIO


class _Adversary:
    def __init__(self, config: AdversaryConfig, name: str = "adv"):
        self.config = config
        self.emitter_ids = tuple((name, i) for i in range(len(config.positions)))
        self.overheard = 0
        self.replayed = 0

    @property
    def start_time(self) -> int:
        return self.config.start_time_us

    def ears(self, now: int) -> list:
        if now < self.start_time:
            return []
        return list(enumerate(self.config.positions))

    def _copy_at(self, frame: Frame, idx: int, now: int) -> Frame:
        return Frame(frame.src, frame.dst, frame.data, now, frame.is_data,
                     emitter=self.emitter_ids[idx], origin_pos=tuple(self.config.positions[idx]))


class NeighborAttacker(_Adversary):
    """Rebroadcasts every frame whose Code reads as DIO, once, right away."""

    def __init__(self, config: AdversaryConfig, name: str = "adv"):
        if config.kind is not AttackKind.NEIGHBOR:
            raise ValueError("NeighborAttacker needs a NeighborAttack config")
        super().__init__(config, name)
        self.overheard_dio = 0

    def overhear(self, world, frame: Frame, idx: int) -> None:
        self.overheard += 1
        replay = neighbor_attack_on_overhear(self, frame, world.now)
        if replay is not None:
            self.replayed += 1
            world.transmit(replay)


def neighbor_attack_on_overhear(adv: NeighborAttacker, frame: Frame, now: int) -> Optional[Frame]:
    if now < adv.start_time or frame.is_data or not looks_like_dio(frame.data):
        return None
    adv.overheard_dio += 1
    return adv._copy_at(frame, 0, now)


class Wormhole(_Adversary):
    """Bit pipe between two far-apart points, both directions."""

    def __init__(self, config: AdversaryConfig, name: str = "wh"):
        if config.kind is not AttackKind.WORMHOLE:
            raise ValueError("Wormhole needs a Wormhole config")
        super().__init__(config, name)

    def overhear(self, world, frame: Frame, idx: int) -> None:
        self.overheard += 1
        out = wormhole_tunnel(self, frame, idx, world.now)
        if out is not None:
            delay, copy = out
            self.replayed += 1
            world.schedule(delay, EventKind.FRAME_DELIVERY, world.transmit, copy)


def wormhole_tunnel(wh: Wormhole, frame: Frame, idx: int, now: int) -> Optional[tuple]:
    """Returns (delay_us, frame to emit at the opposite endpoint)."""
    if now < wh.start_time:
        return None
    far = 1 - idx
    return TUNNEL_DELAY_US, wh._copy_at(frame, far, now + TUNNEL_DELAY_US)


class ThreatVerdict(enum.Enum):
    ZERO = "Zero"
    UNTIL_FIRST_UC = "UntilFirstUnicastMessage"
    INFINITY = "Infinity"


class Locus(enum.Enum):
    INTERNAL = "Internal"
    EXTERNAL = "External"


class AttackClass(enum.Enum):
    REPLAY = "Replay/IdentityCloning"
    FULL_MESSAGE = "FullMessageAttack"


def in_threat_period(mode: SecureMode, locus: Locus, attack: AttackClass, *,
                     two_way: bool = False) -> ThreatVerdict:
    """How long an adversary can understand or exploit control traffic.

    PSMrp behaves like PSM except that its Consistency Check closes one-way
    external replay; a two-way channel (wormhole) reopens it.
    """
    if mode is SecureMode.UM:
        return ThreatVerdict.INFINITY
    if mode is SecureMode.CSM:
        return ThreatVerdict.UNTIL_FIRST_UC if locus is Locus.INTERNAL else ThreatVerdict.ZERO
    if locus is Locus.INTERNAL:
        return ThreatVerdict.INFINITY
    if attack is AttackClass.FULL_MESSAGE:
        return ThreatVerdict.ZERO
    if mode is SecureMode.PSMRP and not two_way:
        return ThreatVerdict.ZERO
    return ThreatVerdict.INFINITY
