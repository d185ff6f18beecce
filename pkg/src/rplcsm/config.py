"""Scenario configuration: dataclasses, the default preset, and an INI codec.

Config files use ``configparser`` syntax::

    [scenario]
    mode = csm
    attack = neighbor
    rounds = 10

    [topology]
    0 = 30, 5, root
    1 = 15, 25

    [adversary]
    positions = 24, 21
    start_s = 120

Sections ``[radio]``, ``[rpl]`` and ``[energy]`` override individual
constants.  A ``[topology]`` section replaces the default node list wholesale.
Unknown sections or keys are errors.
"""

from __future__ import annotations

import configparser
import dataclasses
from dataclasses import dataclass, field
from typing import Optional

from .adversary import AttackKind
from .metrics import EnergyModel
from .rpl import RplParams
from .secmode import SecureMode


class ConfigError(ValueError):
    pass


SCENARIOS = {"none": None, "neighbor": AttackKind.NEIGHBOR, "wormhole": AttackKind.WORMHOLE}


@dataclass(frozen=True)
class NodeSpec:
    node_id: int
    x: float
    y: float
    is_root: bool = False

    @property
    def position(self) -> tuple:
        return (self.x, self.y)


DEFAULT_TOPOLOGY = (
    NodeSpec(0, 30.0, 5.0, True),
    NodeSpec(1, 15.0, 25.0),
    NodeSpec(2, 45.0, 25.0),
    NodeSpec(3, 30.0, 45.0),
    NodeSpec(4, 10.0, 55.0),
    NodeSpec(5, 50.0, 55.0),
    NodeSpec(6, 30.0, 75.0),
)
DEFAULT_NEIGHBOR_POS = ((24.0, 21.0),)
DEFAULT_WORMHOLE_POS = ((20.0, 10.0), (40.0, 80.0))


@dataclass
class ScenarioConfig:
    mode: SecureMode = SecureMode.UM
    attack: Optional[AttackKind] = None
    rounds: int = 10
    round_duration_min: float = 20.0
    seed: int = 20190101
    workload_ppm: float = 1.0
    area: tuple = (60.0, 85.0)
    topology: tuple = DEFAULT_TOPOLOGY
    adversary_positions: Optional[tuple] = None  # None: preset for the attack kind
    adversary_start_s: float = 120.0
    range_m: float = 45.0
    loss_prob: float = 0.02
    ctrl_delay_ms: float = 10.0
    drain_s: float = 60.0
    rpl: RplParams = field(default_factory=RplParams)
    energy: EnergyModel = field(default_factory=EnergyModel)

    def __post_init__(self):
        validate(self)

    @property
    def scenario(self) -> str:
        return next(k for k, v in SCENARIOS.items() if v is self.attack)

    @property
    def root(self) -> NodeSpec:
        return next(n for n in self.topology if n.is_root)

    def resolved_adversary_positions(self) -> tuple:
        if self.adversary_positions is not None:
            return self.adversary_positions
        return DEFAULT_WORMHOLE_POS if self.attack is AttackKind.WORMHOLE else DEFAULT_NEIGHBOR_POS

    def with_(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)


def validate(cfg: ScenarioConfig) -> None:
    if cfg.rounds < 1:
        raise ConfigError("rounds must be at least 1")
    if cfg.round_duration_min <= 0:
        raise ConfigError("round_duration_min must be positive")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    if cfg.workload_ppm <= 0:
        raise ConfigError("workload_ppm must be positive")
    if not 0.0 <= cfg.loss_prob < 1.0:
        raise ConfigError("loss_prob must be in [0, 1)")
    if cfg.range_m <= 0:
        raise ConfigError("range_m must be positive")
    roots = [n for n in cfg.topology if n.is_root]
    if len(roots) != 1:
        raise ConfigError(f"topology needs exactly one root, found {len(roots)}")
    ids = [n.node_id for n in cfg.topology]
    if len(set(ids)) != len(ids):
        raise ConfigError("duplicate node ids in topology")
    if any(not 0 <= i < 0xFFFF for i in ids):
        raise ConfigError("node ids must fit in 16 bits")
    w, h = cfg.area
    points = [(f"node {n.node_id}", n.position) for n in cfg.topology]
    if cfg.attack is not None:
        points += [("adversary", p) for p in cfg.resolved_adversary_positions()]
        want = 2 if cfg.attack is AttackKind.WORMHOLE else 1
        if len(cfg.resolved_adversary_positions()) != want:
            raise ConfigError(f"{cfg.attack.value} needs {want} adversary position(s)")
    for name, (x, y) in points:
        if not (0 <= x <= w and 0 <= y <= h):
            raise ConfigError(f"{name} at ({x:g}, {y:g}) lies outside the {w:g} x {h:g} area")


DEFAULT_PRESET = ScenarioConfig()

# -- INI codec --------------------------------------------------------------

_SCENARIO_KEYS = ("mode", "attack", "rounds", "round_duration_min", "seed", "workload_ppm",
                  "area_width", "area_length", "drain_s")
_RADIO_KEYS = ("range_m", "loss_prob", "ctrl_delay_ms")
_ADV_KEYS = ("positions", "start_s")


def _num(section: str, key: str, raw: str, kind=float):
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} as {kind.__name__}") from None


def _points(raw: str) -> tuple:
    out = []
    for chunk in raw.split(";"):
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 2:
            raise ConfigError(f"[adversary] positions: expected 'x, y[; x, y]', got {raw!r}")
        out.append((_num("adversary", "positions", parts[0]), _num("adversary", "positions", parts[1])))
    return tuple(out)


def _override(section: str, obj, items) -> object:
    names = {f.name: f for f in dataclasses.fields(obj)}
    changes = {}
    for key, raw in items:
        if key not in names:
            raise ConfigError(f"unknown key [{section}] {key}")
        changes[key] = _num(section, key, raw, type(getattr(obj, key)))
    return dataclasses.replace(obj, **changes)


def parse_config(text: str, base: ScenarioConfig = DEFAULT_PRESET) -> ScenarioConfig:
    """Parse an INI document on top of ``base`` (the default preset)."""
    cp = configparser.ConfigParser(interpolation=None)
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"bad config syntax: {exc}") from None

    known = {"scenario", "radio", "adversary", "topology", "rpl", "energy"}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(f"unknown section [{sec}]")

    kw = {}
    area = list(base.area)
    if cp.has_section("scenario"):
        for key, raw in cp.items("scenario"):
            if key not in _SCENARIO_KEYS:
                raise ConfigError(f"unknown key [scenario] {key}")
            if key == "mode":
                try:
                    kw["mode"] = SecureMode(raw.strip().lower())
                except ValueError:
                    raise ConfigError(f"[scenario] mode: unknown mode {raw!r}") from None
            elif key == "attack":
                if raw.strip().lower() not in SCENARIOS:
                    raise ConfigError(f"[scenario] attack: expected one of {sorted(SCENARIOS)}")
                kw["attack"] = SCENARIOS[raw.strip().lower()]
            elif key in ("rounds", "seed"):
                kw[key] = _num("scenario", key, raw, int)
            elif key == "area_width":
                area[0] = _num("scenario", key, raw)
            elif key == "area_length":
                area[1] = _num("scenario", key, raw)
            else:
                kw[key] = _num("scenario", key, raw)
    kw["area"] = tuple(area)

    if cp.has_section("radio"):
        for key, raw in cp.items("radio"):
            if key not in _RADIO_KEYS:
                raise ConfigError(f"unknown key [radio] {key}")
            kw[key] = _num("radio", key, raw)

    if cp.has_section("adversary"):
        for key, raw in cp.items("adversary"):
            if key not in _ADV_KEYS:
                raise ConfigError(f"unknown key [adversary] {key}")
            if key == "positions":
                kw["adversary_positions"] = _points(raw)
            else:
                kw["adversary_start_s"] = _num("adversary", key, raw)

    if cp.has_section("topology"):
        nodes = []
        for key, raw in cp.items("topology"):
            nid = _num("topology", key, key, int)
            parts = [p.strip() for p in raw.split(",")]
            if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2].lower() != "root"):
                raise ConfigError(f"[topology] {key}: expected 'x, y' or 'x, y, root', got {raw!r}")
            nodes.append(NodeSpec(nid, _num("topology", key, parts[0]),
                                  _num("topology", key, parts[1]), len(parts) == 3))
        kw["topology"] = tuple(nodes)

    if cp.has_section("rpl"):
        kw["rpl"] = _override("rpl", base.rpl, cp.items("rpl"))
    if cp.has_section("energy"):
        kw["energy"] = _override("energy", base.energy, cp.items("energy"))

    return dataclasses.replace(base, **kw)


def emit_config(cfg: ScenarioConfig) -> str:
    """Full INI rendering of ``cfg``; ``parse_config`` reads it back unchanged."""
    lines = [
        "[scenario]",
        f"mode = {cfg.mode.value}",
        f"attack = {cfg.scenario}",
        f"rounds = {cfg.rounds}",
        f"round_duration_min = {cfg.round_duration_min!r}",
        f"seed = {cfg.seed}",
        f"workload_ppm = {cfg.workload_ppm!r}",
        f"area_width = {cfg.area[0]!r}",
        f"area_length = {cfg.area[1]!r}",
        f"drain_s = {cfg.drain_s!r}",
        "",
        "[radio]",
        f"range_m = {cfg.range_m!r}",
        f"loss_prob = {cfg.loss_prob!r}",
        f"ctrl_delay_ms = {cfg.ctrl_delay_ms!r}",
        "",
        "[adversary]",
    ]
    if cfg.adversary_positions is not None:
        lines.append("positions = " + "; ".join(f"{x!r}, {y!r}" for x, y in cfg.adversary_positions))
    lines += [f"start_s = {cfg.adversary_start_s!r}", "", "[topology]"]
    for n in cfg.topology:
        lines.append(f"{n.node_id} = {n.x!r}, {n.y!r}" + (", root" if n.is_root else ""))
    for name, obj in (("rpl", cfg.rpl), ("energy", cfg.energy)):
        lines += ["", f"[{name}]"]
        lines += [f"{f.name} = {getattr(obj, f.name)!r}" for f in dataclasses.fields(obj)]
    return "\n".join(lines) + "\n"
