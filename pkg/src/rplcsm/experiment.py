"""Round orchestration and CSV reporting."""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from .adversary import AdversaryConfig, AttackKind, NeighborAttacker, Wormhole
from .config import SCENARIOS, ScenarioConfig
from .metrics import AggregateReport, RoundReport, aggregate_rounds, round_metrics
from .netsim import EventKind, RadioModel, SimulationAbort, US_PER_MS, US_PER_S, World, derive_seed
from .rpl import Node
from .secmode import DropReason, ModeState, SecureMode

DROP_REASONS = tuple(r.value for r in DropReason)
METRIC_COLUMNS = (
    "pdr", "mean_latency_ms", "ctrl_sent", "ctrl_received",
    *(f"ctrl_dropped_{r}" for r in DROP_REASONS),
    "energy_per_delivered_mJ",
)
CSV_COLUMNS = ("scenario", "mode", "round", *METRIC_COLUMNS, *(f"{c}_ci95" for c in METRIC_COLUMNS))
KEY_LEN = 16


@dataclass
class Round:
    world: World
    nodes: dict
    adversary: object = None
    adversary_node: Optional[Node] = None


def round_seed(cfg: ScenarioConfig, index: int) -> int:
    return derive_seed(cfg.seed, "round", index)


def build_world(cfg: ScenarioConfig, index: int = 0, *, trace: bool = False,
                drop_filter: Optional[Callable] = None) -> Round:
    """Set up one round: nodes, adversary, boot and traffic events."""
    radio = RadioModel(cfg.range_m, cfg.loss_prob, int(cfg.ctrl_delay_ms * US_PER_MS))
    world = World(radio, round_seed(cfg, index), cfg.energy, trace)
    world.drop_filter = drop_filter
    mode = cfg.mode
    key = world.stream("network-key").randbytes(KEY_LEN) if mode.keyed else None
    dodag_id = cfg.root.node_id.to_bytes(16, "big")

    def make(nid, pos, *, root=False, legit=True, node_key=key):
        state = ModeState(key=node_key, rng=world.stream("sec", nid))
        node = Node(world, nid, pos, mode=mode, mode_state=state, params=cfg.rpl,
                    is_root=root, legit=legit, dodag_id=dodag_id)
        world.add_node(node)
        return node

    nodes = {n.node_id: make(n.node_id, n.position, root=n.is_root) for n in cfg.topology}
    rnd = Round(world, nodes)

    start_us = int(cfg.adversary_start_s * US_PER_S)
    if cfg.attack is not None:
        adv_cfg = AdversaryConfig(cfg.attack, cfg.resolved_adversary_positions(), start_us)
        if cfg.attack is AttackKind.NEIGHBOR:
            rnd.adversary = NeighborAttacker(adv_cfg)
            # Before the attack it is an ordinary radio device running the
            # same mode, but in keyed modes its key is not the network's.
            bogus = world.stream("adversary-key").randbytes(KEY_LEN) if mode.keyed else None
            adv_id = max(nodes) + 1
            rnd.adversary_node = make(adv_id, adv_cfg.positions[0], legit=False, node_key=bogus)
            rnd.adversary_node.auto_ack = True
            world.schedule_at(start_us, EventKind.ATTACK_START, rnd.adversary_node.deactivate)
        else:
            rnd.adversary = Wormhole(adv_cfg)
        world.add_adversary(rnd.adversary)

    for node in world.nodes.values():
        boot = world.stream("boot", node.node_id).uniform(0.0, cfg.rpl.boot_spread_s)
        world.schedule_at(int(boot * US_PER_S), EventKind.TIMER_FIRE, node.boot)

    period = 60.0 / cfg.workload_ppm
    count = int(round(cfg.round_duration_min * cfg.workload_ppm))
    for spec in cfg.topology:
        if spec.is_root:
            continue
        phase = world.stream("traffic", spec.node_id).uniform(period / 2, period)
        node = nodes[spec.node_id]
        for k in range(count):
            world.schedule_at(int((phase + k * period) * US_PER_S), EventKind.DATA_GENERATION,
                              node.generate_data)
    return rnd


def end_time_us(cfg: ScenarioConfig) -> int:
    return int((cfg.round_duration_min * 60.0 + cfg.drain_s) * US_PER_S)


def run_round(cfg: ScenarioConfig, index: int = 0, **kw) -> RoundReport:
    rnd = build_world(cfg, index, **kw)
    try:
        return rnd.world.run(end_time_us(cfg))
    except SimulationAbort as exc:
        tail = rnd.world.trace[-20:] if rnd.world.trace else []
        lines = "\n".join(map(str, tail))
        raise SimulationAbort(f"round {index}: {exc}" + (f"\nlast events:\n{lines}" if lines else "")) from exc


@dataclass
class ExperimentResult:
    config: ScenarioConfig
    reports: list
    aggregate: AggregateReport

    @property
    def scenario(self) -> str:
        return self.config.scenario

    @property
    def mode(self) -> SecureMode:
        return self.config.mode


def run_experiment(cfg: ScenarioConfig) -> ExperimentResult:
    reports = [run_round(cfg, r) for r in range(cfg.rounds)]
    return ExperimentResult(cfg, reports, aggregate_rounds(reports, DROP_REASONS))


def _fmt(v: Optional[float]) -> str:
    return "" if v is None else format(v, ".6g")


def emit_report(results: Sequence[ExperimentResult], *, per_round: bool = True) -> str:
    """CSV text: one row per round, then one aggregate row per experiment."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    blank = [""] * len(METRIC_COLUMNS)
    for res in results:
        head = [res.scenario, res.mode.value]
        if per_round:
            for i, rep in enumerate(res.reports):
                row = round_metrics(rep, DROP_REASONS)
                w.writerow(head + [i] + [_fmt(row[c]) for c in METRIC_COLUMNS] + blank)
        agg = res.aggregate
        w.writerow(head + ["aggregate"] + [_fmt(agg.mean(c)) for c in METRIC_COLUMNS]
                   + [_fmt(agg.ci95(c)) for c in METRIC_COLUMNS])
    return buf.getvalue()


MATRIX_SCENARIOS = ("none", "neighbor")


def run_matrix(base: ScenarioConfig, out_dir: Optional[str] = None,
               scenarios: Sequence[str] = MATRIX_SCENARIOS) -> list:
    """Every scenario x mode cell with shared topology, workload and seed.

    With ``out_dir`` set, writes one ``<scenario>_<mode>.csv`` per cell plus
    ``summary.csv`` holding the aggregate rows.
    """
    results = [run_experiment(base.with_(attack=SCENARIOS[s], mode=m))
               for s in scenarios for m in SecureMode]
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        for res in results:
            path = os.path.join(out_dir, f"{res.scenario}_{res.mode.value}.csv")
            with open(path, "w", newline="") as fh:
                fh.write(emit_report([res]))
        with open(os.path.join(out_dir, "summary.csv"), "w", newline="") as fh:
            fh.write(emit_report(results, per_round=False))
    return results
