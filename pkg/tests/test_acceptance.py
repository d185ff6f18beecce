"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``criterion N: PASS|FAIL`` line with the measured
numbers, then asserts.  Run with ``pytest -v tests/test_acceptance.py``.
"""

import filecmp
import math
import random
import time

import pytest

from rplcsm import rpl
from rplcsm.adversary import AttackClass, Locus, ThreatVerdict, in_threat_period
from rplcsm.chain import encode_code, keystream_xor
from rplcsm.config import DEFAULT_PRESET, SCENARIOS, NodeSpec
from rplcsm.experiment import build_world, end_time_us, run_experiment, run_matrix
from rplcsm.secmode import DropReason, SecureMode, sim_cipher
from rplcsm.wire import MsgKind, decode_wire

UM, PSM, PSMRP, CSM = SecureMode.UM, SecureMode.PSM, SecureMode.PSMRP, SecureMode.CSM
DROPS = {r.value for r in DropReason}


class Verdict:
    """Collects named checks and prints one summary line for the criterion."""

    def __init__(self, number, capsys):
        self.number, self.capsys, self.checks = number, capsys, []

    def check(self, name, ok, detail=""):
        self.checks.append((name, bool(ok), detail))

    def finish(self):
        failed = [c for c in self.checks if not c[1]]
        parts = "; ".join(f"{n}{' ' + d if d else ''}{'' if ok else ' [failed]'}" for n, ok, d in self.checks)
        with self.capsys.disabled():
            print(f"\ncriterion {self.number}: {'FAIL' if failed else 'PASS'} ({parts})")
        assert not failed, "failed checks: " + ", ".join(n for n, _, _ in failed)


@pytest.fixture
def verdict(capsys):
    return lambda n: Verdict(n, capsys)


@pytest.fixture(scope="module")
def matrix(tmp_path_factory):
    out = tmp_path_factory.mktemp("matrix_a")
    t0 = time.perf_counter()
    results = run_matrix(DEFAULT_PRESET, str(out))
    elapsed = time.perf_counter() - t0
    agg = {(r.scenario, r.mode): r.aggregate for r in results}
    return {"dir": out, "elapsed": elapsed, "agg": agg}


def m(matrix, scenario, mode, name):
    return matrix["agg"][(scenario, mode)].mean(name)


def test_criterion_1_no_attack_pdr(matrix, verdict):
    v = verdict(1)
    for mode in SecureMode:
        p = m(matrix, "none", mode, "pdr")
        v.check(f"{mode.value} pdr>=0.98", p >= 0.98, f"{p:.3f}")
    v.check("full matrix <60s", matrix["elapsed"] < 60, f"{matrix['elapsed']:.1f}s")
    v.finish()


def test_criterion_2_neighbor_attack_pdr(matrix, verdict):
    v = verdict(2)
    um, psm = m(matrix, "neighbor", UM, "pdr"), m(matrix, "neighbor", PSM, "pdr")
    psm_clean = m(matrix, "none", PSM, "pdr")
    v.check("UM<=0.90", um <= 0.90, f"{um:.3f}")
    v.check("UM<PSM<PSM(no attack)", um < psm < psm_clean, f"{um:.3f}<{psm:.3f}<{psm_clean:.3f}")
    for mode in (PSMRP, CSM):
        p = m(matrix, "neighbor", mode, "pdr")
        v.check(f"{mode.value}>=0.98", p >= 0.98, f"{p:.3f}")
    v.finish()


def test_criterion_3_latency_ordering(matrix, verdict):
    v = verdict(3)
    lat = {mode: m(matrix, "neighbor", mode, "mean_latency_ms") for mode in SecureMode}
    best = max(lat[PSMRP], lat[CSM])
    v.check("UM>PSM", lat[UM] > lat[PSM], f"{lat[UM]:.0f}ms vs {lat[PSM]:.0f}ms")
    v.check("PSM>max(PSMrp,CSM)", lat[PSM] > best, f"{lat[PSM]:.0f}ms vs {best:.0f}ms")
    v.check("PSMrp,CSM<1s", best < 1000, f"{best:.0f}ms")
    v.finish()


def test_criterion_4_control_counts(matrix, verdict):
    v = verdict(4)
    lossless = DEFAULT_PRESET.with_(loss_prob=0.0)
    for mode in (UM, PSM, PSMRP):
        agg = run_experiment(lossless.with_(mode=mode)).aggregate
        rx, tx = agg.mean("ctrl_received"), agg.mean("ctrl_sent")
        v.check(f"lossless {mode.value} received>sent", rx > tx, f"{rx:.0f}>{tx:.0f}")
    rx = {mode: m(matrix, "neighbor", mode, "ctrl_received") for mode in SecureMode}
    v.check("attack PSM>PSMrp", rx[PSM] > rx[PSMRP], f"{rx[PSM]:.0f}>{rx[PSMRP]:.0f}")
    v.check("attack CSM lowest", rx[CSM] == min(rx.values()) and list(rx.values()).count(rx[CSM]) == 1,
            f"{rx[CSM]:.0f} among {sorted(round(x) for x in rx.values())}")
    v.finish()


PAIR_TOPOLOGY = (NodeSpec(0, 30.0, 5.0, True), NodeSpec(1, 30.0, 40.0))


def test_criterion_5_chain_breakage(verdict):
    # a lone root/leaf pair: every control frame has exactly one receiver, so
    # the sent/received comparison measures the breakage and nothing else
    v = verdict(5)
    cfg = DEFAULT_PRESET.with_(mode=CSM, topology=PAIR_TOPOLOGY, loss_prob=0.0, rounds=1)
    rnd = build_world(cfg, 0, trace=True)
    key = rnd.nodes[1].mode_state.key
    dropped = []

    def drop_first_dao(frame, receiver):
        if dropped or frame.is_data or frame.src != 1 or frame.dst != 0:
            return False
        # first message of the flow is coded with zero, so the key alone opens it
        plain = frame.data[:8] + sim_cipher(key, int.from_bytes(frame.data[4:8], "big"), frame.data[8:])
        dropped.append((rnd.world.now, decode_wire(plain).kind))
        return True

    rnd.world.drop_filter = drop_first_dao
    report = rnd.world.run(end_time_us(cfg))
    v.check("dropped one DAO", [k for _, k in dropped] == [MsgKind.DAO])
    later = [r.outcome for r in rnd.world.trace
             if r.receiver == 0 and r.src == 1 and not r.broadcast and r.time > dropped[0][0]]
    v.check("all later leaf->root UC frames NonDecodableCode",
            later and set(later) == {DropReason.NON_DECODABLE_CODE.value}, f"{len(later)} frames")
    v.check("received<sent", report.ctrl_received < report.ctrl_sent,
            f"{report.ctrl_received}<{report.ctrl_sent}")
    v.finish()


class SendLog:
    """Independent record of every control message a node hands to its radio."""

    def __init__(self, monkeypatch):
        self.sent = []
        orig = rpl.Node.send_control

        def spy(node, msg, dest=rpl.BROADCAST):
            first_mc = dest is None and node.mode_state.sc_table.mc_tx == 0
            self.sent.append((node.world.now, node, msg.kind, dest, first_mc))
            orig(node, msg, dest)

        monkeypatch.setattr(rpl.Node, "send_control", spy)


WORMHOLE_TOPOLOGY = (NodeSpec(0, 5.0, 5.0, True), NodeSpec(1, 5.0, 45.0), NodeSpec(2, 5.0, 84.0))


def _wormhole_round(mode):
    cfg = DEFAULT_PRESET.with_(mode=mode, attack=SCENARIOS["wormhole"], loss_prob=0.0,
                             topology=WORMHOLE_TOPOLOGY, adversary_positions=((20.0, 10.0), (20.0, 80.0)),
                             round_duration_min=6.0)
    rnd = build_world(cfg, 0, trace=True)
    rnd.world.run(end_time_us(cfg))
    return rnd


def test_criterion_6_security_properties(monkeypatch, verdict):
    v = verdict(6)

    # (a) coding algebra over random cases
    rng = random.Random(6)
    ok = True
    for _ in range(10_000):
        data, sc = rng.randbytes(rng.randrange(0, 64)), rng.getrandbits(32)
        code = rng.randrange(256)
        ok &= keystream_xor(keystream_xor(data, sc), sc) == data and keystream_xor(data, 0) == data
        ok &= encode_code(encode_code(code, sc), sc) == code and encode_code(code, 0) == code
    v.check("(a) involution+identity x1e4", ok)

    # (b) replay behaviour against an independent log of what nodes sent
    log = SendLog(monkeypatch)
    base = DEFAULT_PRESET.with_(attack=SCENARIOS["neighbor"], loss_prob=0.0)
    for mode in (UM, PSM, CSM):
        log.sent.clear()
        cfg = base.with_(mode=mode)
        rnd = build_world(cfg)
        rnd.world.run(end_time_us(cfg))
        adv = rnd.adversary
        start, pos = adv.start_time, adv.config.positions[0]
        dios = [s for s in log.sent if s[0] >= start and s[2] is MsgKind.DIO and s[1].legit
                and math.dist(s[1].position, pos) <= cfg.range_m]
        if mode is CSM:
            expect = sum(1 for s in dios if s[4])
            v.check("(b) CSM replays none", adv.replayed == expect == 0 and len(dios) > 0,
                    f"{adv.replayed} of {len(dios)} DIOs")
        else:
            v.check(f"(b) {mode.value} replays all", adv.replayed == len(dios) > 0,
                    f"{adv.replayed} of {len(dios)}")
    monkeypatch.undo()

    # (c) PSMrp: neighbor replays never accepted, wormhole exchange accepted
    cfg = base.with_(mode=PSMRP)
    rnd = build_world(cfg, 0, trace=True)
    rnd.world.run(end_time_us(cfg))
    replays = [r.outcome for r in rnd.world.trace if r.emitter in rnd.adversary.emitter_ids]
    v.check("(c) PSMrp drops replays", replays and set(replays) <= DROPS, f"{len(replays)} dropped")
    wh = _wormhole_round(PSMRP)
    tunneled = {r.outcome for r in wh.world.trace if r.receiver == 2 and r.src == 0
                and r.emitter in wh.adversary.emitter_ids}
    v.check("(c) PSMrp accepts tunneled DIO+CC", {"DIO", "CC_RESP"} <= tunneled, str(sorted(tunneled)))

    # (d) CSM drops every tunneled frame
    wh = _wormhole_round(CSM)
    outcomes = [r.outcome for r in wh.world.trace if r.emitter in wh.adversary.emitter_ids]
    v.check("(d) CSM drops tunneled frames", outcomes and set(outcomes) <= DROPS
            and DropReason.NON_DECODABLE_CODE.value in outcomes, f"{len(outcomes)} dropped")

    # (e) taxonomy, written out case by case
    inf, zero, uc = ThreatVerdict.INFINITY, ThreatVerdict.ZERO, ThreatVerdict.UNTIL_FIRST_UC
    table = {
        (UM, Locus.INTERNAL, AttackClass.REPLAY): inf,
        (UM, Locus.INTERNAL, AttackClass.FULL_MESSAGE): inf,
        (UM, Locus.EXTERNAL, AttackClass.REPLAY): inf,
        (UM, Locus.EXTERNAL, AttackClass.FULL_MESSAGE): inf,
        (PSM, Locus.INTERNAL, AttackClass.REPLAY): inf,
        (PSM, Locus.INTERNAL, AttackClass.FULL_MESSAGE): inf,
        (PSM, Locus.EXTERNAL, AttackClass.REPLAY): inf,
        (PSM, Locus.EXTERNAL, AttackClass.FULL_MESSAGE): zero,
        (CSM, Locus.INTERNAL, AttackClass.REPLAY): uc,
        (CSM, Locus.INTERNAL, AttackClass.FULL_MESSAGE): uc,
        (CSM, Locus.EXTERNAL, AttackClass.REPLAY): zero,
        (CSM, Locus.EXTERNAL, AttackClass.FULL_MESSAGE): zero,
    }
    wrong = [k for k, want in table.items() if in_threat_period(*k) is not want]
    v.check("(e) taxonomy 12/12", not wrong, str(wrong) if wrong else "")
    v.finish()


def test_criterion_7_mode_transparency(verdict):
    v = verdict(7)
    for seed in range(5):
        base = DEFAULT_PRESET.with_(loss_prob=0.0, seed=seed)
        finals = {}
        for mode in SecureMode:
            cfg = base.with_(mode=mode)
            rnd = build_world(cfg)
            rnd.world.run(end_time_us(cfg))
            finals[mode] = {n: (node.preferred_parent, node.rank) for n, node in rnd.nodes.items()}
        same = all(f == finals[UM] for f in finals.values())
        v.check(f"seed {seed}", same)
    v.finish()


def test_criterion_8_determinism(matrix, tmp_path, verdict):
    v = verdict(8)
    run_matrix(DEFAULT_PRESET, str(tmp_path))
    a, b = matrix["dir"], tmp_path
    names = sorted(p.name for p in a.iterdir())
    match, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    v.check("byte-identical trees", names == sorted(p.name for p in b.iterdir()) and not mismatch and not errors,
            f"{len(match)} files")
    v.finish()
