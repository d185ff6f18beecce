"""
A wormhole against PSMrp and CSM
================================

Two colluding radios pipe frames between the root's neighbourhood and a
distant leaf.  The consistency check cannot tell a tunnel from a real link;
chaining can, because the tunnelled copy always arrives after the original.
"""

from collections import Counter

from rplcsm import DEFAULT_PRESET, SecureMode
from rplcsm.config import SCENARIOS, NodeSpec
from rplcsm.experiment import build_world, end_time_us

line = (NodeSpec(0, 5.0, 5.0, True), NodeSpec(1, 5.0, 45.0), NodeSpec(2, 5.0, 84.0))
for mode in (SecureMode.PSMRP, SecureMode.CSM):
    cfg = DEFAULT_PRESET.with_(mode=mode, attack=SCENARIOS["wormhole"], loss_prob=0.0, topology=line,
                             adversary_positions=((20.0, 10.0), (20.0, 80.0)), round_duration_min=6)
    rnd = build_world(cfg, trace=True)
    rnd.world.run(end_time_us(cfg))
    seen = Counter(r.outcome for r in rnd.world.trace if r.emitter in rnd.adversary.emitter_ids)
    print(f"{mode.value}: tunnelled frames -> {dict(seen)}; leaf 2's parent is {rnd.nodes[2].preferred_parent}")
