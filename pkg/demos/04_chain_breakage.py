"""
One lost frame breaks a CSM chain
=================================

A root and a single leaf.  The leaf's first DAO is removed from the air; its
retries are coded with a value the root never learned.
"""

from rplcsm import DEFAULT_PRESET, SecureMode
from rplcsm.config import NodeSpec
from rplcsm.experiment import build_world, end_time_us

pair = (NodeSpec(0, 30.0, 5.0, True), NodeSpec(1, 30.0, 40.0))
cfg = DEFAULT_PRESET.with_(mode=SecureMode.CSM, topology=pair, loss_prob=0.0)
rnd = build_world(cfg, trace=True)

lost = []


def drop_first_unicast_to_root(frame, receiver):
    if lost or frame.is_data or frame.dst != 0:
        return False
    lost.append(frame)
    return True


rnd.world.drop_filter = drop_first_unicast_to_root
report = rnd.world.run(end_time_us(cfg))

for rec in rnd.world.trace:
    if rec.receiver == 0 and rec.src == 1 and not rec.broadcast:
        print(f"t={rec.time / 1e6:7.3f}s  root <- leaf unicast: {rec.outcome}")
print(f"sent {report.ctrl_sent}, accepted {report.ctrl_received}")
