"""
Watching a DODAG form
=====================

One lossless round on the default seven-node layout, printed as a tree.
"""

from rplcsm import DEFAULT_PRESET
from rplcsm.experiment import build_world, end_time_us

cfg = DEFAULT_PRESET.with_(loss_prob=0.0, round_duration_min=5)
rnd = build_world(cfg)
report = rnd.world.run(end_time_us(cfg))

# each node points at its preferred parent; rank grows with every hop
children = {}
for node in rnd.nodes.values():
    children.setdefault(node.preferred_parent, []).append(node)


def show(node, depth=0):
    print("  " * depth + f"node {node.node_id}  rank {node.rank}  at {node.position}")
    for child in sorted(children.get(node.node_id, []), key=lambda n: n.node_id):
        show(child, depth + 1)


show(rnd.nodes[cfg.root.node_id])
print(f"\ndelivered {report.data_delivered}/{report.data_sent} packets, "
      f"{report.ctrl_sent} control frames sent, {report.ctrl_received} accepted")
