"""
The Neighbor attack across the four modes
=========================================

An outsider rebroadcasts every frame whose Code byte says DIO.  Victims
then believe far-away nodes are next door and pick them as parents.
"""

from rplcsm import DEFAULT_PRESET, SecureMode, run_experiment
from rplcsm.config import SCENARIOS

print(f"{'mode':6} {'scenario':9} {'PDR':>6} {'latency ms':>11} {'ctrl rx':>8}")
for scenario in ("none", "neighbor"):
    for mode in SecureMode:
        agg = run_experiment(DEFAULT_PRESET.with_(mode=mode, attack=SCENARIOS[scenario], rounds=5)).aggregate
        print(f"{mode.value:6} {scenario:9} {agg.mean('pdr'):6.3f} "
              f"{agg.mean('mean_latency_ms'):11.1f} {agg.mean('ctrl_received'):8.0f}")

# PSMrp turns replays into consistency-check failures; CSM hides the DIO code so
# nothing gets replayed in the first place.
