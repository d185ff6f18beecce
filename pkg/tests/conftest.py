import pytest

from rplcsm.config import NodeSpec, DEFAULT_PRESET


@pytest.fixture
def line_config():
    """root - n1 - n2 stacked vertically; n2 can only reach the root through n1."""
    topo = (NodeSpec(0, 30.0, 5.0, True), NodeSpec(1, 30.0, 40.0), NodeSpec(2, 30.0, 75.0))
    return DEFAULT_PRESET.with_(topology=topo, loss_prob=0.0, rounds=1, round_duration_min=5.0)
