import pytest
from hypothesis import given, settings, strategies as st

from rplcsm.adversary import AttackKind
from rplcsm.config import (
    DEFAULT_NEIGHBOR_POS, DEFAULT_TOPOLOGY, DEFAULT_PRESET, ConfigError, NodeSpec, emit_config, parse_config,
)
from rplcsm.secmode import SecureMode


def test_empty_document_is_the_preset():
    assert parse_config("") == DEFAULT_PRESET


def test_preset_values():
    p = DEFAULT_PRESET
    assert (p.rounds, p.round_duration_min, p.workload_ppm, p.adversary_start_s) == (10, 20.0, 1.0, 120.0)
    assert p.area == (60.0, 85.0) and len(p.topology) == 7 and p.root.node_id == 0
    assert p.resolved_adversary_positions() == DEFAULT_NEIGHBOR_POS


def test_overrides():
    cfg = parse_config("""
[scenario]
mode = CSM
attack = neighbor
rounds = 3
[radio]
loss_prob = 0
[rpl]
hysteresis = 100
[adversary]
positions = 10, 10
""")
    assert cfg.mode is SecureMode.CSM and cfg.attack is AttackKind.NEIGHBOR and cfg.rounds == 3
    assert cfg.loss_prob == 0.0 and cfg.rpl.hysteresis == 100
    assert cfg.adversary_positions == ((10.0, 10.0),)
    assert cfg.topology == DEFAULT_TOPOLOGY


@pytest.mark.parametrize("text,fragment", [
    ("[scenario]\nrounds = 0", "rounds"),
    ("[topology]\n0 = 1, 1, root\n1 = 2, 2, root", "exactly one root"),
    ("[topology]\n0 = 1, 1", "exactly one root"),
    ("[topology]\n0 = 1, 1, root\n1 = 70, 2", "outside"),
    ("[scenario]\nattack = neighbor\n[adversary]\npositions = 100, 100", "outside"),
    ("[scenario]\nattack = wormhole\n[adversary]\npositions = 1, 1", "position"),
    ("[scenario]\ncolour = red", "unknown key"),
    ("[rpl]\nfoo = 1", "unknown key"),
    ("[weather]\nrain = 1", "unknown section"),
    ("[scenario]\nmode = asm", "mode"),
    ("[scenario]\nrounds = many", "cannot parse"),
    ("[radio]\nloss_prob = 1", "loss_prob"),
    ("not an ini file", "syntax"),
])
def test_rejections(text, fragment):
    with pytest.raises(ConfigError, match=fragment):
        parse_config(text)


coord = st.floats(0.0, 60.0, allow_nan=False)


@settings(max_examples=100)
@given(
    st.sampled_from(list(SecureMode)),
    st.sampled_from([None, AttackKind.NEIGHBOR]),
    st.integers(1, 50),
    st.integers(0, 2**64 - 1),
    st.floats(0.0, 0.99),
    st.lists(st.tuples(coord, coord), min_size=1, max_size=6),
)
def test_emit_parse_round_trip(mode, attack, rounds, seed, loss, points):
    topo = tuple(NodeSpec(i, x, y, i == 0) for i, (x, y) in enumerate(points))
    cfg = DEFAULT_PRESET.with_(mode=mode, attack=attack, rounds=rounds, seed=seed, loss_prob=loss,
                             topology=topo, adversary_positions=((12.5, 40.25),))
    assert parse_config(emit_config(cfg)) == cfg
