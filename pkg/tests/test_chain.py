import random

import pytest
from hypothesis import given, settings, strategies as st

from rplcsm.chain import (
    CODE_WINDOW, HISTORY_WINDOW, Flow, SCTable, code_mask, encode_code, generate_sc, keystream_xor,
)
from rplcsm.wire import MAPPED_CODES, classify_code

sc32 = st.integers(0, 0xFFFFFFFF)


def naive_xor(data: bytes, sc: int) -> bytes:
    key = [(sc >> s) & 0xFF for s in (24, 16, 8, 0)]
    return bytes(b ^ key[i % 4] for i, b in enumerate(data))


def test_keystream_examples():
    assert keystream_xor(bytes([0xAA, 0xBB]), 0) == bytes([0xAA, 0xBB])
    assert keystream_xor(bytes(4), 0x01020304) == bytes([1, 2, 3, 4])
    assert keystream_xor(bytes(6), 0x01020304) == bytes([1, 2, 3, 4, 1, 2])
    assert keystream_xor(b"", 0xDEADBEEF) == b""


def test_encode_code_examples():
    assert encode_code(0x81, 0) == 0x81
    assert encode_code(0x81, 0x000000FF) == 0x7E
    assert encode_code(encode_code(0x81, 0x12345678), 0x12345678) == 0x81


@settings(max_examples=1000)
@given(st.binary(max_size=300), sc32)
def test_keystream_matches_bytewise_reference(data, sc):
    assert keystream_xor(data, sc) == naive_xor(data, sc)


@settings(max_examples=1000)
@given(st.binary(max_size=300), sc32, sc32)
def test_keystream_algebra(data, a, b):
    assert keystream_xor(keystream_xor(data, a), a) == data
    assert keystream_xor(keystream_xor(data, a), b) == keystream_xor(data, a ^ b)
    assert len(keystream_xor(data, a)) == len(data)


def test_generate_sc_never_zero():
    rng = random.Random(1)
    assert all(generate_sc(rng) != 0 for _ in range(200_000))


def test_generate_sc_avoids_history_value():
    rng = random.Random(2)
    old = 0x5A5A5A5A
    assert all(generate_sc(rng, [old]) != old for _ in range(100_000))


@settings(max_examples=300)
@given(st.lists(sc32.filter(bool), max_size=100), st.integers(0, 2**32))
def test_generate_sc_fresh_within_window(history, seed):
    sc = generate_sc(random.Random(seed), history)
    assert sc != 0 and sc not in history[-HISTORY_WINDOW:]


@settings(max_examples=300)
@given(st.lists(sc32.filter(bool), max_size=CODE_WINDOW), st.integers(0, 2**32))
def test_stale_values_decode_to_unmapped_codes(history, seed):
    # a receiver holding zero or any of the last CODE_WINDOW values sees no mapped code
    sc = generate_sc(random.Random(seed), history)
    for stale in [0, *history]:
        for code in MAPPED_CODES:
            assert classify_code(code ^ code_mask(sc) ^ code_mask(stale)) is None


def test_generate_sc_deterministic():
    a = [generate_sc(random.Random(9)) for _ in range(3)]
    b = [generate_sc(random.Random(9)) for _ in range(3)]
    assert a == b


def test_table_starts_at_zero():
    t = SCTable()
    assert t.lookup_rx("a", Flow.UC) == 0 and t.lookup_rx("a", Flow.MC) == 0
    assert t.tx_value("a", Flow.UC) == 0 and t.tx_value(None, Flow.MC) == 0


def test_install_then_lookup_and_isolation():
    t = SCTable()
    t.install_next_rx("a", Flow.UC, 0x11111111)
    t.install_next_rx("a", Flow.MC, 0x22222222)
    t.install_next_rx("b", Flow.UC, 0x33333333)
    assert t.lookup_rx("a", Flow.UC) == 0x11111111
    assert t.lookup_rx("a", Flow.MC) == 0x22222222
    assert t.lookup_rx("b", Flow.UC) == 0x33333333
    assert t.lookup_rx("b", Flow.MC) == 0
    assert t.lookup_rx("c", Flow.UC) == 0


def test_mc_tx_is_node_wide_and_uc_tx_per_neighbor():
    t = SCTable()
    rng = random.Random(5)
    t.commit_tx("a", Flow.MC, t.fresh_tx("a", Flow.MC, rng))
    assert t.tx_value("b", Flow.MC) == t.tx_value(None, Flow.MC) != 0
    t.commit_tx("a", Flow.UC, t.fresh_tx("a", Flow.UC, rng))
    assert t.tx_value("a", Flow.UC) != 0
    assert t.tx_value("b", Flow.UC) == 0


def test_chain_synchrony_over_many_messages():
    # sender commits what it advertises; receiver installs it; they must agree each step
    tx, rx = SCTable(), SCTable()
    rng = random.Random(7)
    for _ in range(500):
        for flow, dest in ((Flow.UC, "b"), (Flow.MC, None)):
            assert tx.tx_value(dest, flow) == rx.lookup_rx("a", flow)
            nxt = tx.fresh_tx(dest, flow, rng)
            tx.commit_tx(dest, flow, nxt)
            rx.install_next_rx("a", flow, nxt)


@pytest.mark.parametrize("bad", [-1, 2**32])
def test_install_rejects_out_of_range(bad):
    with pytest.raises(ValueError):
        SCTable().install_next_rx("a", Flow.UC, bad)
