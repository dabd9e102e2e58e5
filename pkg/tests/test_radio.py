from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from transducernet.energy import get_profile
from transducernet.radio import (
    Frame, Radio, RadioParams, airtime_ms, fragment, frame_count, frames_energy_pj, to_pj, transmit,
)


def test_fragmentation():
    p = RadioParams(max_payload_bytes=100)
    assert [len(f) for f in fragment(b"x" * 250, p)] == [100, 100, 50]
    assert frame_count(250, p) == 3 and frame_count(0, p) == 1
    assert fragment(b"", p) == [b""]


def test_empty_frame_costs_wake_and_overhead():
    p = RadioParams(overhead_bytes=15, wake_energy_uj=7, tx_energy_uj_per_byte=2)
    tx, rx = frames_energy_pj([b""], p)
    assert tx == to_pj(7) + to_pj(2) * 15
    assert rx == to_pj(5) * 15


def test_three_joules_per_kilobyte():
    p = get_profile("pottie-reference").radio
    tx, _ = frames_energy_pj(fragment(b"x" * 1024, p), p)
    assert tx == 3 * 10**12


def test_picojoule_exactness():
    with pytest.raises(ValueError):
        to_pj(Fraction(1, 3))
    with pytest.raises(ValueError):
        RadioParams(tx_energy_uj_per_byte=Fraction(1, 3))
    with pytest.raises(ValueError):
        RadioParams(max_payload_bytes=0)


@given(st.integers(0, 5000), st.integers(1, 3000))
def test_energy_monotone_in_size(n, extra):
    p = get_profile("zigbee-default").radio
    small = frames_energy_pj(fragment(b"a" * n, p), p)
    big = frames_energy_pj(fragment(b"a" * (n + extra), p), p)
    assert big[0] > small[0] and big[1] > small[1]


@given(st.integers(0, 5000), st.integers(1, 300))
def test_radio_matches_transmit(n, step):
    p = RadioParams(max_payload_bytes=step, wake_energy_uj=3)
    payload = b"z" * n
    frames = [Frame(1, 0, s, 0) for s in fragment(payload, p)]
    expect = transmit(frames, p, 10)
    assert Radio(p).send(payload, 10) == expect
    assert expect.wire_bytes == n + 15 * frame_count(n, p)
    assert expect.delivery_time == 10 + airtime_ms(expect.wire_bytes, p)


def test_loss_is_seeded():
    import random
    p = RadioParams(loss_rate=Fraction(1, 2))
    runs = [[Radio(p, random.Random(3)).send(b"x" * 500, 0).delivered for _ in range(1)] for _ in range(2)]
    assert runs[0] == runs[1]
    r = Radio(p, random.Random(1))
    for _ in range(100):
        r.send(b"x", 0)
    assert 0 < r.messages_lost < 100
