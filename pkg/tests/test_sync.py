import random

from hypothesis import given, strategies as st

import oracles as O
from psfp.bridge import Bridge, PortConfig, schedule_ticks
from psfp.scheduler import GateState, SliceSpec, StreamGclSpec, compile_schedule
from psfp.stream_filter import FilterTable, IdFunction
from psfp.stream_gate import Delta, relative_position, apply_delta
from psfp.sync import SyncConfig, SyncController, compose_delta, epsilon1, epsilon2, push_delta
from psfp.timebase import TIMESTAMP_MOD, TruncationWindow

US = 1000
MS = 1_000_000
H = 800 * US


def bridge(ports):
    gates = [StreamGclSpec(p.port_id, [SliceSpec(p.hyperperiod, GateState.OPEN)]) for p in ports]
    sched = compile_schedule(gates, {p.port_id: p.port_id for p in ports}, TruncationWindow(5))
    return Bridge(ports, FilterTable(IdFunction.NULL_STREAM), sched)


def test_epsilon1_examples():
    assert epsilon1(2400 * US, 0, H) == 0
    assert epsilon1(2405 * US, 0, H) == 5 * US
    assert epsilon1(700, TIMESTAMP_MOD - 100, 800) == 0


def test_epsilon2_examples():
    assert epsilon2(30 * US, 0) == 30 * US
    assert epsilon2(0, 0) == 0
    assert epsilon2(10, TIMESTAMP_MOD - 10) == 20


def test_compose_delta():
    assert compose_delta(10, 20, -5, 0, 100) == Delta(False, 25)
    assert compose_delta(0, 0, -130, 0, 100) == Delta(True, 30)


def test_push_minus_h_equals_zero():
    b = bridge([PortConfig(1, H)])
    push_delta(b, 1, -H)
    assert b.ports[1].delta.magnitude == 0
    assert apply_delta(123, b.ports[1].delta, H) == 123


@given(st.integers(0, 200), st.integers(1, 40), st.integers(1, 10**6))
def test_epsilon1_drift_matches_accumulation(j, k, h):
    if j >= h:
        j = j % h
    t1 = random.Random(h).randrange(TIMESTAMP_MOD)
    tj = (t1 + (k - 1) * (h + j)) % TIMESTAMP_MOD
    assert epsilon1(tj, t1, h) == O.epsilon1_accumulated([j] * (k - 1), h)
    assert epsilon1(tj, t1, h) == (k - 1) * j % h


def test_drift_ticks_grow_epsilon1():
    p = PortConfig(1, H, tick_drift=5)
    b = bridge([p])
    ctrl = SyncController(SyncConfig(enabled=True, reference_port=1))
    for k, t in enumerate(schedule_ticks(p, 5 * H)):
        b.tick(1, t)
        ctrl.poll(b, t)
        assert ctrl.samples[-1].epsilon1 == 5 * k


def test_poll_skips_ports_without_ticks():
    b = bridge([PortConfig(1, H), PortConfig(2, H)])
    ctrl = SyncController(SyncConfig(enabled=True, reference_port=1))
    b.tick(1, 0)
    ctrl.poll(b, 0)
    assert [s.port for s in ctrl.samples] == [1]


def test_sync_aligns_phase_shifted_port():
    # port 2's ticks lag by 30 us; after the poll its positions match port 1's
    p1, p2 = PortConfig(1, H), PortConfig(2, H, tick_phase=30 * US)
    b = bridge([p1, p2])
    b.tick(1, 0)
    b.tick(2, 30 * US)
    SyncController(SyncConfig(enabled=True, reference_port=1)).poll(b, 30 * US)
    for t in (40 * US, 300 * US, 820 * US):
        r1 = apply_delta(relative_position(t, 0, H), b.ports[1].delta, H)
        r2 = apply_delta(relative_position(t, 30 * US, H), b.ports[2].delta, H)
        assert r1 == r2 == t % H


def test_operator_offset_with_and_without_sync():
    b = bridge([PortConfig(1, H)])
    b.tick(1, 0)
    off = SyncController(SyncConfig(enabled=False))
    off.set_offset(b, 1, 300 * US, 0)
    assert b.ports[1].delta == Delta(False, 300 * US)
    on = SyncController(SyncConfig(enabled=True, delta_net=7, reference_port=1))
    on.set_offset(b, 1, -300 * US, 0)
    assert b.ports[1].delta == Delta(True, 300 * US - 7)


def test_complementary_gates_do_not_overlap_after_sync():
    # port 1 open in [0, 400) of h, port 2 open in [400, 800), port 2's ticks 100 us late
    p1, p2 = PortConfig(1, H), PortConfig(2, H, tick_phase=100 * US)
    b = bridge([p1, p2])
    b.tick(1, 0)
    b.tick(2, 100 * US)
    SyncController(SyncConfig(enabled=True, reference_port=1)).poll(b, 100 * US)
    open1, open2 = set(), set()
    step = 10 * US
    for t in range(100 * US, 100 * US + H, step):
        r1 = apply_delta(relative_position(t, 0, H), b.ports[1].delta, H)
        r2 = apply_delta(relative_position(t, 100 * US, H), b.ports[2].delta, H)
        if r1 < 400 * US:
            open1.add(t)
        if r2 >= 400 * US:
            open2.add(t)
    assert open1 and open2
    assert not open1 & open2
    assert len(open1) + len(open2) == H // step
