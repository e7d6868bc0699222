"""Stream-level outcomes of the blocking scenario, predicted from the CBR timings."""

from collections import Counter

import pytest

from psfp.bridge import DropReason, Kind
from psfp.scenario import load_scenario

US = 1000


@pytest.fixture(scope="module")
def blocking(request):
    from conftest import SCENARIO_DIR
    sim = load_scenario(SCENARIO_DIR / "blocking.yaml").build(keep_trace=True)
    m = sim.run()
    by_stream = {}
    for r in m.trace:
        by_stream.setdefault(r.stream_handle, []).append(r)
    return sim, m, by_stream


def test_oversize_stream_is_blocked(blocking):
    _, _, s = blocking
    # 1500 B every 1.2 ms for 20 ms; size is checked before the blocked flag
    assert [r.reason for r in s[1]] == [DropReason.MAX_SDU] * 17


def test_invalid_rx_closes_after_first_closed_arrival(blocking):
    _, _, s = blocking
    outcomes = [(r.created // US, r.reason) for r in s[2]]
    # 1000 B every 800 us; open for the first 5120 us
    assert [t for t, reason in outcomes if reason is None] == [0, 800, 1600, 2400, 3200, 4000, 4800]
    assert outcomes[7] == (5600, DropReason.GATE_CLOSED)
    assert {reason for _, reason in outcomes[8:]} <= {DropReason.GATE_PERMANENTLY_CLOSED, DropReason.GATE_CLOSED}


def test_octet_budget_closes_gate(blocking):
    sim, m, s = blocking
    recs = s[3]
    fwd = [r for r in recs if r.outcome is Kind.FORWARD]
    assert len(fwd) == 3
    assert recs[3].reason is DropReason.OCTETS_EXCEEDED
    later = Counter(r.reason for r in recs[4:])
    assert set(later) == {DropReason.GATE_CLOSED, DropReason.GATE_PERMANENTLY_CLOSED}
    # the open-slice frames after the overdraw are refused as permanently closed
    assert all(r.reason is DropReason.GATE_PERMANENTLY_CLOSED
               for r in recs[4:] if r.created % (2048 * US) < 1024 * US)


def test_meter_blocks_after_first_red(blocking):
    _, _, s = blocking
    recs = s[4]
    first_red = next(i for i, r in enumerate(recs) if r.reason is DropReason.METER_RED)
    assert all(r.outcome is Kind.FORWARD for r in recs[:first_red])
    assert all(r.reason is DropReason.METER_BLOCKED for r in recs[first_red + 1:])
    assert any(r.color.value == "yellow" for r in recs[:first_red])


def test_untagged_best_effort_and_conservation(blocking):
    sim, m, s = blocking
    assert [r.outcome for r in s[None]] == [Kind.BEST_EFFORT] * 5
    b = sim.bridge
    assert b.conservation_holds() and b.in_flight == 0
    assert b.ingested == len(m.trace)
