import pytest
from hypothesis import given, settings, strategies as st

import oracles as O
from psfp.errors import EntryBudgetExceeded, GranularityError, HyperperiodOutOfRange
from psfp.scheduler import (
    GateSlice,
    GateState,
    SliceSpec,
    StreamGclSpec,
    compile_schedule,
    expand,
    format_report,
    hyperperiod,
)
from psfp.timebase import TruncationWindow

US = 1000
MS = 1_000_000
OPEN, CLOSED = GateState.OPEN, GateState.CLOSED


def gcl(gate_id, *slices, **kw):
    return StreamGclSpec(gate_id, [SliceSpec(d, OPEN if o else CLOSED) for d, o in slices], **kw)


GCL_1421 = gcl(1, (100 * US, True), (400 * US, False), (200 * US, True), (100 * US, False))


def test_hyperperiod_examples():
    assert hyperperiod([2, 3, 4]) == 12
    assert hyperperiod([800 * US], TruncationWindow(11)) == 800 * US
    with pytest.raises(HyperperiodOutOfRange):
        hyperperiod([700 * MS, 600 * MS], TruncationWindow(11))


def test_hyperperiod_below_resolution():
    with pytest.raises(HyperperiodOutOfRange):
        hyperperiod([1024], TruncationWindow(11))


def test_expand_examples():
    assert [(e.start, e.end) for e in expand(GCL_1421, 800 * US)] == [(0, 100 * US), (500 * US, 700 * US)]
    assert [(e.start, e.end) for e in expand(gcl(1, (1, True), (1, False)), 4)] == [(0, 1), (2, 3)]
    merged = expand(gcl(1, (1, True), (1, False), (1, True)), 6)
    assert [(e.start, e.end) for e in merged] == [(0, 1), (2, 4), (5, 6)]


def test_expand_keeps_budgeted_slices_apart():
    spec = StreamGclSpec(1, [SliceSpec(1, OPEN, octet_budget=10), SliceSpec(1, OPEN, octet_budget=10)])
    assert len(expand(spec, 4)) == 4


def test_expand_rejects_non_multiple():
    with pytest.raises(ValueError):
        expand(gcl(1, (2, True), (1, False)), 4)


def test_granularity_rejected():
    with pytest.raises(GranularityError) as exc:
        compile_schedule([GCL_1421], {1: 1}, TruncationWindow(11))
    assert exc.value.code == "SliceBoundaryGranularity"
    sched = compile_schedule([GCL_1421], {1: 1}, TruncationWindow(5))
    assert sched.hyperperiods == {1: 800 * US}


def test_entry_budget():
    # 1 ns open / 1 ns closed over h = 2*2048 slices of 1 ns each -> 2048 entries fit, one more does not
    window = TruncationWindow(0)
    g = gcl(1, (1, True), (1, False))
    g_h = gcl(2, *([(1, False)] * 4095 + [(1, True)]))
    sched = compile_schedule([g, g_h], {1: 1, 2: 1}, window, capacity=2049)
    assert sched.entry_count == 2049
    with pytest.raises(EntryBudgetExceeded):
        compile_schedule([g, g_h], {1: 1, 2: 1}, window, capacity=2048)


def test_report_mentions_entries():
    sched = compile_schedule([GCL_1421], {1: 3}, TruncationWindow(5))
    text = format_report(sched)
    assert "port 3: hyperperiod 800000 ns" in text
    assert "[500000, 700000)" in text


periods = st.lists(st.integers(1, 24), min_size=1, max_size=4)


@given(periods)
def test_hyperperiod_matches_bruteforce(ps):
    h = hyperperiod(ps)
    assert h == O.lcm_bruteforce(ps)
    assert all(h % p == 0 for p in ps)


patterns = st.lists(st.tuples(st.integers(1, 5), st.booleans()), min_size=1, max_size=6)


@settings(max_examples=200)
@given(patterns, st.integers(1, 4))
def test_expand_matches_interval_merge_oracle(pattern, reps):
    spec = StreamGclSpec(1, [SliceSpec(d, OPEN if o else CLOSED) for d, o in pattern])
    h = spec.period * reps
    out = expand(spec, h)
    assert [(e.start, e.end) for e in out] == O.open_runs(pattern, h)
    # disjoint, sorted, inside [0, h), covers the open fraction exactly
    for a, b in zip(out, out[1:]):
        assert a.end < b.start
    assert all(0 <= e.start < e.end <= h for e in out)
    open_ns = sum(d for d, o in pattern if o) * reps
    assert sum(e.end - e.start for e in out) == open_ns
    # re-expanding the expanded list with period h is idempotent
    again = StreamGclSpec(1, _to_specs(out, h))
    assert expand(again, h) == out


def _to_specs(entries: list[GateSlice], h: int) -> list[SliceSpec]:
    specs, t = [], 0
    for e in entries:
        if e.start > t:
            specs.append(SliceSpec(e.start - t, CLOSED))
        specs.append(SliceSpec(e.end - e.start, OPEN))
        t = e.end
    if t < h:
        specs.append(SliceSpec(h - t, CLOSED))
    return specs
