import pytest
from hypothesis import given, strategies as st

import oracles as O
from psfp.timebase import (
    TIMESTAMP_MOD,
    TruncationWindow,
    signed_wrap_diff,
    to_timestamp,
    truncate,
    wrap_diff,
)

ts = st.integers(0, TIMESTAMP_MOD - 1)


def test_wrap_diff_examples():
    assert wrap_diff(100, 30) == 70
    assert wrap_diff(12345, 12345) == 0
    assert wrap_diff(5, 2**48 - 5) == 10


def test_truncate_examples():
    assert truncate(0, TruncationWindow(0)) == 0
    assert truncate(0, TruncationWindow(28)) == 0
    assert truncate(2**12, TruncationWindow(12)) == 1
    assert truncate(0xFFFF_FFFF_FFFF, TruncationWindow(12)) == 0xFFFFF


def test_window_defaults_and_bounds():
    w = TruncationWindow()
    assert w.low_bit == 11
    assert w.granularity == 2048
    assert w.span == 2**31
    with pytest.raises(ValueError):
        TruncationWindow(29)
    with pytest.raises(ValueError):
        TruncationWindow(-1)


def test_to_timestamp():
    assert to_timestamp(TIMESTAMP_MOD + 3) == 3
    assert to_timestamp(-1) == TIMESTAMP_MOD - 1


@given(ts, ts)
def test_wrap_diff_matches_modular_oracle(a, b):
    d = wrap_diff(a, b)
    assert d == O.mod_diff(a, b)
    assert 0 <= d < TIMESTAMP_MOD
    assert (b + d) % TIMESTAMP_MOD == a


@given(ts, ts)
def test_signed_wrap_diff_matches_oracle(a, b):
    assert signed_wrap_diff(a, b) == O.signed_circular_diff(a, b)


@given(ts, st.integers(0, 28))
def test_truncate_matches_bit_slice(t, low):
    assert truncate(t, TruncationWindow(low)) == O.bit_slice(t, low)


@given(st.integers(0, 28), st.integers(0, 2**20), st.integers(0, TIMESTAMP_MOD - 1))
def test_truncate_periodic_and_monotone(low, k, t):
    w = TruncationWindow(low)
    t2 = (t + w.span) % TIMESTAMP_MOD
    assert truncate(t, w) == truncate(t2, w)
    base = t - t % w.span
    a, b = base, base + min(k, w.span - 1)
    assert truncate(a, w) <= truncate(b, w)
