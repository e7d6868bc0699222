"""48-bit wrap-around timestamp arithmetic.

All times in the package are integer nanoseconds. Hardware timestamps are
48 bits wide and wrap after roughly 3.25 days; every subtraction between
two of them has to be taken modulo 2**48.
"""

from __future__ import annotations

from dataclasses import dataclass

TIMESTAMP_BITS = 48
TIMESTAMP_MOD = 1 << TIMESTAMP_BITS
TIMESTAMP_MAX = TIMESTAMP_MOD - 1

KEY_WIDTH = 20
KEY_MASK = (1 << KEY_WIDTH) - 1

DEFAULT_LOW_BIT = 11


def to_timestamp(t: int) -> int:
    """Reduce an unbounded integer nanosecond count to a 48-bit timestamp."""
    return t % TIMESTAMP_MOD


def wrap_diff(a: int, b: int) -> int:
    """Return ``(a - b) mod 2**48``.

    Equal to ``a - b`` when ``a >= b``; when the clock wrapped in between,
    the elapsed time before the wrap is added to ``a``.
    """
    if a >= b:
        return a - b
    return TIMESTAMP_MOD - b + a


def signed_wrap_diff(a: int, b: int) -> int:
    """Signed difference ``a - b`` along the shorter arc of the 2**48 circle."""
    d = wrap_diff(a, b)
    if d >= TIMESTAMP_MOD // 2:
        return d - TIMESTAMP_MOD
    return d


@dataclass(frozen=True, slots=True)
class TruncationWindow:
    """Which 20 bits of a timestamp form the range-match key.

    ``low_bit`` sets the granularity (``2**low_bit`` ns); the key spans
    ``2**(low_bit + 20)`` ns.
    """

    low_bit: int = DEFAULT_LOW_BIT

    def __post_init__(self):
        if not 0 <= self.low_bit <= TIMESTAMP_BITS - KEY_WIDTH:
            raise ValueError(
                f"low_bit must be in [0, {TIMESTAMP_BITS - KEY_WIDTH}], got {self.low_bit}"
            )

    @property
    def granularity(self) -> int:
        return 1 << self.low_bit

    @property
    def span(self) -> int:
        return 1 << (self.low_bit + KEY_WIDTH)


def truncate(t: int, window: TruncationWindow) -> int:
    """Select bits ``[low_bit, low_bit + 19]`` of ``t``."""
    return (t >> window.low_bit) & KEY_MASK
