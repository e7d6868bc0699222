"""Per-stream filtering and policing (IEEE 802.1Qci) pipeline simulator.

Stream filters, hyperperiodic stream gates with offset compensation, and
two-rate three-color flow meters, driven by a deterministic discrete-event
harness.
"""

from psfp.timebase import TIMESTAMP_BITS, TIMESTAMP_MOD, TruncationWindow, truncate, wrap_diff

__version__ = "0.1.0"

__all__ = [
    "TIMESTAMP_BITS",
    "TIMESTAMP_MOD",
    "TruncationWindow",
    "truncate",
    "wrap_diff",
]
