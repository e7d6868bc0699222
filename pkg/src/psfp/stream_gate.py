"""Time-based metering: hyperperiod position, offset adjustment, gate lookup.

The data path never uses a modulo. A frame's position inside the
hyperperiod is its arrival time minus the timestamp of the last
hyperperiod tick seen on its ingress port; the signed control-plane offset
is then added branch-wise so that the result stays inside ``[0, h)``.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

from psfp.scheduler import CompiledGate, GateSlice
from psfp.timebase import TIMESTAMP_MOD, TruncationWindow, truncate, wrap_diff


class Delta(NamedTuple):
    """Offset as the data plane stores it: a sign flag and a magnitude below ``h``."""

    negative: bool = False
    magnitude: int = 0

    @classmethod
    def from_signed(cls, value: int, h: int) -> "Delta":
        return cls(value < 0, abs(value) % h)

    @property
    def signed(self) -> int:
        return -self.magnitude if self.negative else self.magnitude


ZERO_DELTA = Delta()


class PositionStats:
    """Counts relative positions that needed the modular fallback."""

    __slots__ = ("fallbacks",)

    def __init__(self):
        self.fallbacks = 0


def relative_position(t_i: int, t_jh: int, h: int, stats: Optional[PositionStats] = None) -> int:
    """Position of arrival ``t_i`` within the hyperperiod started at tick ``t_jh``.

    The 48-bit wrap is absorbed by ``wrap_diff``. A result of ``h`` or more
    means the tick was late (or never arrived); the exact modular value is
    used then and the event is counted in ``stats``.
    """
    t_rel = wrap_diff(t_i, t_jh)
    if t_rel >= h:
        if stats is not None:
            stats.fallbacks += 1
        t_rel = ((t_i - t_jh) % TIMESTAMP_MOD) % h
    return t_rel


def apply_delta(t_rel: int, delta: Delta, h: int) -> int:
    """Shift ``t_rel`` by the signed offset, folding over- and underflow back into ``[0, h)``."""
    m = delta.magnitude
    if not delta.negative:
        shifted = t_rel + m
        if shifted >= h:
            return shifted - h
        return shifted
    if m > t_rel:
        return h - m + t_rel
    return t_rel - m


class GateOutcome(str, Enum):
    OPEN = "open"
    CLOSED = "closed"
    PERMANENTLY_CLOSED = "permanently_closed"
    OCTETS_EXCEEDED = "octets_exceeded"


class GateResult(NamedTuple):
    outcome: GateOutcome
    ipv: Optional[int] = None


@dataclass
class StreamGateInstance:
    """A loaded gate: its open entries as truncated range-match keys plus state registers."""

    gate_id: int
    hyperperiod: int
    entries: list[GateSlice]
    window: TruncationWindow = field(default_factory=TruncationWindow)
    invalid_rx: bool = False
    octets_exceeded: bool = False
    permanently_closed: bool = False
    remaining: list[Optional[int]] = field(default_factory=list)

    def __post_init__(self):
        prev_end = 0
        for e in self.entries:
            if not (prev_end <= e.start < e.end <= self.hyperperiod):
                raise ValueError(f"gate {self.gate_id}: entries must be sorted, disjoint, within [0, h)")
            prev_end = e.end
        self._starts = [truncate(e.start, self.window) for e in self.entries]
        # entry end == h truncates to 0 when h fills the key span; keep it unwrapped
        self._ends = [e.end >> self.window.low_bit for e in self.entries]
        self.reset_octets()

    @classmethod
    def from_compiled(cls, gate: CompiledGate, window: TruncationWindow) -> "StreamGateInstance":
        return cls(
            gate.gate_id,
            gate.hyperperiod,
            list(gate.entries),
            window=window,
            invalid_rx=gate.invalid_rx,
            octets_exceeded=gate.octets_exceeded,
        )

    def reset_octets(self):
        self.remaining = [e.octet_budget for e in self.entries]

    def lookup(self, t_rel_adj: int) -> Optional[int]:
        """Index of the open entry matching the truncated position, or None on a miss."""
        key = truncate(t_rel_adj, self.window)
        i = bisect_right(self._starts, key) - 1
        if i >= 0 and key < self._ends[i]:
            return i
        return None

    def decide(self, t_rel_adj: int, frame_size: int) -> GateResult:
        """Run the gate conditions in order and update the gate's registers."""
        i = self.lookup(t_rel_adj)
        if i is None:
            if self.invalid_rx:
                self.permanently_closed = True
            return GateResult(GateOutcome.CLOSED)
        if self.permanently_closed:
            return GateResult(GateOutcome.PERMANENTLY_CLOSED)
        if self.octets_exceeded and self.remaining[i] is not None:
            left = self.remaining[i] - frame_size
            if left < 0:
                self.permanently_closed = True
                return GateResult(GateOutcome.OCTETS_EXCEEDED)
            self.remaining[i] = left
        return GateResult(GateOutcome.OPEN, self.entries[i].ipv)

    def reset(self):
        """Control-plane reset of the permanent-close flag and octet registers."""
        self.permanently_closed = False
        self.reset_octets()
