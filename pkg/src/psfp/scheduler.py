"""Offline compilation of per-stream gate control lists.

Each stream GCL is a cyclic list of open/closed slices. All GCLs on one
ingress port are stretched to the port's hyperperiod (the LCM of their
periods) and only the open slices are kept; gaps between them act as
closed slices because a range-match miss drops the frame.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Optional, Sequence

from psfp.errors import EntryBudgetExceeded, GranularityError, HyperperiodOutOfRange
from psfp.timebase import TIMESTAMP_MOD, TruncationWindow

DEFAULT_GATE_CAPACITY = 2048


class GateState(str, Enum):
    OPEN = "open"
    CLOSED = "closed"


@dataclass(frozen=True, slots=True)
class SliceSpec:
    duration: int
    state: GateState
    ipv: Optional[int] = None
    octet_budget: Optional[int] = None


@dataclass(frozen=True, slots=True)
class GateSlice:
    """One open entry of a compiled gate table, ``[start, end)`` within the hyperperiod."""

    start: int
    end: int
    ipv: Optional[int] = None
    octet_budget: Optional[int] = None


@dataclass
class StreamGclSpec:
    gate_id: int
    slices: list[SliceSpec]
    invalid_rx: bool = False
    octets_exceeded: bool = False

    @property
    def period(self) -> int:
        return sum(s.duration for s in self.slices)

    def validate(self):
        if not self.slices:
            raise ValueError(f"gate {self.gate_id}: empty GCL")
        for s in self.slices:
            if s.duration <= 0:
                raise ValueError(f"gate {self.gate_id}: slice durations must be > 0")
            if s.ipv is not None and not 0 <= s.ipv <= 7:
                raise ValueError(f"gate {self.gate_id}: ipv must be a 3-bit value")
            if s.octet_budget is not None and s.octet_budget < 0:
                raise ValueError(f"gate {self.gate_id}: octet_budget must be >= 0")


@dataclass
class CompiledGate:
    gate_id: int
    hyperperiod: int
    entries: list[GateSlice]
    invalid_rx: bool = False
    octets_exceeded: bool = False


@dataclass
class CompiledSchedule:
    """Gate tables for every port, ready to be loaded into a bridge."""

    window: TruncationWindow
    hyperperiods: dict[int, int] = field(default_factory=dict)
    gates: dict[int, CompiledGate] = field(default_factory=dict)
    gate_ports: dict[int, int] = field(default_factory=dict)

    @property
    def entry_count(self) -> int:
        return sum(len(g.entries) for g in self.gates.values())


def lcm_checked(periods: Iterable[int], limit: int = TIMESTAMP_MOD) -> int:
    """LCM of ``periods``; raises ``HyperperiodOutOfRange`` once it exceeds ``limit``."""
    h = 1
    for p in periods:
        if p <= 0:
            raise ValueError(f"periods must be positive, got {p}")
        h = h // math.gcd(h, p) * p
        if h > limit:
            raise HyperperiodOutOfRange(f"LCM of periods exceeds {limit} ns")
    return h


def hyperperiod(periods: Sequence[int], window: Optional[TruncationWindow] = None) -> int:
    """Least common multiple of the GCL periods on a port.

    With a ``window``, the result must lie in ``[granularity, span]`` of the
    range-match key, otherwise ``HyperperiodOutOfRange`` is raised. Without
    one, the bare LCM is returned (unit-free, useful for abstract time steps).
    """
    if not periods:
        raise ValueError("at least one period is required")
    if window is None:
        return lcm_checked(periods)
    h = lcm_checked(periods, limit=window.span)
    if h < window.granularity:
        raise HyperperiodOutOfRange(
            f"hyperperiod {h} ns is below the {window.granularity} ns resolution"
        )
    return h


def _mergeable(a: GateSlice, b: GateSlice) -> bool:
    return (
        a.end == b.start
        and a.ipv == b.ipv
        and a.octet_budget is None
        and b.octet_budget is None
    )


def expand(spec: StreamGclSpec, h: int) -> list[GateSlice]:
    """Repeat ``spec`` up to ``h`` and return its open slices as absolute offsets.

    Adjacent open slices with the same IPV and no octet budget (typically the
    tail of one repetition meeting the head of the next) are merged.
    """
    period = spec.period
    if h % period:
        raise ValueError(f"hyperperiod {h} is not a multiple of period {period}")
    pattern = []
    offset = 0
    for s in spec.slices:
        if s.state is GateState.OPEN:
            pattern.append((offset, offset + s.duration, s.ipv, s.octet_budget))
        offset += s.duration

    out: list[GateSlice] = []
    for rep in range(h // period):
        base = rep * period
        for start, end, ipv, budget in pattern:
            entry = GateSlice(base + start, base + end, ipv, budget)
            if out and _mergeable(out[-1], entry):
                prev = out.pop()
                entry = GateSlice(prev.start, entry.end, ipv, None)
            out.append(entry)
    return out


def check_granularity(spec: StreamGclSpec, window: TruncationWindow):
    g = window.granularity
    offset = 0
    for s in spec.slices:
        offset += s.duration
        if offset % g:
            raise GranularityError(
                f"gate {spec.gate_id}: slice boundary at {offset} ns is not a multiple "
                f"of the {g} ns truncation granularity"
            )


def compile_schedule(
    gates: Sequence[StreamGclSpec],
    gate_ports: dict[int, int],
    window: Optional[TruncationWindow] = None,
    capacity: int = DEFAULT_GATE_CAPACITY,
) -> CompiledSchedule:
    """Compile every gate; ``gate_ports`` maps gate id to its ingress port."""
    window = window or TruncationWindow()
    by_port: dict[int, list[StreamGclSpec]] = {}
    for spec in gates:
        spec.validate()
        by_port.setdefault(gate_ports[spec.gate_id], []).append(spec)

    sched = CompiledSchedule(window=window)
    for port, specs in sorted(by_port.items()):
        sched.hyperperiods[port] = hyperperiod([s.period for s in specs], window)
    for spec in gates:
        check_granularity(spec, window)

    total = 0
    for port, specs in sorted(by_port.items()):
        h = sched.hyperperiods[port]
        for spec in specs:
            entries = expand(spec, h)
            total += len(entries)
            if total > capacity:
                raise EntryBudgetExceeded(
                    f"gate table needs more than {capacity} open entries "
                    f"(exceeded while expanding gate {spec.gate_id} on port {port})"
                )
            sched.gates[spec.gate_id] = CompiledGate(
                spec.gate_id, h, entries, spec.invalid_rx, spec.octets_exceeded
            )
            sched.gate_ports[spec.gate_id] = port
    return sched


def format_report(sched: CompiledSchedule) -> str:
    """Human-readable summary of a compiled schedule."""
    lines = [
        f"truncation: bits {sched.window.low_bit}..{sched.window.low_bit + 19} "
        f"(granularity {sched.window.granularity} ns, span {sched.window.span} ns)",
        f"gate entries: {sched.entry_count}",
    ]
    for port, h in sorted(sched.hyperperiods.items()):
        lines.append(f"port {port}: hyperperiod {h} ns")
        for gid, gate in sorted(sched.gates.items()):
            if sched.gate_ports[gid] != port:
                continue
            flags = [n for n, on in (("invalid_rx", gate.invalid_rx),
                                     ("octets_exceeded", gate.octets_exceeded)) if on]
            lines.append(f"  gate {gid}: {len(gate.entries)} open entries"
                         + (f" [{', '.join(flags)}]" if flags else ""))
            for e in gate.entries:
                extra = ""
                if e.ipv is not None:
                    extra += f" ipv={e.ipv}"
                if e.octet_budget is not None:
                    extra += f" budget={e.octet_budget}B"
                lines.append(f"    [{e.start}, {e.end}){extra}")
    return "\n".join(lines)
