"""The PSFP switch pipeline.

A VLAN-tagged frame that matches a stream filter entry passes the
pipeline twice. The first pass reads the port's hyperperiod register,
computes the frame's offset-adjusted position in the hyperperiod and
attaches a 7-byte recirculation header carrying that position and the
frame size. The second pass runs stream filter, stream gate and flow
meter in order. Any other frame is forwarded best-effort on its PCP.
Hyperperiod tick packets only update the port's register and are then
discarded.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, NamedTuple, Optional

from psfp.errors import ConfigError
from psfp.flow_meter import Action, Color, FlowMeterInstance
from psfp.scheduler import CompiledSchedule
from psfp.stream_filter import FilterTable, SduDecision, StreamFilterEntry
from psfp.stream_gate import (
    ZERO_DELTA,
    Delta,
    GateOutcome,
    PositionStats,
    StreamGateInstance,
    apply_delta,
    relative_position,
)
from psfp.timebase import TIMESTAMP_MOD

RECIRC_HEADER_BYTES = 7
MAX_TICK_PORTS = 8
DEFAULT_RECIRC_DELAY = 1_000


class IpFields(NamedTuple):
    ip_src: int = 0
    ip_dst: int = 0
    dscp: int = 0
    next_protocol: int = 17
    l4_src_port: int = 0
    l4_dst_port: int = 0


class RecircHeader(NamedTuple):
    frame_size: int
    t_rel_adj: int


@dataclass(slots=True)
class Frame:
    ingress_port: int
    arrival: int
    size: int
    has_vlan: bool = True
    pcp: int = 0
    dei: bool = False
    vid: int = 0
    eth_src: int = 0
    eth_dst: int = 0
    ip: Optional[IpFields] = None
    recirc: Optional[RecircHeader] = None
    frame_id: int = 0
    source: int = -1
    created: int = 0
    entry: Optional[StreamFilterEntry] = None

    @property
    def wire_size(self) -> int:
        return self.size + (RECIRC_HEADER_BYTES if self.recirc is not None else 0)


class DropReason(str, Enum):
    MAX_SDU = "MaxSdu"
    STREAM_BLOCKED = "StreamBlocked"
    GATE_CLOSED = "GateClosed"
    GATE_PERMANENTLY_CLOSED = "GatePermanentlyClosed"
    OCTETS_EXCEEDED = "OctetsExceeded"
    METER_RED = "MeterRed"
    METER_BLOCKED = "MeterBlocked"
    YELLOW = "Yellow"


class Kind(str, Enum):
    FORWARD = "forward"
    DROP = "drop"
    BEST_EFFORT = "best_effort"
    RECIRCULATE = "recirculate"


class Outcome(NamedTuple):
    kind: Kind
    queue: Optional[int] = None
    dei: bool = False
    reason: Optional[DropReason] = None
    color: Optional[Color] = None


class TraceRecord(NamedTuple):
    timestamp: int
    port: int
    stream_handle: Optional[int]
    outcome: Kind
    reason: Optional[DropReason]
    color: Optional[Color]
    frame_id: int
    created: int


_GATE_REASON = {
    GateOutcome.CLOSED: DropReason.GATE_CLOSED,
    GateOutcome.PERMANENTLY_CLOSED: DropReason.GATE_PERMANENTLY_CLOSED,
    GateOutcome.OCTETS_EXCEEDED: DropReason.OCTETS_EXCEEDED,
}


@dataclass
class PortConfig:
    port_id: int
    hyperperiod: int
    tick_phase: int = 0
    recirc_delay: int = DEFAULT_RECIRC_DELAY
    tick_drift: int = 0
    tick_jitter: int = 0

    def __post_init__(self):
        if self.hyperperiod < 1:
            raise ConfigError(f"port {self.port_id}: hyperperiod must be >= 1 ns")
        if self.recirc_delay < 0:
            raise ConfigError(f"port {self.port_id}: recirc_delay must be >= 0")
        if abs(self.tick_drift) + 2 * self.tick_jitter >= self.hyperperiod:
            raise ConfigError(f"port {self.port_id}: tick drift/jitter must stay below h")


def schedule_ticks(port: PortConfig, until: int, rng: Optional[random.Random] = None) -> list[int]:
    """Tick times ``tick_phase + k*h`` up to ``until`` (unbounded ns, not wrapped).

    ``tick_drift`` adds ``k * drift`` to the k-th tick (an accumulating clock
    error); ``tick_jitter`` adds an independent uniform error in
    ``[-jitter, jitter]`` drawn from ``rng``.
    """
    if port.tick_jitter and rng is None:
        rng = random.Random(port.port_id)
    ticks = []
    k = 0
    step = port.hyperperiod + port.tick_drift
    while True:
        t = port.tick_phase + k * step
        if port.tick_jitter:
            t += rng.randint(-port.tick_jitter, port.tick_jitter)
        if t > until:
            break
        ticks.append(max(t, 0))
        k += 1
    return ticks


@dataclass
class PortState:
    config: PortConfig
    register: int = 0
    first_tick: Optional[int] = None
    tick_count: int = 0
    delta: Delta = ZERO_DELTA
    gates: list[StreamGateInstance] = field(default_factory=list)


class Bridge:
    """Single-threaded PSFP pipeline state with its counters.

    ``trace`` is called with a ``TraceRecord`` for every final outcome.
    """

    def __init__(
        self,
        ports: list[PortConfig],
        filter_table: FilterTable,
        schedule: Optional[CompiledSchedule] = None,
        meters: Optional[dict[int, FlowMeterInstance]] = None,
        trace: Optional[Callable[[TraceRecord], None]] = None,
    ):
        if len(ports) > MAX_TICK_PORTS:
            raise ConfigError(
                f"{len(ports)} ports need hyperperiod ticks; the generator has {MAX_TICK_PORTS} triggers"
            )
        self.ports: dict[int, PortState] = {p.port_id: PortState(p) for p in ports}
        if len(self.ports) != len(ports):
            raise ConfigError("duplicate port ids")
        self.filter = filter_table
        self.meters = dict(meters or {})
        self.gates: dict[int, StreamGateInstance] = {}
        self.gate_ports: dict[int, int] = {}
        if schedule is not None:
            for gid, compiled in schedule.gates.items():
                port = schedule.gate_ports[gid]
                if port not in self.ports:
                    raise ConfigError(f"gate {gid} sits on port {port}, which has no hyperperiod tick")
                ps = self.ports[port]
                if ps.config.hyperperiod != compiled.hyperperiod:
                    raise ConfigError(
                        f"port {port}: tick period {ps.config.hyperperiod} ns differs from "
                        f"compiled hyperperiod {compiled.hyperperiod} ns"
                    )
                gate = StreamGateInstance.from_compiled(compiled, schedule.window)
                self.gates[gid] = gate
                self.gate_ports[gid] = port
                ps.gates.append(gate)
        for entry in filter_table.entries:
            if entry.gate_id is not None and entry.gate_id not in self.gates:
                raise ConfigError(f"stream {entry.stream_handle}: unknown gate {entry.gate_id}")
            if entry.meter_id is not None and entry.meter_id not in self.meters:
                raise ConfigError(f"stream {entry.stream_handle}: unknown meter {entry.meter_id}")
        self.trace = trace
        self.position_stats = PositionStats()
        self.ingested = 0
        self.forwarded = 0
        self.best_effort = 0
        self.in_flight = 0
        self.dropped: Counter = Counter()
        self.recirc_bytes = 0

    # -- data plane ---------------------------------------------------------

    def tick(self, port: int, t: int):
        """Purple path: store the tick timestamp and reset the port's octet registers."""
        ps = self.ports[port]
        ps.register = t
        if ps.first_tick is None:
            ps.first_tick = t
        ps.tick_count += 1
        for gate in ps.gates:
            gate.reset_octets()

    def process(self, frame: Frame) -> Outcome:
        if frame.recirc is None:
            return self._first_pass(frame)
        return self._second_pass(frame)

    def _first_pass(self, frame: Frame) -> Outcome:
        self.ingested += 1
        entry = self.filter.classify(frame)
        if entry is None:
            return self._finish(frame, None, Outcome(Kind.BEST_EFFORT, queue=frame.pcp, dei=frame.dei))
        t_adj = 0
        if entry.gate_id is not None:
            ps = self.ports.get(frame.ingress_port)
            if ps is None:
                raise ConfigError(
                    f"PSFP frame on port {frame.ingress_port}, which has no hyperperiod tick"
                )
            h = ps.config.hyperperiod
            t_rel = relative_position(frame.arrival, ps.register, h, self.position_stats)
            t_adj = apply_delta(t_rel, ps.delta, h)
        frame.entry = entry
        frame.recirc = RecircHeader(frame.size, t_adj)
        self.in_flight += 1
        self.recirc_bytes += frame.wire_size
        return Outcome(Kind.RECIRCULATE)

    def _second_pass(self, frame: Frame) -> Outcome:
        self.in_flight -= 1
        entry = frame.entry
        size = frame.recirc.frame_size
        sdu = self.filter.check_sdu(size, entry)
        if sdu is SduDecision.DROP or sdu is SduDecision.DROP_AND_BLOCK:
            return self._drop(frame, DropReason.MAX_SDU)
        if sdu is SduDecision.BLOCKED:
            return self._drop(frame, DropReason.STREAM_BLOCKED)

        ipv = None
        if entry.gate_id is not None:
            res = self.gates[entry.gate_id].decide(frame.recirc.t_rel_adj, size)
            if res.outcome is not GateOutcome.OPEN:
                return self._drop(frame, _GATE_REASON[res.outcome])
            ipv = res.ipv

        color = None
        dei = frame.dei
        if entry.meter_id is not None:
            pre = Color.YELLOW if frame.dei else Color.GREEN
            v = self.meters[entry.meter_id].police(size, pre, frame.arrival)
            color = v.color
            if v.blocked:
                return self._drop(frame, DropReason.METER_BLOCKED, color)
            if v.action is Action.DROP:
                reason = DropReason.METER_RED if v.metered is Color.RED else DropReason.YELLOW
                return self._drop(frame, reason, color)
            dei = dei or v.action is Action.FORWARD_WITH_DEI

        queue = ipv if ipv is not None else frame.pcp
        frame.recirc = None
        return self._finish(frame, entry, Outcome(Kind.FORWARD, queue=queue, dei=dei, color=color))

    def _drop(self, frame: Frame, reason: DropReason, color: Optional[Color] = None) -> Outcome:
        frame.recirc = None
        return self._finish(frame, frame.entry, Outcome(Kind.DROP, reason=reason, color=color))

    def _finish(self, frame: Frame, entry, outcome: Outcome) -> Outcome:
        if outcome.kind is Kind.FORWARD:
            self.forwarded += 1
        elif outcome.kind is Kind.BEST_EFFORT:
            self.best_effort += 1
        else:
            self.dropped[outcome.reason] += 1
        if self.trace is not None:
            self.trace(TraceRecord(
                frame.arrival, frame.ingress_port,
                entry.stream_handle if entry is not None else None,
                outcome.kind, outcome.reason, outcome.color, frame.frame_id, frame.created,
            ))
        return outcome

    def conservation_holds(self) -> bool:
        """ingested = forwarded + best-effort + dropped + in-flight recirculations."""
        total = self.forwarded + self.best_effort + sum(self.dropped.values()) + self.in_flight
        return self.ingested == total

    # -- control plane ------------------------------------------------------

    def set_delta(self, port: int, delta: Delta):
        """Replace the port's (sign, magnitude) pair in one step."""
        h = self.ports[port].config.hyperperiod
        if delta.magnitude >= h:
            delta = Delta(delta.negative, delta.magnitude % h)
        self.ports[port].delta = delta

    def read_registers(self, port: int) -> tuple[Optional[int], int, int]:
        """(first tick, last tick, tick count) of a port."""
        ps = self.ports[port]
        return ps.first_tick, ps.register, ps.tick_count

    def set_meter_flags(self, meter_id: int, **flags):
        self.meters[meter_id].set_flags(**flags)

    def reset_gate(self, gate_id: int):
        self.gates[gate_id].reset()

    def reset_meter(self, meter_id: int, now: int):
        self.meters[meter_id].reset(now)

    def reset_stream(self, stream_handle: Optional[int] = None):
        self.filter.reset(stream_handle)

    def timestamp(self, t: int) -> int:
        return t % TIMESTAMP_MOD
