"""Deterministic discrete-event harness around the bridge.

Events are ordered by time, then by kind (tick, control, frame arrival,
link departure), then by insertion sequence. Simulation time is an
unbounded nanosecond count; the bridge sees it shifted by ``epoch`` and
wrapped to 48 bits, so runs can straddle the timestamp wrap.
"""

from __future__ import annotations

import heapq
import random
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional

from psfp.bridge import Bridge, DropReason, Frame, IpFields, Kind, PortConfig, TraceRecord, schedule_ticks
from psfp.sync import SyncController
from psfp.timebase import TIMESTAMP_MOD

TICK, CONTROL, ARRIVAL, DEPARTURE = range(4)
NS_PER_S = 10**9
DEFAULT_PLATEAU = 98_000


def transmission_time(size: int, rate: int) -> int:
    """Nanoseconds to put ``size`` bytes on a ``rate`` bit/s wire, rounded up."""
    return -(-size * 8 * NS_PER_S // rate)


@dataclass
class CbrSource:
    """Constant-bit-rate frame source.

    The k-th frame leaves at ``start + floor(k * size * 8e9 / rate)`` so the
    long-run rate is exact.
    """

    name: str
    rate: int
    frame_size: int
    ingress_port: int
    start: int = 0
    stop: Optional[int] = None
    link: Optional[str] = None
    measure_latency: bool = True
    has_vlan: bool = True
    pcp: int = 0
    dei: bool = False
    vid: int = 0
    eth_src: int = 0
    eth_dst: int = 0
    ip: Optional[IpFields] = None

    def __post_init__(self):
        if self.rate <= 0 or self.frame_size <= 0:
            raise ValueError(f"source {self.name}: rate and frame_size must be positive")

    def departure(self, k: int) -> int:
        return self.start + k * self.frame_size * 8 * NS_PER_S // self.rate

    def make_frame(self, t: int) -> Frame:
        return Frame(
            ingress_port=self.ingress_port, arrival=0, size=self.frame_size,
            has_vlan=self.has_vlan, pcp=self.pcp, dei=self.dei, vid=self.vid,
            eth_src=self.eth_src, eth_dst=self.eth_dst, ip=self.ip, created=t,
        )


def calibrated_queue_limit(capacity: int, frame_size: int = 0, plateau: int = DEFAULT_PLATEAU) -> int:
    """Waiting-room size (bytes) that puts the congested latency at ``plateau`` ns.

    A frame entering a full waiting room departs after the queued bytes plus
    its own serialization, so one frame's worth is taken off.
    """
    return max(capacity * plateau // (8 * NS_PER_S) - frame_size, 0)


@dataclass
class EgressLink:
    """Rate-limited FIFO with a drop-tail waiting room.

    ``queue_limit`` bounds the bytes waiting behind the frame currently
    being serialized.
    """

    name: str
    capacity: int
    queue_limit: Optional[int] = None
    queue: deque = field(default_factory=deque)
    occupancy: int = 0
    busy: bool = False
    tail_drops: int = 0
    departed: int = 0
    busy_time: int = 0

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError(f"link {self.name}: capacity must be positive")
        if self.queue_limit is None:
            self.queue_limit = calibrated_queue_limit(self.capacity)

    def plateau_latency(self, frame_size: int) -> int:
        """Queueing plus serialization delay of a frame admitted to a full waiting room."""
        return transmission_time(self.queue_limit + frame_size, self.capacity)

    def serialization(self, size: int) -> int:
        return transmission_time(size, self.capacity)


@dataclass
class ControlEvent:
    at: int
    action: str
    args: dict = field(default_factory=dict)


class LatencySample(NamedTuple):
    departure: int
    source: str
    latency: int


COLOR_KEYS = ("green", "yellow", "red")


@dataclass
class MetricsLog:
    """Time-binned counters plus per-frame series.

    Frames are binned by their first-pass arrival time.
    """

    bin_width: int
    duration: int
    offered: list = field(default_factory=list)
    psfp_offered: list = field(default_factory=list)
    colors: dict = field(default_factory=dict)
    forwarded_bytes: list = field(default_factory=list)
    best_effort_bytes: list = field(default_factory=list)
    drops: dict = field(default_factory=dict)
    drop_bytes: dict = field(default_factory=dict)
    forwarded: list = field(default_factory=list)
    latency: list = field(default_factory=list)
    sync: list = field(default_factory=list)
    tail_drops: Counter = field(default_factory=Counter)
    trace: Optional[list] = None

    def __post_init__(self):
        if self.bin_width <= 0:
            raise ValueError("bin width must be positive")
        n = self.n_bins
        self.offered = [0] * n
        self.psfp_offered = [0] * n
        self.colors = {c: [0] * n for c in COLOR_KEYS}
        self.forwarded_bytes = [0] * n
        self.best_effort_bytes = [0] * n
        self.drops = {r: [0] * n for r in DropReason}
        self.drop_bytes = {r: [0] * n for r in DropReason}

    @property
    def n_bins(self) -> int:
        return -(-self.duration // self.bin_width)

    def bin_of(self, t: int) -> int:
        return min(t // self.bin_width, self.n_bins - 1)

    def bin_edges(self, i: int) -> tuple[int, int]:
        return i * self.bin_width, min((i + 1) * self.bin_width, self.duration)

    def rate(self, series: list, i: int) -> float:
        lo, hi = self.bin_edges(i)
        return series[i] * 8 * NS_PER_S / (hi - lo)

    def color_rate(self, color: str, i: int) -> float:
        return self.rate(self.colors[color], i)

    def window_rate(self, series: list, t0: int, t1: int) -> float:
        """Mean rate (bit/s) over whole bins inside ``[t0, t1)``."""
        lo, hi = t0 // self.bin_width, t1 // self.bin_width
        total = sum(series[lo:hi])
        span = sum(self.bin_edges(i)[1] - self.bin_edges(i)[0] for i in range(lo, hi))
        return total * 8 * NS_PER_S / span

    def cumulative_forwarded(self, stream_handle=None) -> list[tuple[int, int]]:
        n = 0
        out = []
        for t, _port, handle in self.forwarded:
            if stream_handle is None or handle == stream_handle:
                n += 1
                out.append((t, n))
        return out


@dataclass
class Simulation:
    """One scenario's worth of sources, bridge, links and control timeline."""

    bridge: Bridge
    ports: list[PortConfig]
    sources: list[CbrSource]
    links: dict[str, EgressLink]
    duration: int
    bin_width: int
    controller: Optional[SyncController] = None
    control_events: list[ControlEvent] = field(default_factory=list)
    epoch: int = 0
    seed: int = 0
    keep_trace: bool = False
    on_event: Optional[Callable[["Simulation", int, int], None]] = None

    def __post_init__(self):
        self._heap: list = []
        self._seq = 0
        self._next_id = 0
        self.metrics = MetricsLog(self.bin_width, self.duration)
        if self.keep_trace:
            self.metrics.trace = []
        self.bridge.trace = self._on_trace
        self.now = 0

    def _push(self, t: int, kind: int, payload):
        heapq.heappush(self._heap, (t, kind, self._seq, payload))
        self._seq += 1

    def _ts(self, t: int) -> int:
        return (self.epoch + t) % TIMESTAMP_MOD

    def _schedule(self):
        for port in self.ports:
            rng = random.Random(f"{self.seed}:{port.port_id}")
            for t in schedule_ticks(port, self.duration, rng):
                self._push(t, TICK, ("tick", port.port_id))
        for ev in self.control_events:
            self._push(ev.at, CONTROL, ("control", ev))
        if self.controller is not None and self.controller.config.enabled:
            cfg = self.controller.config
            first = cfg.first_poll
            if first is None:
                first = max((p.tick_phase for p in self.ports), default=0)
            t = first
            while t <= self.duration:
                self._push(t, CONTROL, ("poll", None))
                t += cfg.poll_interval
        for i, src in enumerate(self.sources):
            self._push_source(i, 0)

    def _push_source(self, i: int, k: int):
        src = self.sources[i]
        t = src.departure(k)
        stop = self.duration if src.stop is None else min(src.stop, self.duration)
        if t < stop:
            self._push(t, ARRIVAL, ("source", (i, k)))

    def run(self) -> MetricsLog:
        self._schedule()
        heap = self._heap
        while heap:
            t, kind, _seq, (what, payload) = heapq.heappop(heap)
            self.now = t
            if what == "source":
                i, k = payload
                self._ingest(i, t)
                self._push_source(i, k + 1)
            elif what == "recirc":
                self._handle(payload, t)
            elif what == "depart":
                self._depart(payload, t)
            elif what == "tick":
                self.bridge.tick(payload, self._ts(t))
            elif what == "poll":
                self.controller.poll(self.bridge, t)
            elif what == "control":
                self._control(payload, t)
            if self.on_event is not None:
                self.on_event(self, t, kind)
        if self.controller is not None:
            self.metrics.sync = list(self.controller.samples)
        for name, link in self.links.items():
            self.metrics.tail_drops[name] = link.tail_drops
        return self.metrics

    def _ingest(self, i: int, t: int):
        src = self.sources[i]
        frame = src.make_frame(t)
        frame.arrival = self._ts(t)
        frame.source = i
        frame.frame_id = self._next_id
        self._next_id += 1
        self.metrics.offered[self.metrics.bin_of(t)] += frame.size
        self._handle(frame, t)

    def _handle(self, frame: Frame, t: int):
        out = self.bridge.process(frame)
        if out.kind is Kind.RECIRCULATE:
            delay = self.bridge.ports[frame.ingress_port].config.recirc_delay \
                if frame.ingress_port in self.bridge.ports else 0
            self._push(t + delay, ARRIVAL, ("recirc", frame))
            return
        m = self.metrics
        b = m.bin_of(frame.created)
        if out.kind is Kind.BEST_EFFORT:
            m.best_effort_bytes[b] += frame.size
            self._egress(frame, t)
            return
        m.psfp_offered[b] += frame.size
        if out.color is not None:
            m.colors[out.color.value][b] += frame.size
        if out.kind is Kind.DROP:
            m.drops[out.reason][b] += 1
            m.drop_bytes[out.reason][b] += frame.size
            return
        m.forwarded_bytes[b] += frame.size
        m.forwarded.append((frame.created, frame.ingress_port, frame.entry.stream_handle))
        frame.dei = out.dei
        self._egress(frame, t)

    def _egress(self, frame: Frame, t: int):
        src = self.sources[frame.source]
        link = self.links.get(src.link) if src.link is not None else None
        if link is None:
            if src.measure_latency:
                self.metrics.latency.append(LatencySample(t, src.name, t - frame.created))
            return
        if not link.busy:
            self._start(link, frame, t)
            return
        if link.occupancy + frame.size > link.queue_limit:
            link.tail_drops += 1
            return
        link.occupancy += frame.size
        link.queue.append(frame)

    def _start(self, link: EgressLink, frame: Frame, t: int):
        link.busy = True
        ser = link.serialization(frame.size)
        link.busy_time += ser
        self._push(t + ser, DEPARTURE, ("depart", (link.name, frame)))

    def _depart(self, payload, t: int):
        name, frame = payload
        link = self.links[name]
        link.departed += 1
        link.busy = False
        src = self.sources[frame.source]
        if src.measure_latency:
            self.metrics.latency.append(LatencySample(t, src.name, t - frame.created))
        if link.queue:
            nxt = link.queue.popleft()
            link.occupancy -= nxt.size
            self._start(link, nxt, t)

    def _control(self, ev: ControlEvent, t: int):
        a = ev.args
        if ev.action == "set_meter":
            flags = {k: a[k] for k in ("drop_on_yellow", "mark_all_red", "color_mode") if k in a}
            self.bridge.set_meter_flags(a["meter"], **flags)
        elif ev.action == "set_offset":
            if self.controller is None:
                raise RuntimeError("set_offset needs a sync controller")
            self.controller.set_offset(self.bridge, a["port"], a["value"], t)
        elif ev.action == "reset_gate":
            self.bridge.reset_gate(a["gate"])
        elif ev.action == "reset_meter":
            self.bridge.reset_meter(a["meter"], self._ts(t))
        elif ev.action == "reset_stream":
            self.bridge.reset_stream(a.get("stream"))
        else:
            raise ValueError(f"unknown control action {ev.action!r}")

    def _on_trace(self, rec: TraceRecord):
        if self.metrics.trace is not None:
            self.metrics.trace.append(rec)
