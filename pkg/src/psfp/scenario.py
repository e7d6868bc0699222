"""Scenario files: parsing, static validation and simulation assembly.

A scenario is a YAML document (``schema_version: 1``). Durations accept
plain integers (ns) or strings such as ``"800us"``; rates accept bit/s or
``"100Gbps"``; sizes accept bytes or ``"512KiB"``. Rates are written at the
hardware line rates and divided by ``run.scale`` (default 1000) on load.

Every problem found is reported with the line it comes from; nothing is
checked after the simulation starts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Optional

import yaml

from psfp.bridge import MAX_TICK_PORTS, Bridge, Frame, IpFields, PortConfig
from psfp.errors import PsfpError, ScenarioError
from psfp.flow_meter import ColorMode, FlowMeterInstance, TrTcmConfig
from psfp.scheduler import (
    DEFAULT_GATE_CAPACITY,
    CompiledSchedule,
    GateState,
    SliceSpec,
    StreamGclSpec,
    compile_schedule,
)
from psfp.simulator import CbrSource, ControlEvent, EgressLink, Simulation, calibrated_queue_limit
from psfp.stream_filter import (
    FIELD_BITS,
    KEY_LAYOUT,
    TERNARY,
    FilterTable,
    IdFunction,
    StreamFilterEntry,
    StreamIdKey,
    parse_ip,
    parse_mac,
)
from psfp.sync import SyncConfig, SyncController
from psfp.timebase import DEFAULT_LOW_BIT, TruncationWindow

SCHEMA_VERSION = 1
DEFAULT_SCALE = 1000

_NUM = r"\s*([+-]?[0-9]*\.?[0-9]+(?:[eE][+-]?[0-9]+)?)\s*"
_TIME_UNITS = {"ns": 1, "us": 10**3, "µs": 10**3, "ms": 10**6, "s": 10**9}
_RATE_UNITS = {"bps": 1, "kbps": 10**3, "mbps": 10**6, "gbps": 10**9,
               "b/s": 1, "kb/s": 10**3, "mb/s": 10**6, "gb/s": 10**9}
_SIZE_UNITS = {"b": 1, "kb": 10**3, "kib": 2**10, "mb": 10**6, "mib": 2**20}


def _quantity(value, units: dict, what: str, lower: bool = False) -> Decimal:
    if isinstance(value, bool):
        raise ValueError(f"expected a {what}, got {value!r}")
    if isinstance(value, (int, float)):
        return Decimal(str(value))
    if not isinstance(value, str):
        raise ValueError(f"expected a {what}, got {value!r}")
    m = re.fullmatch(_NUM + r"([A-Za-zµ/]*)\s*", value)
    if not m:
        raise ValueError(f"cannot parse {what} {value!r}")
    unit = m.group(2).lower() if lower else m.group(2)
    if unit and unit not in units:
        raise ValueError(f"unknown {what} unit {m.group(2)!r} in {value!r}")
    try:
        return Decimal(m.group(1)) * units.get(unit, 1)
    except InvalidOperation as exc:
        raise ValueError(f"cannot parse {what} {value!r}") from exc


def _integral(d: Decimal, what: str, value) -> int:
    if d != d.to_integral_value():
        raise ValueError(f"{what} {value!r} is not a whole number of base units")
    return int(d)


def parse_time(value) -> int:
    """Nanoseconds from an int or a string like ``"1.1ms"``."""
    return _integral(_quantity(value, _TIME_UNITS, "duration"), "duration", value)


def parse_rate(value) -> Decimal:
    """Bit/s (unscaled, possibly fractional)."""
    return _quantity(value, _RATE_UNITS, "rate", lower=True)


def parse_size(value) -> int:
    return _integral(_quantity(value, _SIZE_UNITS, "size", lower=True), "size", value)


@dataclass
class Diagnostic:
    file: str
    line: Optional[int]
    path: str
    code: str
    message: str

    def __str__(self):
        where = f"{self.file}:{self.line}" if self.line is not None else self.file
        return f"{where}: {self.code}: {self.message} [{self.path}]"


def _line_map(node, path=(), out=None) -> dict:
    """Map key paths to 1-based source lines from a composed YAML node tree."""
    if out is None:
        out = {}
    out[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        for k, v in node.value:
            out[path + (k.value,)] = k.start_mark.line + 1
            _line_map(v, path + (k.value,), out)
            out[path + (k.value,)] = k.start_mark.line + 1
    elif isinstance(node, yaml.SequenceNode):
        for i, v in enumerate(node.value):
            _line_map(v, path + (i,), out)
    return out


class _Collector:
    def __init__(self, file: str, lines: dict):
        self.file = file
        self.lines = lines
        self.items: list[Diagnostic] = []

    def add(self, path: tuple, code: str, message: str):
        p = tuple(path)
        while p and p not in self.lines:
            p = p[:-1]
        line = self.lines.get(p)
        self.items.append(Diagnostic(self.file, line, _fmt_path(path), code, message))


def _fmt_path(path) -> str:
    out = ""
    for part in path:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out or "<root>"


@dataclass
class Scenario:
    """A validated scenario. ``build()`` returns a fresh, independent simulation."""

    name: str
    source_file: str
    duration: int
    bin_width: int
    seed: int
    scale: int
    epoch: int
    window: TruncationWindow
    ports: list[PortConfig]
    filter_function: IdFunction
    filter_capacity: int
    filter_entries: list[StreamFilterEntry]
    schedule: CompiledSchedule
    meter_configs: dict[int, TrTcmConfig]
    links: list[dict]
    sources: list[CbrSource]
    sync: SyncConfig
    control_events: list[ControlEvent]
    raw: dict = field(repr=False, default_factory=dict)

    def build(self, keep_trace: bool = False, on_event=None) -> Simulation:
        table = FilterTable(self.filter_function, self.filter_capacity)
        for e in self.filter_entries:
            table.add(e)
        meters = {mid: FlowMeterInstance(mid, cfg) for mid, cfg in self.meter_configs.items()}
        bridge = Bridge(list(self.ports), table, self.schedule, meters)
        links = {}
        for l in self.links:
            limit = l["queue_limit"]
            if limit is None:
                sizes = [s.frame_size for s in self.sources if s.link == l["id"]]
                limit = calibrated_queue_limit(l["capacity"], max(sizes, default=0))
            links[l["id"]] = EgressLink(l["id"], l["capacity"], limit)
        sources = [CbrSource(**vars(s)) for s in self.sources]
        return Simulation(
            bridge=bridge, ports=list(self.ports), sources=sources, links=links,
            duration=self.duration, bin_width=self.bin_width,
            controller=SyncController(self.sync), control_events=list(self.control_events),
            epoch=self.epoch, seed=self.seed, keep_trace=keep_trace, on_event=on_event,
        )

    def run(self, **kw):
        sim = self.build(**kw)
        return sim.run()


def _get(doc: dict, key: str, default=None):
    v = doc.get(key, default) if isinstance(doc, dict) else default
    return default if v is None else v


class _Parser:
    def __init__(self, doc: dict, diag: _Collector, overrides: dict):
        self.doc = doc
        self.d = diag
        self.ov = overrides

    def field(self, path, conv, value, default=None):
        if value is None:
            return default
        try:
            return conv(value)
        except (ValueError, TypeError, KeyError) as exc:
            self.d.add(path, "ParseError", str(exc))
            return default

    def rate(self, path, value):
        d = self.field(path, parse_rate, value)
        if d is None:
            return None
        scaled = int(d / self.scale)
        if scaled <= 0 and d > 0:
            self.d.add(path, "ParseError", f"rate {value!r} vanishes at scale 1/{self.scale}")
        return scaled

    def parse(self):
        doc = self.doc
        if not isinstance(doc, dict):
            self.d.add((), "ParseError", "scenario must be a mapping")
            return None
        version = doc.get("schema_version")
        if version != SCHEMA_VERSION:
            self.d.add(("schema_version",), "SchemaVersion",
                       f"expected schema_version {SCHEMA_VERSION}, got {version!r}")

        run = _get(doc, "run", {})
        self.scale = self.ov.get("scale") or self.field(("run", "scale"), int, run.get("scale"), DEFAULT_SCALE)
        if self.scale <= 0:
            self.d.add(("run", "scale"), "ConfigError", "scale must be positive")
            self.scale = DEFAULT_SCALE
        raw_duration = run.get("duration")
        duration = self.field(("run", "duration"), parse_time, raw_duration)
        if duration is None or duration <= 0:
            if duration is not None or raw_duration is None:
                self.d.add(("run", "duration"), "ConfigError", "run.duration must be a positive duration")
            duration = 1
        bin_width = self.ov.get("bin") or self.field(("run", "bin"), parse_time, run.get("bin"), duration)
        if bin_width <= 0:
            self.d.add(("run", "bin"), "ConfigError", "bin width must be positive")
            bin_width = duration
        seed = self.ov.get("seed")
        if seed is None:
            seed = self.field(("run", "seed"), int, run.get("seed"), 0)
        epoch = self.field(("run", "epoch"), parse_time, run.get("epoch"), 0)
        low_bit = self.field(("run", "truncation_low_bit"), int, run.get("truncation_low_bit"), DEFAULT_LOW_BIT)
        try:
            window = TruncationWindow(low_bit)
        except ValueError as exc:
            self.d.add(("run", "truncation_low_bit"), "ConfigError", str(exc))
            window = TruncationWindow()
        gate_capacity = self.field(("run", "gate_capacity"), int, run.get("gate_capacity"), DEFAULT_GATE_CAPACITY)

        gate_specs, gate_ports = self._gates()
        port_docs = self._ports()
        schedule = CompiledSchedule(window=window)
        compiled = False
        if gate_specs is not None:
            try:
                schedule = compile_schedule(gate_specs, gate_ports, window, gate_capacity)
                compiled = True
            except PsfpError as exc:
                self.d.add(("gates",), exc.code, exc.message)
            except ValueError as exc:
                self.d.add(("gates",), "ConfigError", str(exc))

        ports = []
        for i, (p, pdoc) in enumerate(port_docs):
            h = schedule.hyperperiods.get(p["id"])
            if h is None:
                h = p["hyperperiod"]
            if h is None:
                if compiled or p["id"] not in gate_ports.values():
                    self.d.add(("ports", i), "ConfigError",
                               f"port {p['id']} has no gates; give it an explicit hyperperiod")
                continue
            if p["hyperperiod"] is not None and p["hyperperiod"] != h:
                self.d.add(("ports", i, "hyperperiod"), "ConfigError",
                           f"port {p['id']}: hyperperiod {p['hyperperiod']} ns differs from the "
                           f"compiled LCM {h} ns")
            try:
                ports.append(PortConfig(p["id"], h, p["tick_phase"], p["recirc_delay"],
                                        p["tick_drift"], p["tick_jitter"]))
            except PsfpError as exc:
                self.d.add(("ports", i), exc.code, exc.message)
        if len(port_docs) > MAX_TICK_PORTS:
            self.d.add(("ports",), "ConfigError",
                       f"{len(port_docs)} tick ports configured; at most {MAX_TICK_PORTS} are supported")
        port_ids = {p["id"] for p, _ in port_docs}
        for gid, port in gate_ports.items():
            if port not in port_ids:
                idx = next(i for i, g in enumerate(_get(doc, "gates", [])) if g.get("id") == gid)
                self.d.add(("gates", idx, "port"), "ConfigError",
                           f"gate {gid} is on port {port}, which has no hyperperiod tick configured")

        meters = self._meters()
        function, capacity, entries = self._filter(set(gate_ports), set(meters))
        links = self._links()
        sources = self._sources({l["id"] for l in links}, port_ids)
        self._check_sources(sources, function, entries, gate_ports, meters)
        sync = self._sync(port_ids)
        events = self._events(duration, port_ids, set(meters), set(gate_ports))

        return Scenario(
            name=str(_get(doc, "name", "scenario")), source_file=self.d.file,
            duration=duration, bin_width=bin_width, seed=seed, scale=self.scale, epoch=epoch,
            window=window, ports=ports, filter_function=function, filter_capacity=capacity,
            filter_entries=entries, schedule=schedule, meter_configs=meters, links=links,
            sources=sources, sync=sync, control_events=events, raw=doc,
        )

    def _ports(self):
        out = []
        seen = set()
        for i, p in enumerate(_get(self.doc, "ports", [])):
            path = ("ports", i)
            if not isinstance(p, dict) or "id" not in p:
                self.d.add(path, "ConfigError", "port needs an id")
                continue
            if p["id"] in seen:
                self.d.add(path + ("id",), "ConfigError", f"duplicate port id {p['id']}")
            seen.add(p["id"])
            out.append(({
                "id": p["id"],
                "hyperperiod": self.field(path + ("hyperperiod",), parse_time, p.get("hyperperiod")),
                "tick_phase": self.field(path + ("tick_phase",), parse_time, p.get("tick_phase"), 0),
                "recirc_delay": self.field(path + ("recirc_delay",), parse_time, p.get("recirc_delay"), 1000),
                "tick_drift": self.field(path + ("tick_drift",), parse_time, p.get("tick_drift"), 0),
                "tick_jitter": self.field(path + ("tick_jitter",), parse_time, p.get("tick_jitter"), 0),
            }, p))
        return out

    def _gates(self):
        specs, ports = [], {}
        for i, g in enumerate(_get(self.doc, "gates", [])):
            path = ("gates", i)
            if not isinstance(g, dict) or "id" not in g or "port" not in g:
                self.d.add(path, "ConfigError", "gate needs an id and a port")
                continue
            if g["id"] in ports:
                self.d.add(path + ("id",), "ConfigError", f"duplicate gate id {g['id']}")
                continue
            slices = []
            for j, s in enumerate(_get(g, "gcl", [])):
                sp = path + ("gcl", j)
                try:
                    slices.append(SliceSpec(
                        parse_time(s["duration"]), GateState(s.get("state", "open")),
                        s.get("ipv"),
                        parse_size(s["octet_budget"]) if s.get("octet_budget") is not None else None,
                    ))
                except (KeyError, ValueError, TypeError) as exc:
                    self.d.add(sp, "ParseError", f"bad slice: {exc}")
            repeat = int(g.get("repeat", 1))
            spec = StreamGclSpec(g["id"], slices * repeat, bool(g.get("invalid_rx", False)),
                                 bool(g.get("octets_exceeded", False)))
            try:
                spec.validate()
            except ValueError as exc:
                self.d.add(path + ("gcl",), "ConfigError", str(exc))
                continue
            specs.append(spec)
            ports[g["id"]] = g["port"]
        return specs, ports

    def _meters(self):
        out = {}
        for i, m in enumerate(_get(self.doc, "meters", [])):
            path = ("meters", i)
            if not isinstance(m, dict) or "id" not in m:
                self.d.add(path, "ConfigError", "meter needs an id")
                continue
            if m["id"] in out:
                self.d.add(path + ("id",), "ConfigError", f"duplicate meter id {m['id']}")
                continue
            try:
                out[m["id"]] = TrTcmConfig(
                    cir=self.rate(path + ("cir",), m.get("cir", 0)) or 0,
                    eir=self.rate(path + ("eir",), m.get("eir", 0)) or 0,
                    cbs=parse_size(m.get("cbs", 0)),
                    ebs=parse_size(m.get("ebs", 0)),
                    color_mode=ColorMode(m.get("color_mode", "blind")),
                    drop_on_yellow=bool(m.get("drop_on_yellow", False)),
                    mark_all_red=bool(m.get("mark_all_red", False)),
                )
            except (ValueError, TypeError) as exc:
                self.d.add(path, "ConfigError", str(exc))
        return out

    def _key(self, function: IdFunction, e: dict) -> StreamIdKey:
        layout = KEY_LAYOUT[function]
        values, masks = {}, {}
        for name, kind in layout.items():
            raw = e.get(name, 0 if kind == TERNARY else None)
            if raw is None:
                raise ValueError(f"{function.value} entries need {name}")
            conv = parse_mac if name.startswith("eth") else parse_ip if name.startswith("ip_") else int
            values[name] = conv(raw)
            mask_raw = e.get(f"{name}_mask")
            if kind == TERNARY:
                masks[name] = conv(mask_raw) if mask_raw is not None else (
                    (1 << FIELD_BITS[name]) - 1 if name in e else 0)
            elif mask_raw is not None:
                raise ValueError(f"{name} is matched exactly by {function.value}; drop {name}_mask")
        return StreamIdKey(function, values, masks)

    def _filter(self, gate_ids, meter_ids):
        fdoc = _get(self.doc, "filter", {})
        try:
            function = IdFunction(fdoc.get("function", "null_stream"))
        except ValueError as exc:
            self.d.add(("filter", "function"), "ConfigError", str(exc))
            function = IdFunction.NULL_STREAM
        capacity = self.field(("filter", "capacity"), int, fdoc.get("capacity"))
        table = FilterTable(function, capacity)
        entries = []
        generate = fdoc.get("generate")
        raw_entries = list(_get(fdoc, "entries", []))
        if generate:
            raw_entries += _expand_generated(generate)
        for i, e in enumerate(raw_entries):
            path = ("filter", "entries", i) if i < len(_get(fdoc, "entries", [])) else ("filter", "generate")
            try:
                entry = StreamFilterEntry(
                    self._key(function, e), int(e["stream_handle"]), e.get("gate"), e.get("meter"),
                    parse_size(e["max_sdu"]) if e.get("max_sdu") is not None else None,
                    bool(e.get("max_sdu_exceeded", False)),
                )
            except (KeyError, ValueError, TypeError) as exc:
                self.d.add(path, "ConfigError", f"bad filter entry: {exc}")
                continue
            if entry.gate_id is not None and entry.gate_id not in gate_ids:
                self.d.add(path + ("gate",), "UnknownReference", f"unknown gate {entry.gate_id}")
            if entry.meter_id is not None and entry.meter_id not in meter_ids:
                self.d.add(path + ("meter",), "UnknownReference", f"unknown meter {entry.meter_id}")
            try:
                table.add(entry)
            except PsfpError as exc:
                self.d.add(("filter",), exc.code, exc.message)
                break
            except ValueError as exc:
                self.d.add(path, "ConfigError", str(exc))
                continue
            entries.append(entry)
        return function, table.capacity, entries

    def _links(self):
        out = []
        for i, l in enumerate(_get(self.doc, "links", [])):
            path = ("links", i)
            if not isinstance(l, dict) or "id" not in l:
                self.d.add(path, "ConfigError", "link needs an id")
                continue
            cap = self.rate(path + ("capacity",), l.get("capacity"))
            if not cap:
                self.d.add(path + ("capacity",), "ConfigError", "link capacity must be positive")
                continue
            ql = l.get("queue_limit", "auto")
            limit = None if ql in (None, "auto") else self.field(path + ("queue_limit",), parse_size, ql)
            out.append({"id": str(l["id"]), "capacity": cap, "queue_limit": limit})
        return out

    def _sources(self, link_ids, port_ids):
        out = []
        for i, s in enumerate(_get(self.doc, "sources", [])):
            path = ("sources", i)
            try:
                vlan = s.get("vlan")
                ip = s.get("ip")
                src = CbrSource(
                    name=str(s.get("name", f"source{i}")),
                    rate=self.rate(path + ("rate",), s["rate"]) or 0,
                    frame_size=parse_size(s.get("frame_size", 1280)),
                    ingress_port=int(s["port"]),
                    start=parse_time(s.get("start", 0)),
                    stop=parse_time(s["stop"]) if s.get("stop") is not None else None,
                    link=str(s["link"]) if s.get("link") is not None else None,
                    measure_latency=bool(s.get("measure_latency", True)),
                    has_vlan=vlan is not None,
                    pcp=int((vlan or {}).get("pcp", 0)),
                    dei=bool((vlan or {}).get("dei", False)),
                    vid=int((vlan or {}).get("vid", 0)),
                    eth_src=parse_mac(s.get("eth_src", 0)),
                    eth_dst=parse_mac(s.get("eth_dst", 0)),
                    ip=IpFields(
                        parse_ip(ip.get("src", 0)), parse_ip(ip.get("dst", 0)), int(ip.get("dscp", 0)),
                        int(ip.get("next_protocol", 17)), int(ip.get("l4_src_port", 0)),
                        int(ip.get("l4_dst_port", 0)),
                    ) if ip else None,
                )
            except (KeyError, ValueError, TypeError) as exc:
                self.d.add(path, "ConfigError", f"bad source: {exc}")
                continue
            if src.link is not None and src.link not in link_ids:
                self.d.add(path + ("link",), "UnknownReference", f"unknown link {src.link!r}")
            out.append(src)
        return out

    def _check_sources(self, sources, function, entries, gate_ports, meters):
        table = FilterTable(function, max(len(entries), 1))
        for e in entries:
            table.add(e)
        for i, src in enumerate(sources):
            probe = Frame(src.ingress_port, 0, src.frame_size, src.has_vlan, src.pcp, src.dei,
                          src.vid, src.eth_src, src.eth_dst, src.ip)
            entry = table.classify(probe)
            if entry is None:
                continue
            if entry.gate_id in gate_ports and gate_ports[entry.gate_id] != src.ingress_port:
                self.d.add(("sources", i, "port"), "ConfigError",
                           f"source {src.name} enters on port {src.ingress_port} but its stream uses "
                           f"gate {entry.gate_id} on port {gate_ports[entry.gate_id]}")
            cfg = meters.get(entry.meter_id)
            if cfg is not None and (cfg.cbs < src.frame_size and cfg.ebs < src.frame_size):
                self.d.add(("sources", i, "frame_size"), "ConfigError",
                           f"meter {entry.meter_id} buckets are smaller than {src.frame_size} B frames")

    def _sync(self, port_ids):
        s = _get(self.doc, "sync", {})
        cfg = SyncConfig()
        try:
            cfg = SyncConfig(
                enabled=bool(s.get("enabled", False)),
                delta_net=parse_time(s.get("delta_net", 0)),
                poll_interval=parse_time(s.get("poll_interval", "100ms")),
                reference_port=s.get("reference_port"),
                first_poll=parse_time(s["first_poll"]) if s.get("first_poll") not in (None, "auto") else None,
            )
        except (ValueError, TypeError) as exc:
            self.d.add(("sync",), "ConfigError", str(exc))
        if cfg.reference_port is not None and cfg.reference_port not in port_ids:
            self.d.add(("sync", "reference_port"), "UnknownReference",
                       f"reference port {cfg.reference_port} has no tick configured")
        return cfg

    def _events(self, duration, port_ids, meter_ids, gate_ids):
        out = []
        for i, e in enumerate(_get(self.doc, "control_events", [])):
            path = ("control_events", i)
            try:
                at = parse_time(e["at"])
                action = e["action"]
                args = {k: v for k, v in e.items() if k not in ("at", "action")}
            except (KeyError, ValueError, TypeError) as exc:
                self.d.add(path, "ConfigError", f"bad control event: {exc}")
                continue
            if not 0 <= at <= duration:
                self.d.add(path + ("at",), "ConfigError", "control event lies outside the run")
            if action == "set_offset":
                if args.get("port") not in port_ids:
                    self.d.add(path + ("port",), "UnknownReference", f"unknown port {args.get('port')}")
                try:
                    args["value"] = parse_time(args.get("value", 0))
                except ValueError as exc:
                    self.d.add(path + ("value",), "ParseError", str(exc))
            elif action in ("set_meter", "reset_meter"):
                if args.get("meter") not in meter_ids:
                    self.d.add(path + ("meter",), "UnknownReference", f"unknown meter {args.get('meter')}")
                if "color_mode" in args:
                    args["color_mode"] = ColorMode(args["color_mode"])
            elif action == "reset_gate":
                if args.get("gate") not in gate_ids:
                    self.d.add(path + ("gate",), "UnknownReference", f"unknown gate {args.get('gate')}")
            elif action != "reset_stream":
                self.d.add(path + ("action",), "ConfigError", f"unknown action {action!r}")
            out.append(ControlEvent(at, action, args))
        return sorted(out, key=lambda ev: ev.at)


def _expand_generated(gen: dict) -> list[dict]:
    """Bulk entries: ``{count, first_handle, vlan_id, eth_dst_base, ...}`` with consecutive MACs."""
    count = int(gen["count"])
    first = int(gen.get("first_handle", 1))
    base = parse_mac(gen.get("eth_dst_base", "02:00:00:00:00:00"))
    template = {k: v for k, v in gen.items() if k not in ("count", "first_handle", "eth_dst_base")}
    return [{**template, "stream_handle": first + i, "eth_dst": base + i} for i in range(count)]


def load_scenario(path, **overrides) -> Scenario:
    """Parse and validate a scenario file; raises ``ScenarioError`` listing every problem.

    ``overrides`` may carry ``scale``, ``seed`` and ``bin`` (ns).
    """
    path = Path(path)
    text = path.read_text()
    return loads_scenario(text, str(path), **overrides)


def loads_scenario(text: str, name: str = "<string>", **overrides) -> Scenario:
    try:
        node = yaml.compose(text, Loader=yaml.SafeLoader)
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = mark.line + 1 if mark is not None else None
        raise ScenarioError([Diagnostic(name, line, "<root>", "ParseError", str(exc).splitlines()[0])])
    lines = _line_map(node) if node is not None else {}
    diag = _Collector(name, lines)
    scenario = _Parser(doc or {}, diag, {k: v for k, v in overrides.items() if v is not None}).parse()
    if diag.items:
        raise ScenarioError(diag.items)
    return scenario
