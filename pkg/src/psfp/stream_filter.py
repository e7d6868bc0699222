"""Stream identification and the maximum-SDU filter.

Four 802.1CB identification functions are supported, each with its own
key layout (which header fields take part, exact or ternary). Exact
fields index a dictionary; ternary fields are then compared in insertion
order, so among overlapping ternary entries the earliest one wins.
"""

from __future__ import annotations

import ipaddress
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from psfp.errors import StreamTableCapacityExceeded


class IdFunction(str, Enum):
    NULL_STREAM = "null_stream"
    SOURCE_MAC = "source_mac"
    IP_TERNARY = "ip_ternary"
    IP_EXACT = "ip_exact"


EXACT = "exact"
TERNARY = "ternary"

FIELD_BITS = {
    "eth_src": 48,
    "eth_dst": 48,
    "vlan_id": 12,
    "ip_src": 32,
    "ip_dst": 32,
    "dscp": 6,
    "next_protocol": 8,
    "l4_src_port": 16,
    "l4_dst_port": 16,
}

_IP_FIELDS = ("ip_src", "ip_dst", "dscp", "next_protocol", "l4_src_port", "l4_dst_port")

# field -> match kind, per identification function
KEY_LAYOUT: dict[IdFunction, dict[str, str]] = {
    IdFunction.NULL_STREAM: {"eth_dst": EXACT, "vlan_id": EXACT},
    IdFunction.SOURCE_MAC: {"eth_src": EXACT, "eth_dst": TERNARY, "vlan_id": EXACT},
    IdFunction.IP_TERNARY: {
        "eth_src": TERNARY, "eth_dst": TERNARY, "vlan_id": EXACT,
        **{f: TERNARY for f in _IP_FIELDS},
    },
    IdFunction.IP_EXACT: {
        "eth_dst": EXACT, "vlan_id": EXACT,
        **{f: EXACT for f in _IP_FIELDS},
    },
}

DEFAULT_CAPACITY = {
    IdFunction.NULL_STREAM: 35840,
    IdFunction.SOURCE_MAC: 4096,
    IdFunction.IP_TERNARY: 2048,
    IdFunction.IP_EXACT: 32768,
}


def parse_mac(value) -> int:
    if isinstance(value, int):
        return value
    parts = value.replace("-", ":").split(":")
    if len(parts) != 6:
        raise ValueError(f"bad MAC address {value!r}")
    return int("".join(f"{int(p, 16):02x}" for p in parts), 16)


def format_mac(value: int) -> str:
    return ":".join(f"{(value >> s) & 0xFF:02x}" for s in range(40, -8, -8))


def parse_ip(value) -> int:
    if isinstance(value, int):
        return value
    return int(ipaddress.IPv4Address(value))


@dataclass(frozen=True)
class StreamIdKey:
    """Match key. ``values`` and ``masks`` are keyed by field name; exact fields carry a full mask."""

    function: IdFunction
    values: dict
    masks: dict = field(default_factory=dict)

    def __post_init__(self):
        layout = KEY_LAYOUT[self.function]
        extra = set(self.values) - set(layout)
        if extra:
            raise ValueError(f"{self.function.value} does not match on {sorted(extra)}")
        missing = set(layout) - set(self.values)
        if missing:
            raise ValueError(f"{self.function.value} key is missing {sorted(missing)}")
        for name, v in self.values.items():
            full = (1 << FIELD_BITS[name]) - 1
            if not 0 <= v <= full:
                raise ValueError(f"{name}={v} does not fit in {FIELD_BITS[name]} bits")
            if layout[name] == EXACT and name in self.masks and self.masks[name] != full:
                raise ValueError(f"{name} is an exact field for {self.function.value}")

    def mask(self, name: str) -> int:
        return self.masks.get(name, (1 << FIELD_BITS[name]) - 1)


@dataclass(frozen=True)
class StreamFilterEntry:
    key: StreamIdKey
    stream_handle: int
    gate_id: Optional[int] = None
    meter_id: Optional[int] = None
    max_sdu: Optional[int] = None
    max_sdu_exceeded: bool = False


class SduDecision(str, Enum):
    PASS = "pass"
    DROP = "drop"
    DROP_AND_BLOCK = "drop_and_block"
    BLOCKED = "blocked"


def frame_fields(frame) -> Optional[dict]:
    """Header fields of a frame as a dict, or None for untagged frames."""
    if not frame.has_vlan:
        return None
    f = {"eth_src": frame.eth_src, "eth_dst": frame.eth_dst, "vlan_id": frame.vid}
    if frame.ip is not None:
        f.update(frame.ip._asdict())
    return f


class FilterTable:
    """Stream identification table for one identification function."""

    def __init__(self, function: IdFunction, capacity: Optional[int] = None):
        self.function = IdFunction(function)
        self.capacity = DEFAULT_CAPACITY[self.function] if capacity is None else capacity
        layout = KEY_LAYOUT[self.function]
        self._exact = tuple(n for n, k in layout.items() if k == EXACT)
        self._ternary = tuple(n for n, k in layout.items() if k == TERNARY)
        self._needs_ip = any(n in _IP_FIELDS for n in layout)
        self.entries: list[StreamFilterEntry] = []
        self._index: dict[tuple, list[tuple[tuple, StreamFilterEntry]]] = {}
        self._handles: set[int] = set()
        self.blocked: set[int] = set()

    def __len__(self):
        return len(self.entries)

    def add(self, entry: StreamFilterEntry):
        if entry.key.function is not self.function:
            raise ValueError(
                f"entry uses {entry.key.function.value}, table is {self.function.value}"
            )
        if entry.stream_handle in self._handles:
            raise ValueError(f"duplicate stream handle {entry.stream_handle}")
        if len(self.entries) >= self.capacity:
            raise StreamTableCapacityExceeded(
                f"{self.function.value} table holds at most {self.capacity} entries"
            )
        k = entry.key
        exact = tuple(k.values[n] for n in self._exact)
        tern = tuple((n, k.values[n] & k.mask(n), k.mask(n)) for n in self._ternary)
        self._index.setdefault(exact, []).append((tern, entry))
        self._handles.add(entry.stream_handle)
        self.entries.append(entry)

    def classify(self, frame) -> Optional[StreamFilterEntry]:
        """First matching entry, or None when the frame takes the best-effort path."""
        fields = frame_fields(frame)
        if fields is None or (self._needs_ip and frame.ip is None):
            return None
        bucket = self._index.get(tuple(fields[n] for n in self._exact))
        if not bucket:
            return None
        for tern, entry in bucket:
            if all(fields[n] & m == v for n, v, m in tern):
                return entry
        return None

    def check_sdu(self, frame_size: int, entry: StreamFilterEntry) -> SduDecision:
        if entry.max_sdu is not None and frame_size > entry.max_sdu:
            if entry.max_sdu_exceeded:
                self.blocked.add(entry.stream_handle)
                return SduDecision.DROP_AND_BLOCK
            return SduDecision.DROP
        if entry.stream_handle in self.blocked:
            return SduDecision.BLOCKED
        return SduDecision.PASS

    def reset(self, stream_handle: Optional[int] = None):
        """Control-plane reset of blocked streams (all, or a single handle)."""
        if stream_handle is None:
            self.blocked.clear()
        else:
            self.blocked.discard(stream_handle)
