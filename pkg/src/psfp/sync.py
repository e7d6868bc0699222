"""Control-plane offset computation.

The control plane reads each port's first and latest hyperperiod tick
timestamps and derives the offset it pushes to the data plane::

    delta = delta_net + eps1 + eps2 (+ any operator-set offset)

``eps1`` is the drift accumulated by a port's ticks, ``eps2`` the phase of
a port's first tick relative to the reference port, and ``delta_net`` the
known offset between control-plane and data-plane clocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

from psfp.stream_gate import Delta
from psfp.timebase import signed_wrap_diff, wrap_diff

DEFAULT_POLL_INTERVAL = 100_000_000


def epsilon1(t_jh: int, t_1h: int, h: int) -> int:
    """Drift of the latest tick against the ideal grid anchored at the first tick."""
    return wrap_diff(t_jh, t_1h) % h


def epsilon2(t_1h_port: int, t_1h_ref: int) -> int:
    """Signed phase of a port's first tick relative to the reference port's."""
    return signed_wrap_diff(t_1h_port, t_1h_ref)


def compose_delta(delta_net: int, eps1: int, eps2: int, extra: int, h: int) -> Delta:
    return Delta.from_signed(delta_net + eps1 + eps2 + extra, h)


def push_delta(bridge, port: int, delta: int):
    """Reduce a signed offset modulo the port's hyperperiod and swap it into the bridge."""
    h = bridge.ports[port].config.hyperperiod
    bridge.set_delta(port, Delta.from_signed(delta, h))


@dataclass
class SyncConfig:
    enabled: bool = False
    delta_net: int = 0
    poll_interval: int = DEFAULT_POLL_INTERVAL
    reference_port: Optional[int] = None
    first_poll: Optional[int] = None  # None: right after the last port's first tick

    def __post_init__(self):
        if self.poll_interval <= 0:
            raise ValueError("poll_interval must be > 0")


class SyncSample(NamedTuple):
    time: int
    port: int
    epsilon1: int
    epsilon2: int
    delta: int


@dataclass
class SyncController:
    config: SyncConfig
    offsets: dict[int, int] = field(default_factory=dict)
    samples: list[SyncSample] = field(default_factory=list)

    def set_offset(self, bridge, port: int, value: int, now: int):
        """Operator offset for one port, pushed immediately."""
        self.offsets[port] = value
        if self.config.enabled:
            self.poll(bridge, now, ports=[port])
        else:
            push_delta(bridge, port, value)
            self.samples.append(SyncSample(now, port, 0, 0, value))

    def poll(self, bridge, now: int, ports=None):
        """Recompute and push the offset for every port whose registers are populated."""
        ref = self.config.reference_port
        ref_first = bridge.read_registers(ref)[0] if ref is not None else None
        for port in ports if ports is not None else sorted(bridge.ports):
            first, last, _ = bridge.read_registers(port)
            if first is None:
                continue
            h = bridge.ports[port].config.hyperperiod
            e1 = epsilon1(last, first, h)
            e2 = epsilon2(first, ref_first) if ref_first is not None else 0
            total = self.config.delta_net + e1 + e2 + self.offsets.get(port, 0)
            push_delta(bridge, port, total)
            self.samples.append(SyncSample(now, port, e1, e2, total))
