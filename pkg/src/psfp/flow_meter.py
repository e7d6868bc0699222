"""Two-rate three-color flow meter and the PSFP color policies.

Bucket C fills at CIR up to CBS, bucket E at EIR up to EBS, independently
of each other. A frame is green if C holds enough tokens, otherwise yellow
if E does, otherwise red; red frames consume nothing.

Token levels are kept in credit units of 1/(8 * 10**9) byte so that
``rate [bit/s] * elapsed [ns]`` adds an exact integer number of credits.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple

from psfp.timebase import wrap_diff

CREDITS_PER_BYTE = 8 * 10**9


class Color(str, Enum):
    GREEN = "green"
    YELLOW = "yellow"
    RED = "red"


class ColorMode(str, Enum):
    BLIND = "blind"
    AWARE = "aware"


class Action(str, Enum):
    FORWARD = "forward"
    FORWARD_WITH_DEI = "forward_with_dei"
    DROP = "drop"


@dataclass(frozen=True)
class TrTcmConfig:
    cir: int
    eir: int
    cbs: int
    ebs: int
    color_mode: ColorMode = ColorMode.BLIND
    drop_on_yellow: bool = False
    mark_all_red: bool = False

    def __post_init__(self):
        object.__setattr__(self, "color_mode", ColorMode(self.color_mode))
        for name in ("cir", "eir", "cbs", "ebs"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")


@dataclass
class TrTcmState:
    """Bucket levels in credits; both buckets start full."""

    tokens_c: int
    tokens_e: int
    last_update: int = 0
    blocked: bool = False

    @classmethod
    def full(cls, cfg: TrTcmConfig, now: int = 0) -> "TrTcmState":
        return cls(cfg.cbs * CREDITS_PER_BYTE, cfg.ebs * CREDITS_PER_BYTE, now)

    @property
    def bytes_c(self) -> float:
        return self.tokens_c / CREDITS_PER_BYTE

    @property
    def bytes_e(self) -> float:
        return self.tokens_e / CREDITS_PER_BYTE


def refill(cfg: TrTcmConfig, state: TrTcmState, now: int):
    elapsed = wrap_diff(now, state.last_update)
    if elapsed:
        state.tokens_c = min(cfg.cbs * CREDITS_PER_BYTE, state.tokens_c + cfg.cir * elapsed)
        state.tokens_e = min(cfg.ebs * CREDITS_PER_BYTE, state.tokens_e + cfg.eir * elapsed)
    state.last_update = now


def meter(frame_size: int, pre_color: Color, now: int, cfg: TrTcmConfig, state: TrTcmState) -> Color:
    """Color one frame and take its tokens from the matching bucket."""
    refill(cfg, state, now)
    need = frame_size * CREDITS_PER_BYTE
    skip_c = cfg.color_mode is ColorMode.AWARE and pre_color is not Color.GREEN
    if not skip_c and state.tokens_c >= need:
        state.tokens_c -= need
        return Color.GREEN
    if state.tokens_e >= need:
        state.tokens_e -= need
        return Color.YELLOW
    return Color.RED


def apply_color_policy(
    color: Color, cfg: TrTcmConfig, state: TrTcmState, pre_color: Color = Color.GREEN
) -> tuple[Color, Action]:
    """Map a color to a forwarding action; returns the possibly re-colored frame color.

    With DropOnYellow a frame that is yellow, or arrived pre-colored yellow,
    becomes red. With MarkAllFramesRed the first red frame blocks the meter
    for the rest of the run.
    """
    if cfg.drop_on_yellow and (color is Color.YELLOW or pre_color is Color.YELLOW):
        color = Color.RED
    if color is Color.GREEN:
        return color, Action.FORWARD
    if color is Color.YELLOW:
        return color, Action.FORWARD_WITH_DEI
    if cfg.mark_all_red:
        state.blocked = True
    return color, Action.DROP


class MeterVerdict(NamedTuple):
    color: Color
    action: Action
    blocked: bool  # dropped because the meter was already blocked
    metered: Color  # color assigned by the buckets, before policies


@dataclass
class FlowMeterInstance:
    meter_id: int
    config: TrTcmConfig
    state: TrTcmState = field(default=None)

    def __post_init__(self):
        if self.state is None:
            self.state = TrTcmState.full(self.config)

    def police(self, frame_size: int, pre_color: Color, now: int) -> MeterVerdict:
        if self.state.blocked:
            return MeterVerdict(Color.RED, Action.DROP, True, Color.RED)
        metered = meter(frame_size, pre_color, now, self.config, self.state)
        color, action = apply_color_policy(metered, self.config, self.state, pre_color)
        return MeterVerdict(color, action, False, metered)

    def set_flags(self, **flags):
        """Replace policy flags (``drop_on_yellow``, ``mark_all_red``, ``color_mode``)."""
        cfg = self.config
        self.config = TrTcmConfig(
            cfg.cir, cfg.eir, cfg.cbs, cfg.ebs,
            ColorMode(flags.get("color_mode", cfg.color_mode)),
            flags.get("drop_on_yellow", cfg.drop_on_yellow),
            flags.get("mark_all_red", cfg.mark_all_red),
        )

    def reset(self, now: int):
        self.state = TrTcmState.full(self.config, now)
