"""Six-sector directional IR link layer.

Each robot carries one emitter/receiver pair per sector. Received strength
falls off as ``v_ref * (150 / d) ** decay_exponent`` and is shaped by the
emitter and receiver lobes; a link exists when it clears ``detect_threshold``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

from .geometry import Pose, WorldModel, line_of_sight, normalize_deg, wrap180
from .physics import RadiationPattern

REF_DISTANCE = 150.0


@dataclass(frozen=True)
class ChannelLayout:
    channel_count: int = 6
    opening_half_angle: float = 30.0
    emitter_pattern: RadiationPattern = RadiationPattern(30.0, 0.0, 0.05, 60.0)
    receiver_pattern: RadiationPattern = RadiationPattern(30.0, 0.0, 0.05, 60.0)

    def __post_init__(self):
        if self.channel_count < 1:
            raise ValueError("channel_count must be at least 1")
        step = 360.0 / self.channel_count
        object.__setattr__(self, "_offsets", tuple(step * i for i in range(self.channel_count)))

    @property
    def sector_offsets(self) -> tuple:
        return self._offsets

    def offset_from_axis(self, channel: int, bearing: float) -> float:
        return wrap180(bearing - self._offsets[channel])

    def nearest_channel(self, bearing: float) -> int:
        """Channel whose axis is closest to ``bearing`` (lowest index on ties)."""
        offs = [abs(self.offset_from_axis(c, bearing)) for c in range(self.channel_count)]
        return offs.index(min(offs))


class BoardVersion(enum.Enum):
    IDEAL = "ideal"
    V1 = "v1"
    V2 = "v2"
    V3 = "v3"


@dataclass(frozen=True)
class BoardProfile:
    """Board revision: sector layout, dead arcs around the chassis corners and receive mode.

    ``parallel_receive`` models boards whose receivers raise a hardware event
    on every channel at once, so a robot hears all sectors while listening.
    """

    version: BoardVersion
    layout: ChannelLayout = ChannelLayout()
    dead_zone_arcs: tuple = ()
    min_radius: float = 2.0
    parallel_receive: bool = False

    def __post_init__(self):
        arcs = []
        for a, b in self.dead_zone_arcs:
            a, b = float(a), float(b)
            if not (0.0 <= a < 360.0 and 0.0 <= b <= 360.0):
                raise ValueError("dead-zone arcs must lie within [0, 360)")
            arcs.append((a, b))
        object.__setattr__(self, "dead_zone_arcs", tuple(arcs))

    def in_dead_zone(self, bearing: float) -> bool:
        b = normalize_deg(bearing)
        for lo, hi in self.dead_zone_arcs:
            # arcs are half-open, [lo, hi), so adjacent arcs never double count
            if lo <= hi:
                if lo <= b < hi:
                    return True
            elif b >= lo or b < hi:
                return True
        return False

    @property
    def dead_fraction(self) -> float:
        total = 0.0
        for lo, hi in self.dead_zone_arcs:
            total += hi - lo if lo <= hi else 360.0 - lo + hi
        return total / 360.0


def corner_arcs(width: float, centers: Sequence[float] = (45.0, 135.0, 225.0, 315.0)) -> tuple:
    return tuple((c - width / 2.0, c + width / 2.0) for c in centers)


# Non-flat lobes used by the real board revisions.
BOARD_EMITTER = RadiationPattern(half_angle=35.0, lobe_exponent=1.0, side_floor=0.1, side_extent=90.0)
BOARD_RECEIVER = RadiationPattern(half_angle=36.0, lobe_exponent=1.0, side_floor=0.005, side_extent=45.0)
BOARD_LAYOUT = ChannelLayout(emitter_pattern=BOARD_EMITTER, receiver_pattern=BOARD_RECEIVER)

BOARDS = {
    BoardVersion.IDEAL: BoardProfile(BoardVersion.IDEAL),
    BoardVersion.V1: BoardProfile(BoardVersion.V1, BOARD_LAYOUT, corner_arcs(11.0)),
    BoardVersion.V2: BoardProfile(BoardVersion.V2, BOARD_LAYOUT, corner_arcs(2.0), parallel_receive=True),
    BoardVersion.V3: BoardProfile(BoardVersion.V3, BOARD_LAYOUT, corner_arcs(2.0), parallel_receive=True),
}


def board(name) -> BoardProfile:
    """Look up a board preset by name (``"v1"``, ``"ideal"``...) or version."""
    if isinstance(name, BoardProfile):
        return name
    return BOARDS[BoardVersion(name) if not isinstance(name, BoardVersion) else name]


@dataclass(frozen=True)
class ChannelParams:
    v_ref: float = 0.75
    decay_exponent: float = 4.0
    detect_threshold: Optional[float] = None
    comm_radius_target: float = 140.0

    def __post_init__(self):
        if self.detect_threshold is None:
            object.__setattr__(self, "detect_threshold", self.volts_at(self.comm_radius_target))
        if self.detect_threshold <= 0:
            raise ValueError("detect_threshold must be positive")

    def volts_at(self, distance: float) -> float:
        """On-axis received level at ``distance``."""
        return self.v_ref * (REF_DISTANCE / distance) ** self.decay_exponent

    @property
    def comm_radius(self) -> float:
        return REF_DISTANCE * (self.v_ref / self.detect_threshold) ** (1.0 / self.decay_exponent)

    @classmethod
    def for_radius(cls, radius: float, **kw) -> "ChannelParams":
        return cls(comm_radius_target=radius, **kw)


@dataclass(frozen=True)
class Endpoint:
    """One side of a link: where the robot is, which sector it uses and its board."""

    pose: Pose
    channel: int
    board: BoardProfile = BOARDS[BoardVersion.IDEAL]
    robot_id: Optional[int] = None


@dataclass(frozen=True)
class LinkSample:
    volts: float
    tx_robot: Optional[int]
    tx_channel: int
    rx_channel: int

    def __post_init__(self):
        if self.volts < 0:
            raise ValueError("volts must be non-negative")


def link_gain(params: ChannelParams, d: float, tx_board: BoardProfile, tx_channel: int, tx_bearing: float,
              rx_board: BoardProfile, rx_channel: int, rx_bearing: float) -> float:
    """Received volts from bearings alone (no occlusion test)."""
    if d < max(tx_board.min_radius, rx_board.min_radius):
        return 0.0
    if tx_board.in_dead_zone(tx_bearing) or rx_board.in_dead_zone(rx_bearing):
        return 0.0
    e = tx_board.layout.emitter_pattern.gain(tx_board.layout.offset_from_axis(tx_channel, tx_bearing))
    if e == 0.0:
        return 0.0
    r = rx_board.layout.receiver_pattern.gain(rx_board.layout.offset_from_axis(rx_channel, rx_bearing))
    return params.volts_at(d) * e * r


def signal_volts(world: Optional[WorldModel], params: ChannelParams, tx: Endpoint, rx: Endpoint) -> float:
    """Volts seen on ``rx.channel`` when ``tx`` emits on ``tx.channel``."""
    if tx.robot_id is not None and tx.robot_id == rx.robot_id:
        raise ValueError("a robot cannot link to itself")
    d = math.dist(tx.pose.xy, rx.pose.xy)
    v = link_gain(params, d, tx.board, tx.channel, tx.pose.bearing_to(*rx.pose.xy),
                  rx.board, rx.channel, rx.pose.bearing_to(*tx.pose.xy))
    if v > 0.0 and world is not None:
        ignore = [i for i in (tx.robot_id, rx.robot_id) if i is not None]
        if not line_of_sight(world, tx.pose.xy, rx.pose.xy, ignore):
            return 0.0
    return v


def best_rx_channel(rx_board: BoardProfile, bearing: float, incident_volts: float = 1.0) -> tuple:
    """Receiver channel with the highest level for a signal arriving from ``bearing``.

    ``incident_volts`` is the level an on-axis receiver would see. Ties go to
    the lowest channel index.
    """
    best_c, best_v = 0, -1.0
    dead = rx_board.in_dead_zone(bearing)
    for c in range(rx_board.layout.channel_count):
        g = 0.0 if dead else rx_board.layout.receiver_pattern.gain(rx_board.layout.offset_from_axis(c, bearing))
        v = incident_volts * g
        if v > best_v:
            best_c, best_v = c, v
    return best_c, best_v


class Reception(enum.Enum):
    SILENT = "silent"
    CLEAN = "clean"
    COLLIDED = "collided"


@dataclass(frozen=True)
class Transmission:
    """An emission as seen by one receiver channel: level and time interval (ms)."""

    volts: float
    t0: float
    t1: float
    tx_robot: Optional[int] = None


def detect_interference(transmissions: Sequence[Transmission], window: tuple, threshold: float) -> Reception:
    """Classify what a receiver channel hears over ``window``."""
    w0, w1 = window
    if not w1 > w0:
        raise ValueError("window must be non-empty")
    live = [t for t in transmissions if t.volts >= threshold and t.t0 < w1 and t.t1 > w0]
    if not live:
        return Reception.SILENT
    live.sort(key=lambda t: (t.t0, t.t1))
    end = live[0].t1
    for t in live[1:]:
        if t.t0 < end:
            return Reception.COLLIDED
        end = max(end, t.t1)
    return Reception.CLEAN


def coverage_fraction(board_profile: BoardProfile, params: ChannelParams, probe_distance: float,
                      step: float = 1.0) -> float:
    """Fraction of bearings from which an on-axis probe at ``probe_distance`` is not heard."""
    if probe_distance > params.comm_radius + 1e-9:
        raise ValueError("probe_distance exceeds the communication radius")
    n = int(round(360.0 / step))
    incident = params.volts_at(probe_distance)
    lost = 0
    for k in range(n):
        _, v = best_rx_channel(board_profile, k * step, incident)
        if probe_distance < board_profile.min_radius or v < params.detect_threshold:
            lost += 1
    return lost / n
