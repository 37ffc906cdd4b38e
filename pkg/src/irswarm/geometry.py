"""Arena geometry and ray casting.

Obstacles are straight segments with a reflectivity; robots are discs of
radius 15 mm. All lengths are millimeters and all angles are degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels

BODY_RADIUS = 15.0


def normalize_deg(angle: float) -> float:
    """Wrap an angle into [0, 360)."""
    a = angle % 360.0
    # a tiny negative input rounds up to exactly 360.0
    return 0.0 if a >= 360.0 else a


def wrap180(angle: float) -> float:
    """Wrap an angle into [-180, 180)."""
    return normalize_deg(angle + 180.0) - 180.0


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.heading)):
            raise ValueError("pose coordinates must be finite")
        object.__setattr__(self, "heading", normalize_deg(self.heading))

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)

    def forward(self, dist: float) -> tuple[float, float]:
        """Point ``dist`` mm ahead along the heading."""
        h = math.radians(self.heading)
        return (self.x + dist * math.cos(h), self.y + dist * math.sin(h))

    def rotated(self, delta: float) -> "Pose":
        return Pose(self.x, self.y, self.heading + delta)

    def bearing_to(self, x: float, y: float) -> float:
        """Bearing of a point relative to the heading, in [0, 360)."""
        return normalize_deg(math.degrees(math.atan2(y - self.y, x - self.x)) - self.heading)


@dataclass(frozen=True)
class SegmentObstacle:
    endpoint_a: tuple[float, float]
    endpoint_b: tuple[float, float]
    reflectivity: float = 1.0

    def __post_init__(self):
        if tuple(self.endpoint_a) == tuple(self.endpoint_b):
            raise ValueError("segment endpoints must be distinct")
        if not 0.0 <= self.reflectivity <= 1.0:
            raise ValueError("reflectivity must lie in [0, 1]")

    @property
    def length(self) -> float:
        return math.dist(self.endpoint_a, self.endpoint_b)


@dataclass
class RobotBody:
    """Geometric footprint of a robot (the controller lives elsewhere)."""

    robot_id: int
    pose: Pose
    radius: float = BODY_RADIUS
    reflectivity: float = 0.8


@dataclass(frozen=True)
class RayHit:
    distance: float
    obstacle_index: int
    incidence_angle: float
    robot_id: Optional[int] = None
    reflectivity: float = 1.0
    point: tuple[float, float] = (0.0, 0.0)

    @property
    def is_robot(self) -> bool:
        return self.robot_id is not None


@dataclass
class WorldModel:
    """Obstacles, robot bodies and the arena rectangle ``(xmin, ymin, xmax, ymax)``."""

    obstacles: Sequence[SegmentObstacle] = ()
    robots: list[RobotBody] = field(default_factory=list)
    arena_bounds: tuple[float, float, float, float] = (-1000.0, -1000.0, 1000.0, 1000.0)
    ambient_level: float = 0.0

    def __post_init__(self):
        self.obstacles = tuple(self.obstacles)
        xmin, ymin, xmax, ymax = self.arena_bounds
        if not (xmin < xmax and ymin < ymax):
            raise ValueError("arena bounds must describe a non-empty rectangle")
        if not 0.0 <= self.ambient_level <= 1.0:
            raise ValueError("ambient_level must lie in [0, 1]")
        for i, a in enumerate(self.robots):
            for b in self.robots[i + 1:]:
                if math.dist(a.pose.xy, b.pose.xy) < a.radius + b.radius:
                    raise ValueError(f"robots {a.robot_id} and {b.robot_id} overlap at spawn")
        if self.obstacles:
            self._seg = np.array(
                [(*o.endpoint_a, *o.endpoint_b) for o in self.obstacles], dtype=np.float64)
        else:
            self._seg = np.zeros((0, 4))

    def robot(self, robot_id: int) -> RobotBody:
        for r in self.robots:
            if r.robot_id == robot_id:
                return r
        raise KeyError(robot_id)

    def contains(self, x: float, y: float) -> bool:
        xmin, ymin, xmax, ymax = self.arena_bounds
        return xmin <= x <= xmax and ymin <= y <= ymax

    def _discs(self, exclude: Optional[int]):
        bodies = [r for r in self.robots if r.robot_id != exclude]
        arr = np.array([(r.pose.x, r.pose.y, r.radius) for r in bodies], dtype=np.float64)
        return bodies, arr.reshape(-1, 3)

    def exit_distance(self, x: float, y: float, angle_rad: float) -> float:
        """Distance from an interior point to the arena boundary along a ray."""
        xmin, ymin, xmax, ymax = self.arena_bounds
        dx, dy = math.cos(angle_rad), math.sin(angle_rad)
        t = math.inf
        if dx > 0:
            t = min(t, (xmax - x) / dx)
        elif dx < 0:
            t = min(t, (xmin - x) / dx)
        if dy > 0:
            t = min(t, (ymax - y) / dy)
        elif dy < 0:
            t = min(t, (ymin - y) / dy)
        return t


def _make_hit(world, bodies, origin, angle_rad, t, idx) -> RayHit:
    dx, dy = math.cos(angle_rad), math.sin(angle_rad)
    px, py = origin[0] + t * dx, origin[1] + t * dy
    n_seg = len(world.obstacles)
    if idx < n_seg:
        ob = world.obstacles[idx]
        ex = ob.endpoint_b[0] - ob.endpoint_a[0]
        ey = ob.endpoint_b[1] - ob.endpoint_a[1]
        # angle between ray and segment normal = 90 - angle between ray and segment
        cos_along = abs(dx * ex + dy * ey) / math.hypot(ex, ey)
        inc = 90.0 - math.degrees(math.acos(min(1.0, cos_along)))
        return RayHit(t, idx, min(90.0, max(0.0, inc)), None, ob.reflectivity, (px, py))
    body = bodies[idx - n_seg]
    nx, ny = px - body.pose.x, py - body.pose.y
    cos_n = abs(dx * nx + dy * ny) / max(math.hypot(nx, ny), 1e-12)
    inc = math.degrees(math.acos(min(1.0, cos_n)))
    return RayHit(t, -1, min(90.0, max(0.0, inc)), body.robot_id, body.reflectivity, (px, py))


def ray_cast(world: WorldModel, origin: tuple[float, float], direction: float,
             exclude_robot: Optional[int] = None) -> Optional[RayHit]:
    """Nearest hit along a ray, or None.

    ``exclude_robot`` skips the body of the robot the ray starts from.
    """
    if not math.isfinite(direction):
        raise ValueError("direction must be finite")
    return cast_many(world, origin, [direction], exclude_robot)[0]


def cast_many(world: WorldModel, origin: tuple[float, float], directions: Sequence[float],
              exclude_robot: Optional[int] = None) -> list[Optional[RayHit]]:
    """Vectorised ``ray_cast`` over several directions from one origin."""
    ox, oy = float(origin[0]), float(origin[1])
    if not world.contains(ox, oy):
        raise ValueError("ray origin lies outside the arena")
    angles = np.radians(np.asarray(directions, dtype=np.float64))
    limits = np.array([world.exit_distance(ox, oy, a) for a in angles])
    bodies, discs = world._discs(exclude_robot)
    ts, idxs = kernels.cast_rays(ox, oy, angles, world._seg, discs, limits)
    out = []
    for a, t, i in zip(angles, ts, idxs):
        if i < 0:
            out.append(None)
        else:
            out.append(_make_hit(world, bodies, (ox, oy), float(a), float(t), int(i)))
    return out


def cone_offsets(half_angle: float, ray_count: int) -> np.ndarray:
    if ray_count < 3 or ray_count % 2 == 0:
        raise ValueError("ray_count must be odd and at least 3")
    if not 0.0 < half_angle <= 90.0:
        raise ValueError("half_angle must lie in (0, 90]")
    return np.linspace(-half_angle, half_angle, ray_count)


def cone_cast(world: WorldModel, origin: tuple[float, float], direction: float,
              half_angle: float, ray_count: int,
              exclude_robot: Optional[int] = None) -> list[tuple[float, Optional[RayHit]]]:
    """Fan of ``ray_count`` rays spread uniformly over ``±half_angle``."""
    offsets = cone_offsets(half_angle, ray_count)
    hits = cast_many(world, origin, direction + offsets, exclude_robot)
    return [(float(o), h) for o, h in zip(offsets, hits)]


def line_of_sight(world: WorldModel, a: tuple[float, float], b: tuple[float, float],
                  ignore: Sequence[int] = ()) -> bool:
    """True when nothing blocks the straight path from ``a`` to ``b``.

    Bodies listed in ``ignore`` (typically the two endpoints) are transparent.
    """
    d = math.dist(a, b)
    if d == 0.0:
        return True
    angle = math.atan2(b[1] - a[1], b[0] - a[0])
    bodies = [r for r in world.robots if r.robot_id not in ignore]
    discs = np.array([(r.pose.x, r.pose.y, r.radius) for r in bodies],
                     dtype=np.float64).reshape(-1, 3)
    ts, _ = kernels.cast_rays(a[0], a[1], np.array([angle]), world._seg, discs, d)
    return not math.isfinite(float(ts[0]))


def polyline(points: Sequence[tuple[float, float]], reflectivity: float = 1.0) -> list[SegmentObstacle]:
    """Chain of segments through consecutive points."""
    return [SegmentObstacle(tuple(points[i]), tuple(points[i + 1]), reflectivity)
            for i in range(len(points) - 1)]
