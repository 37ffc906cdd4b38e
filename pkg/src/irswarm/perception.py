"""Obstacle scanning and shape classification from a 60-sample ADC profile.

The robot stops with an obstacle ahead, turns 60 degrees left, then sweeps
right taking one reading every 2 degrees. Each reading integrates a small
cone of rays weighted by the emitter lobe, which is what blurs object edges.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import Pose, SegmentObstacle, WorldModel, cast_many, cone_offsets, polyline
from .physics import SENSOR_EMITTER, AdcModel, RadiationPattern, distance_from_adc, noise_sigma

SAMPLES = 60
STEP = 2.0
LEFT_TURN = 60.0
BIASED_STEP = 1.5
SENSOR_OFFSET = 20.0  # sensor sits this far ahead of the rotation centre
TRIGGER_RANGE = (50.0, 70.0)
VALID_RANGE = 200.0


def scan_trigger(distance_reading: Optional[float]) -> bool:
    """True when the front reading lies within 60 +- 10 mm."""
    if distance_reading is None:
        return False
    lo, hi = TRIGGER_RANGE
    return lo <= distance_reading <= hi


class MotionMode(enum.Enum):
    IDEAL = "ideal"
    BIASED = "biased"


@dataclass(frozen=True)
class ScanProfile:
    samples: tuple
    step: float = STEP
    start_bearing: float = LEFT_TURN
    # actual rotation per sample; differs from ``step`` when the drive is biased
    true_step: Optional[float] = None
    sensor_offset: float = SENSOR_OFFSET

    def __post_init__(self):
        object.__setattr__(self, "samples", tuple(int(v) for v in self.samples))
        if len(self.samples) != SAMPLES:
            raise ValueError("a scan profile holds exactly 60 samples")
        if any(not 0 <= v <= 255 for v in self.samples):
            raise ValueError("samples must be 8-bit ADC values")
        if self.true_step is None:
            object.__setattr__(self, "true_step", self.step)

    def bearing(self, index: float) -> float:
        """Bearing (degrees, left positive) of a possibly fractional sample index."""
        return self.start_bearing - index * self.true_step

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.samples, dtype=np.float64)


@dataclass(frozen=True)
class BeamModel:
    pattern: RadiationPattern = SENSOR_EMITTER
    half_angle: float = 10.0
    ray_count: int = 9


def beam_reading(world: WorldModel, center: tuple, direction: float, adc: AdcModel,
                 beam: BeamModel = BeamModel(), exclude_robot: Optional[int] = None) -> float:
    """Gain-weighted mean of the continuous per-ray readings (misses count as zero)."""
    ox = center[0] + SENSOR_OFFSET * math.cos(math.radians(direction))
    oy = center[1] + SENSOR_OFFSET * math.sin(math.radians(direction))
    offsets = cone_offsets(beam.half_angle, beam.ray_count)
    hits = cast_many(world, (ox, oy), direction + offsets, exclude_robot)
    num = den = 0.0
    for off, hit in zip(offsets, hits):
        g = beam.pattern.gain(off)
        den += g
        if hit is not None:
            num += g * float(adc.continuous(hit.distance, hit.reflectivity,
                                            math.cos(math.radians(hit.incidence_angle))))
    return num / den if den > 0 else 0.0


def perform_scan(pose: Pose, world: WorldModel, adc: AdcModel = AdcModel(),
                 motion_mode: MotionMode = MotionMode.IDEAL, rng: Optional[np.random.Generator] = None,
                 beam: BeamModel = BeamModel(), exclude_robot: Optional[int] = None) -> ScanProfile:
    """Turn left, sweep right and record 60 readings.

    In biased mode the drive only covers about 90 degrees during the right
    sweep, so each sample advances 1.5 degrees while the robot still assumes 2.
    """
    mode = MotionMode(motion_mode)
    true_step = STEP if mode is MotionMode.IDEAL else BIASED_STEP
    values = []
    for i in range(SAMPLES):
        direction = pose.heading + LEFT_TURN - i * true_step
        v = beam_reading(world, pose.xy, direction, adc, beam, exclude_robot)
        if rng is not None and v > 0.0:
            # band noise acts on the equivalent distance of the integrated reading
            d_eq = (adc.scale / v) ** (1.0 / adc.decay_exponent) - adc.offset_distance
            d_eq = max(d_eq, 1e-3)
            d_noisy = max(d_eq + rng.normal(0.0, noise_sigma(adc, d_eq)), 1e-3)
            v = float(adc.continuous(d_noisy))
        values.append(int(adc.quantize(v)))
    return ScanProfile(tuple(values), STEP, LEFT_TURN, true_step)


class ShapeKind(enum.Enum):
    FLAT = "FlatObject"
    CONVEX = "ConvexCorner"
    CONCAVE = "ConcaveCorner"
    GAP = "Gap"
    COMPLEX = "Complex"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class ObjectClass:
    kind: ShapeKind
    width_estimate: Optional[float] = None

    def __post_init__(self):
        if self.width_estimate is not None and not self.width_estimate > 0:
            raise ValueError("width_estimate must be positive")


@dataclass
class Segment:
    """A run of valid samples with refined (sub-sample) edges."""

    start: int
    stop: int  # inclusive
    left_edge: float
    right_edge: float
    extent: float  # degrees between the first and last sample of the run
    edge_extent: float  # degrees between the refined half-level edges
    min_distance: float
    max_distance: float
    slope_sign_changes: int
    points: np.ndarray  # (k, 2) cartesian points of the core samples, robot frame
    core: tuple  # sample indices used for shape fitting


@dataclass
class ScanFeatures:
    valid_mask: tuple
    distances: tuple
    segments: list = field(default_factory=list)


@dataclass(frozen=True)
class FeatureParams:
    valid_distance: float = VALID_RANGE
    smooth_window: int = 3
    dead_band: float = 1.5  # mm change ignored when counting slope sign changes
    edge_window: int = 6  # samples inward used as the local reference level
    beam_margin: float = 7.0  # degrees trimmed from each edge before shape fitting


def _point(profile: ScanProfile, index: float, dist: float) -> np.ndarray:
    """Robot-frame point seen at ``dist`` from the sensor along sample ``index``."""
    b = math.radians(profile.bearing(index))
    r = profile.sensor_offset + dist
    return np.array([r * math.cos(b), r * math.sin(b)])


def _slope_sign_changes(d: np.ndarray, window: int, dead_band: float) -> int:
    if len(d) < window + 2:
        return 0
    kernel = np.ones(window) / window
    sm = np.convolve(d, kernel, mode="valid")
    signs = []
    for delta in np.diff(sm):
        if abs(delta) <= dead_band:
            continue
        s = 1 if delta > 0 else -1
        if not signs or signs[-1] != s:
            signs.append(s)
    return max(0, len(signs) - 1)


def _refine_edge(adc: np.ndarray, idx: int, inward: int, outward_ok: bool, window: int) -> float:
    """Sub-sample position where the profile crosses half its local level."""
    lo, hi = sorted((idx, idx + inward * window))
    lo, hi = max(lo, 0), min(hi, len(adc) - 1)
    half = 0.5 * adc[lo:hi + 1].max()
    k = idx
    # walk inward to the first sample at or above half level
    while 0 <= k + inward < len(adc) and adc[k] < half:
        k += inward
    out = k - inward
    if not outward_ok or not 0 <= out < len(adc) or adc[out] >= adc[k]:
        return float(k) - 0.5 * inward
    frac = (adc[k] - half) / (adc[k] - adc[out])
    return float(k) - inward * frac


def extract_features(profile: ScanProfile, adc_model: AdcModel = AdcModel(),
                     params: FeatureParams = FeatureParams()) -> ScanFeatures:
    """Validity mask, merged runs, refined edges and per-run shape statistics."""
    a = profile.array
    threshold = int(adc_model.quantize(adc_model.continuous(params.valid_distance)))
    threshold = max(threshold, 1)
    valid = a >= threshold
    dist = np.array([distance_from_adc(adc_model, int(v)) or math.inf for v in a])

    runs = []
    i = 0
    while i < SAMPLES:
        if not valid[i]:
            i += 1
            continue
        j = i
        while j + 1 < SAMPLES and valid[j + 1]:
            j += 1
        runs.append([i, j])
        i = j + 1
    merged = []
    for r in runs:
        # a single dropped sample inside an object is beam-spread noise
        if merged and r[0] - merged[-1][1] == 2:
            merged[-1][1] = r[1]
        else:
            merged.append(r)

    segments = []
    for s, e in merged:
        left = _refine_edge(a, s, +1, s > 0, params.edge_window)
        right = _refine_edge(a, e, -1, e < SAMPLES - 1, params.edge_window)
        if right < left:
            left = right = 0.5 * (left + right)
        edge_extent = (right - left) * profile.true_step
        extent = (e - s) * profile.true_step
        idx = [k for k in range(s, e + 1) if valid[k]]
        margin = params.beam_margin / profile.true_step
        core = tuple(k for k in idx if left + margin <= k <= right - margin)
        d = dist[idx]
        pts = np.array([_point(profile, k, dist[k]) for k in core]).reshape(-1, 2)
        # edge blur always bends the flanks outward, so count turns on the core only
        turns = _slope_sign_changes(dist[list(core)], params.smooth_window, params.dead_band)
        segments.append(Segment(
            s, e, left, right, extent, edge_extent, float(d.min()), float(d.max()), turns, pts, core))
    return ScanFeatures(tuple(bool(v) for v in valid), tuple(float(x) for x in dist), segments)


def _fit_line(pts: np.ndarray):
    """Total least squares line: returns (centroid, unit direction, rss)."""
    c = pts.mean(axis=0)
    u, sv, vt = np.linalg.svd(pts - c, full_matrices=False)
    rss = float(sv[1] ** 2) if len(sv) > 1 else 0.0
    return c, vt[0], rss


def _intersect(p, u, q, v):
    """Intersection of lines p + s*u and q + t*v (None when parallel)."""
    m = np.array([[u[0], -v[0]], [u[1], -v[1]]])
    if abs(np.linalg.det(m)) < 1e-9:
        return None
    s, _ = np.linalg.solve(m, q - p)
    return p + s * u


def _ray_line(origin, angle_deg, c, u):
    d = np.array([math.cos(math.radians(angle_deg)), math.sin(math.radians(angle_deg))])
    return _intersect(np.asarray(origin, dtype=float), d, c, u)


def _sensor_at(profile: ScanProfile, index: float):
    b = math.radians(profile.bearing(index))
    return (profile.sensor_offset * math.cos(b), profile.sensor_offset * math.sin(b))


@dataclass(frozen=True)
class ClassifierParams:
    flat_angle: float = 35.0  # two fitted lines closer than this count as one
    min_core: int = 2
    complex_rms: float = 6.0  # mm, residual of the best two-line fit
    concave_bow: float = 5.0  # mm the middle must sit behind the flanks for a concave call
    convex_bulge: float = 0.12  # bulge relative to chord that marks a convex corner outright


def _two_line_fit(pts):
    best = None
    n = len(pts)
    for k in range(3, n - 2):
        c1, u1, r1 = _fit_line(pts[:k])
        c2, u2, r2 = _fit_line(pts[k - 1:])
        if best is None or r1 + r2 < best[0]:
            best = (r1 + r2, (c1, u1), (c2, u2))
    return best


def classify(features: ScanFeatures, profile: Optional[ScanProfile] = None,
             params: ClassifierParams = ClassifierParams()) -> ObjectClass:
    """Map scan features to an object class (deterministic)."""
    if profile is None:
        profile = ScanProfile((0,) * SAMPLES)
    segs = features.segments
    if not segs:
        return ObjectClass(ShapeKind.UNKNOWN)
    if len(segs) >= 3:
        return ObjectClass(ShapeKind.COMPLEX)
    if len(segs) == 2:
        a, b = segs
        # inner edges face each other across the invalid run
        width = float(np.linalg.norm(_edge_point(a, profile, a.right_edge)
                                     - _edge_point(b, profile, b.left_edge)))
        return ObjectClass(ShapeKind.GAP, width if width > 0 else None)

    seg = segs[0]
    pts = seg.points
    if len(pts) < params.min_core:
        # narrower than the beam: the profile is just the beam shape
        return ObjectClass(ShapeKind.UNKNOWN)
    if len(pts) < 6:
        return _flat(seg, profile, pts)
    fit = _two_line_fit(pts)
    _, (c1, u1), (c2, u2) = fit
    cosang = abs(float(np.dot(u1, u2)))
    angle = math.degrees(math.acos(min(1.0, cosang)))
    b = bow(pts)
    # a short, strongly bulging core is a blunted convex apex even if the fit angle is small
    if b < -params.convex_bulge * float(np.linalg.norm(pts[-1] - pts[0])):
        return ObjectClass(ShapeKind.CONVEX)
    if angle < params.flat_angle:
        return _flat(seg, profile, pts)
    rms = math.sqrt(fit[0] / len(pts))
    if rms > params.complex_rms:
        return ObjectClass(ShapeKind.COMPLEX)
    vertex = _intersect(c1, u1, c2, u2)
    if vertex is None:
        return ObjectClass(ShapeKind.COMPLEX)
    chord_mid = 0.5 * (pts[0] + pts[-1])
    if np.linalg.norm(vertex) < np.linalg.norm(chord_mid):
        return ObjectClass(ShapeKind.CONVEX) if b < 0.0 else _flat(seg, profile, pts)
    return ObjectClass(ShapeKind.CONCAVE) if b >= params.concave_bow else _flat(seg, profile, pts)


def bow(pts: np.ndarray) -> float:
    """Mean offset of the middle third behind the outer thirds of a line fit.

    Positive when the middle recedes (concave), negative when it bulges towards
    the robot (convex).
    """
    c, u, _ = _fit_line(pts)
    n = np.array([-u[1], u[0]])
    if np.dot(n, c) < 0:
        n = -n
    r = (pts - c) @ n
    k = len(pts)
    m = max(1, k // 3)
    mid = r[m:k - m].mean() if k > 2 * m else r[k // 2]
    return float(mid - np.r_[r[:m], r[k - m:]].mean())


def _edge_point(seg: Segment, profile: ScanProfile, edge: float) -> np.ndarray:
    """Where the refined edge ray meets the segment surface."""
    if len(seg.points) >= 2:
        c, u, _ = _fit_line(seg.points)
        p = _ray_line(_sensor_at(profile, edge), profile.bearing(edge), c, u)
        if p is not None:
            return p
    return _point(profile, edge, seg.min_distance)


def _flat(seg: Segment, profile: ScanProfile, pts: np.ndarray) -> ObjectClass:
    if len(pts) >= 2:
        c, u, _ = _fit_line(pts)
    else:
        c, u = pts[0], np.array([0.0, 1.0])
    p1 = _ray_line(_sensor_at(profile, seg.left_edge), profile.bearing(seg.left_edge), c, u)
    p2 = _ray_line(_sensor_at(profile, seg.right_edge), profile.bearing(seg.right_edge), c, u)
    if p1 is None or p2 is None:
        return ObjectClass(ShapeKind.FLAT)
    width = float(np.linalg.norm(p1 - p2))
    return ObjectClass(ShapeKind.FLAT, width if width > 0 else None)


def center_of_mass(profile: ScanProfile) -> float:
    """ADC-weighted mean sample index."""
    a = profile.array
    return float((a * np.arange(SAMPLES)).sum() / a.sum()) if a.sum() > 0 else float("nan")


@dataclass(frozen=True)
class Scene:
    """A reference obstacle layout in front of a robot at the origin facing +x."""

    name: str
    obstacles: tuple
    expected: ShapeKind
    true_width: Optional[float] = None

    def world(self) -> WorldModel:
        return WorldModel(list(self.obstacles))


def _flat_scene(width: float, face: float = 80.0) -> tuple:
    return (SegmentObstacle((face, -width / 2), (face, width / 2)),)


def canonical_scenes() -> dict:
    """The six reference scenes plus a sub-resolution 15 mm object.

    Object faces sit 60 mm in front of the sensor, i.e. 80 mm from the
    rotation centre.
    """
    convex = tuple(polyline([(122.4, -42.4), (80.0, 0.0), (122.4, 42.4)]))
    concave = tuple(polyline([(80.0, -40.0), (120.0, 0.0), (80.0, 40.0)]))
    gap = (SegmentObstacle((80.0, 22.5), (80.0, 62.5)), SegmentObstacle((80.0, -62.5), (80.0, -22.5)))
    scenes = [
        Scene("flat32", _flat_scene(32.0), ShapeKind.FLAT, 32.0),
        Scene("flat48", _flat_scene(48.0), ShapeKind.FLAT, 48.0),
        Scene("flat144", _flat_scene(144.0), ShapeKind.FLAT, 144.0),
        Scene("convex90", convex, ShapeKind.CONVEX),
        Scene("concave90", concave, ShapeKind.CONCAVE),
        Scene("gap45", gap, ShapeKind.GAP, 45.0),
    ]
    out = {s.name: s for s in scenes}
    out["flat15"] = Scene("flat15", _flat_scene(15.0), ShapeKind.FLAT, 15.0)
    return out


CANONICAL = ("flat32", "flat48", "flat144", "convex90", "concave90", "gap45")


def profile_rows(profile: ScanProfile, adc_model: AdcModel = AdcModel()) -> list:
    """(sample_index, bearing_deg, adc, distance_mm_est) for plotting."""
    rows = []
    for i, v in enumerate(profile.samples):
        d = distance_from_adc(adc_model, v)
        rows.append((i, profile.start_bearing - i * profile.step, v, d))
    return rows
