"""Monte Carlo experiments with declared bounds.

Each experiment derives one seed per replication from a master seed, runs the
replications (optionally on a thread or process pool) and merges results in
seed order, so the report never depends on completion order.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from functools import partial
from typing import Callable, Optional, Sequence

import numpy as np

from .. import kernels
from ..channel import (BoardProfile, BoardVersion, ChannelLayout, ChannelParams, board,
                       coverage_fraction, link_gain)
from ..codec import Frame
from ..geometry import Pose, RobotBody, WorldModel, wrap180
from ..perception import (CANONICAL, AdcModel, MotionMode, canonical_scenes, classify,
                          extract_features, perform_scan)
from ..physics import RadiationPattern, sample_recovered
from ..protocol import RobotController, ms_to_ticks, ticks_to_ms
from .engine import Engine, Node
from .report import ExperimentReport
from .runner import robot_rng
from .seeds import derive_many

# Line topology used for message propagation (see README for the rationale).
LINE_SPACING = 66.0
LINE_OFFSET = 10.0
LINE_WOBBLE = 20.0
RELAY_REPEATS = 250

PROPAGATION_BOUNDS = {
    ("repeat", None): (8.0, 18.0),
    ("confirm", BoardVersion.V1): (16.0, 72.0),
    ("confirm", BoardVersion.V2): (0.8, 6.0),
    ("confirm", BoardVersion.V3): (0.8, 6.0),
}
DEADZONE_BOUNDS = {
    BoardVersion.IDEAL: (0.0, 0.0),
    BoardVersion.V1: (0.10, 0.15),
    BoardVersion.V2: (0.0, 0.03),
    BoardVersion.V3: (0.0, 0.03),
}
ZONES = {"close": 50.0, "near": 100.0, "far": 200.0}


def replicate(fn: Callable, seeds: Sequence[int], workers: int = 1, pool: str = "thread") -> list:
    """Map ``fn`` over ``seeds``; results come back in seed order."""
    if workers <= 1 or len(seeds) <= 1:
        return [fn(s) for s in seeds]
    executor = ThreadPoolExecutor if pool == "thread" else ProcessPoolExecutor
    with executor(max_workers=workers) as ex:
        return list(ex.map(fn, seeds))


def single_channel_board() -> BoardProfile:
    """Degenerate layout: one omnidirectional channel, so every attempt meets."""
    flat = RadiationPattern(180.0, 0.0, 0.0, 180.0)
    return BoardProfile(BoardVersion.IDEAL, ChannelLayout(1, 180.0, flat, flat))


# -- contact ----------------------------------------------------------------------------------

def contact_once(seed: int, distance: float = 100.0, board_name="ideal",
                 until_ms: float = 20000.0, resend_ms=(10.0, 100.0)) -> Optional[float]:
    """Seconds until the first Request is answered by a Ready, or None on timeout."""
    b = single_channel_board() if board_name == "single" else board(board_name)
    rng = np.random.default_rng(seed)
    nodes = []
    for i, (x, y) in enumerate([(0.0, 0.0), (distance, 0.0)]):
        h = float(rng.uniform(0.0, 360.0))
        ctrl = RobotController(i, robot_rng(seed, i), channel_count=b.layout.channel_count,
                               parallel_receive=b.parallel_receive, resend_range_ms=resend_ms)
        ctrl.send_with_confirmation(Frame.make(0x5A), ms_to_ticks(until_ms))
        nodes.append(Node(RobotBody(i, Pose(x, y, h)), b, ctrl, h))
    half = distance / 2 + 200.0
    world = WorldModel([], [n.body for n in nodes], arena_bounds=(-200.0, -half, distance + 200.0, half))
    engine = Engine(world, nodes)
    engine.start()
    engine.run(ms_to_ticks(until_ms),
               stop=lambda e: any(n.ctrl.contact.first_contact_time is not None for n in e.nodes))
    times = [n.ctrl.contact.first_contact_time for n in nodes if n.ctrl.contact.first_contact_time is not None]
    return min(times) / 1000.0 if times else None


def experiment_contact_time(distance: float = 100.0, board_name="ideal", seeds: int = 1000,
                            master_seed: int = 1, until_ms: float = 20000.0, workers: int = 1,
                            bounds: Optional[tuple] = (0.8, 2.0)) -> ExperimentReport:
    seed_list = derive_many(master_seed, seeds)
    fn = partial(contact_once, distance=distance, board_name=board_name, until_ms=until_ms)
    vals = replicate(fn, seed_list, workers)
    return ExperimentReport(
        "contact", "mean", bounds, "first contact within about 1-1.5 s",
        {"distance_mm": distance, "board": str(board_name), "seeds": seeds,
         "master_seed": master_seed, "until_ms": until_ms},
        [{"seed": s, "value": v} for s, v in zip(seed_list, vals)])


# -- propagation ------------------------------------------------------------------------------

def line_positions(n: int, spacing: float = LINE_SPACING, offset: float = LINE_OFFSET) -> list:
    """Zigzag line: x = i * spacing, y alternating -offset / +offset."""
    return [(i * spacing, offset if i % 2 else -offset) for i in range(n)]


def propagation_once(seed: int, n: int = 10, protocol: str = "repeat", board_name="v1",
                     spacing: float = LINE_SPACING, offset: float = LINE_OFFSET,
                     wobble: float = LINE_WOBBLE, repeats: int = RELAY_REPEATS,
                     until_s: float = 200.0) -> Optional[float]:
    """Seconds until robot n-1 holds the frame injected at robot 0."""
    if n < 2:
        raise ValueError("propagation needs at least two robots")
    b = board(board_name)
    rng = np.random.default_rng(seed)
    until = ms_to_ticks(until_s * 1000.0)
    nodes = []
    for i, (x, y) in enumerate(line_positions(n, spacing, offset)):
        h = float(rng.uniform(0.0, 360.0))
        ctrl = RobotController(i, robot_rng(seed, i), channel_count=b.layout.channel_count,
                               parallel_receive=b.parallel_receive, relay=protocol, relay_repeats=repeats)
        nodes.append(Node(RobotBody(i, Pose(x, y, h)), b, ctrl, h, wobble))
    frame = Frame.make(0xA5)
    if protocol == "repeat":
        nodes[0].ctrl.send_without_confirmation(frame, repeats)
    elif protocol == "confirm":
        nodes[0].ctrl.send_with_confirmation(frame, until)
    else:
        raise ValueError("protocol must be 'repeat' or 'confirm'")
    world = WorldModel([], [nd.body for nd in nodes],
                       arena_bounds=(-200.0, -200.0, (n - 1) * spacing + 200.0, 200.0))
    engine = Engine(world, nodes)
    engine.start()
    last = nodes[-1].ctrl
    engine.run(until, stop=lambda e: bool(last.received))
    return ticks_to_ms(last.received[0][0]) / 1000.0 if last.received else None


def experiment_propagation(n: int = 10, protocol: str = "repeat", board_name="v1", seeds: int = 30,
                           master_seed: int = 1, workers: int = 1, until_s: float = 200.0,
                           **layout) -> ExperimentReport:
    version = board(board_name).version
    key = (protocol, None) if protocol == "repeat" else (protocol, version)
    bounds = PROPAGATION_BOUNDS.get(key) if n == 10 else None
    seed_list = derive_many(master_seed, seeds)
    fn = partial(propagation_once, n=n, protocol=protocol, board_name=board_name, until_s=until_s, **layout)
    vals = replicate(fn, seed_list, workers)
    ref = {"repeat": "10 robots without confirmation: about 10-15 s",
           "confirm": "with confirmation: 20-60 s (V1), 1-5 s (V2/V3)"}[protocol]
    params = {"n": n, "protocol": protocol, "board": version.value, "seeds": seeds,
              "master_seed": master_seed, "until_s": until_s, "spacing": LINE_SPACING,
              "offset": LINE_OFFSET, "wobble": LINE_WOBBLE, "repeats": RELAY_REPEATS}
    params.update(layout)
    return ExperimentReport(f"propagation-{protocol}-{version.value}", "median", bounds, ref, params,
                            [{"seed": s, "value": v} for s, v in zip(seed_list, vals)])


# -- channel rendezvous -----------------------------------------------------------------------

def wilson_interval(hits: int, n: int, z: float = 1.96) -> tuple:
    if n == 0:
        return (0.0, 1.0)
    p = hits / n
    den = 1 + z * z / n
    c = (p + z * z / (2 * n)) / den
    h = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return (max(0.0, c - h), min(1.0, c + h))


def experiment_channel_match(trials: int = 100_000, n_tx: int = 6, n_rx: int = 6, master_seed: int = 1,
                             lockstep: bool = False, offset: int = 0,
                             resend_ms=(10.0, 100.0)) -> ExperimentReport:
    """Per-attempt frequency that sender and receiver sit on the facing channel pair."""
    seed = derive_many(master_seed, 1)[0]
    target_tx, target_rx = 2 % n_tx, 3 % n_rx
    lo, hi = (ms_to_ticks(x) for x in resend_ms)
    hits = kernels.channel_match(n_tx, n_rx, target_tx, target_rx, trials, lo, hi, seed, lockstep, offset)
    freq = hits / trials
    expected = 1.0 / (n_tx * n_rx)
    bounds = None if lockstep else (0.025, 0.031) if (n_tx, n_rx) == (6, 6) else (0.9 * expected, 1.1 * expected)
    return ExperimentReport(
        "channel-match", "fraction", bounds, "both channels meet with probability 1/6 * 1/6",
        {"trials": trials, "n_tx": n_tx, "n_rx": n_rx, "lockstep": lockstep, "offset": offset,
         "master_seed": master_seed, "backend": kernels.BACKEND},
        [{"seed": seed, "value": freq, "hits": hits}],
        extra={"expected": expected, "ci95": list(wilson_interval(hits, trials))})


# -- dead zones -------------------------------------------------------------------------------

def experiment_deadzone(board_name="v1", probe_distance: float = 100.0,
                        threshold: Optional[float] = None) -> ExperimentReport:
    b = board(board_name)
    params = ChannelParams(detect_threshold=threshold)
    frac = coverage_fraction(b, params, probe_distance)
    return ExperimentReport(
        f"deadzone-{b.version.value}", "value", DEADZONE_BOUNDS[b.version],
        "10-15% of the communication area lost on the first board",
        {"board": b.version.value, "probe_distance": probe_distance,
         "threshold": params.detect_threshold},
        [{"seed": None, "value": frac}])


# -- interference -----------------------------------------------------------------------------

def sector_board(opening_half_angle: float) -> BoardProfile:
    """Flat-top sectors of the given half-angle tiling the full circle."""
    count = int(round(180.0 / opening_half_angle))
    pat = RadiationPattern(opening_half_angle, 0.0, 0.05, 2 * opening_half_angle)
    return BoardProfile(BoardVersion.IDEAL, ChannelLayout(count, opening_half_angle, pat, pat))


def interference_once(rng: np.random.Generator, b: BoardProfile, radius: float, count: int,
                      placement: str, params: ChannelParams) -> tuple:
    """One placement. Returns (target heard, collision)."""
    lay = b.layout
    width = 360.0 / lay.channel_count
    rx_heading = float(rng.uniform(0.0, 360.0))
    if placement == "random":
        brg = rng.uniform(0.0, 360.0, count)
    elif placement == "co-sector":
        base = float(rng.uniform(-lay.opening_half_angle, lay.opening_half_angle))
        brg = base + rng.uniform(-0.5, 0.5, count) * lay.opening_half_angle
    elif placement == "adjacent":
        if count > lay.channel_count:
            raise ValueError("more transmitters than sectors")
        first = int(rng.integers(lay.channel_count))
        jitter = rng.uniform(-0.5, 0.5, count) * lay.opening_half_angle
        brg = np.array([((first + k) % lay.channel_count) * width for k in range(count)]) + jitter
    else:
        raise ValueError("placement must be 'random', 'co-sector' or 'adjacent'")
    # bearings are relative to the receiver heading; transmitters face it on their best sector
    tx = []
    for rb in brg:
        world_angle = rx_heading + float(rb)
        tx_heading = float(rng.uniform(0.0, 360.0))
        back = wrap180(world_angle + 180.0 - tx_heading)
        tx.append((float(rb), lay.nearest_channel(back), back))
    rx_ch = lay.nearest_channel(tx[0][0])

    def level(t):
        rb, ch, back = t
        return link_gain(params, radius, b, ch, back, b, rx_ch, rb)

    if level(tx[0]) < params.detect_threshold:
        return False, False
    return True, any(level(t) >= params.detect_threshold for t in tx[1:])


def experiment_interference(zone: str = "close", opening_half_angle: float = 45.0, transmitter_count: int = 2,
                            placement: str = "random", trials: int = 2000,
                            master_seed: int = 1) -> ExperimentReport:
    """Collision rate at a central receiver with transmitters on the zone circle."""
    if transmitter_count < 1:
        raise ValueError("transmitter_count must be at least 1")
    radius = ZONES[zone]
    b = sector_board(opening_half_angle)
    params = ChannelParams()
    seed = derive_many(master_seed, 1)[0]
    rng = np.random.default_rng(seed)
    heard = collided = 0
    for _ in range(trials):
        h, c = interference_once(rng, b, radius, transmitter_count, placement, params)
        heard += h
        collided += c
    rate = collided / trials
    bounds = None
    if transmitter_count == 1 or placement == "adjacent" and opening_half_angle <= 30.0 and radius >= 100.0:
        bounds = (0.0, 0.0)
    elif placement == "co-sector" and radius <= 50.0 and radius < params.comm_radius:
        bounds = (1e-9, 1.0)
    return ExperimentReport(
        f"interference-{zone}-{2 * opening_half_angle:g}deg", "fraction", bounds,
        "narrower sectors avoid interference in the close and near radius",
        {"zone": zone, "radius": radius, "opening_half_angle": opening_half_angle,
         "transmitter_count": transmitter_count, "placement": placement, "trials": trials,
         "master_seed": master_seed},
        [{"seed": seed, "value": rate, "heard": heard, "collided": collided}])


# -- bidirectional attenuation ----------------------------------------------------------------

def experiment_bidirectional(board_name="v1", trials: int = 50000, d_range=(50.0, 140.0),
                             master_seed: int = 1, bounds: Optional[tuple] = (0.2, 0.6)) -> ExperimentReport:
    """Bidirectional over unidirectional contact frequency on arbitrary channel pairs.

    Each trial places B at a random distance and bearing from A, with random
    headings, and picks an arbitrary channel on each robot. The pair is in
    unidirectional contact when at least one direction clears the threshold and
    in bidirectional contact when both do. The directions differ only when
    emitter and receiver lobes differ in shape.
    """
    b = board(board_name)
    params = ChannelParams()
    thr = params.detect_threshold
    seed = derive_many(master_seed, 1)[0]
    rng = np.random.default_rng(seed)
    n = b.layout.channel_count
    uni = both = 0
    for _ in range(trials):
        d = float(rng.uniform(*d_range))
        h_a, h_b, brg = rng.uniform(0.0, 360.0, 3)
        c, j = (int(x) for x in rng.integers(n, size=2))
        bear_a = (brg - h_a) % 360.0  # bearing of B seen from A
        bear_b = (brg + 180.0 - h_b) % 360.0
        fw = link_gain(params, d, b, c, bear_a, b, j, bear_b) >= thr
        bw = link_gain(params, d, b, j, bear_b, b, c, bear_a) >= thr
        uni += fw or bw
        both += fw and bw
    ratio = both / uni if uni else float("nan")
    return ExperimentReport(
        f"bidirectional-{b.version.value}", "value", bounds,
        "bidirectional contact on an arbitrary channel has probability 0.25-0.5",
        {"board": b.version.value, "trials": trials, "d_range": list(d_range), "master_seed": master_seed},
        [{"seed": seed, "value": ratio, "unidirectional": uni, "bidirectional": both}],
        extra={"unidirectional_rate": uni / trials})


# -- sensing ----------------------------------------------------------------------------------

def experiment_sensor_bands(draws: int = 10_000, distances=(50.0, 100.0, 150.0), expected=(1.0, 4.0, 10.0),
                            master_seed: int = 1, rel_tol: float = 0.2) -> ExperimentReport:
    """Recovered-distance spread against the stated accuracy bands."""
    model = AdcModel()
    seed = derive_many(master_seed, 1)[0]
    rng = np.random.default_rng(seed)
    rows = []
    worst = 0.0
    for d, want in zip(distances, expected):
        r = sample_recovered(model, d, draws, rng)
        sd = float(np.nanstd(r))
        err = abs(sd - want) / want
        worst = max(worst, err)
        rows.append({"seed": seed, "distance": d, "value": sd, "expected": want, "rel_error": err})
    return ExperimentReport("sensor-bands", "value", (0.0, rel_tol), "accuracy bands 1/4/10 mm",
                            {"draws": draws, "master_seed": master_seed}, rows, value=worst)


def experiment_scan_recognition(trials: int = 200, master_seed: int = 1,
                                motion_mode: str = "ideal") -> ExperimentReport:
    """Noise-free class, noisy accuracy and width error per canonical scene."""
    scenes = canonical_scenes()
    rng = np.random.default_rng(derive_many(master_seed, 1)[0])
    pose = Pose(0.0, 0.0, 0.0)
    mode = MotionMode(motion_mode)
    rows = []
    for name in CANONICAL:
        sc = scenes[name]
        world = sc.world()
        prof = perform_scan(pose, world, motion_mode=mode)
        clean = classify(extract_features(prof), prof)
        ok = 0
        for _ in range(trials):
            p = perform_scan(pose, world, motion_mode=mode, rng=rng)
            ok += classify(extract_features(p), p).kind is sc.expected
        width_err = None
        if sc.expected.value == "FlatObject" and clean.width_estimate is not None:
            width_err = abs(clean.width_estimate - sc.true_width) / sc.true_width
        rows.append({"seed": master_seed, "scene": name, "clean_class": clean.kind.value,
                     "clean_ok": clean.kind is sc.expected, "value": ok / trials,
                     "width_estimate": clean.width_estimate, "width_rel_error": width_err})
    worst = min(r["value"] for r in rows)
    all_clean = all(r["clean_ok"] for r in rows)
    widths_ok = all(r["width_rel_error"] is None or r["width_rel_error"] <= 0.15 for r in rows)
    # the headline is the worst noisy accuracy, zeroed if a clean class or width check fails
    headline = worst if all_clean and widths_ok else 0.0
    return ExperimentReport("scan-recognition", "value", (0.9, 1.0), "flat objects, corners and gaps are distinguishable",
                            {"trials": trials, "master_seed": master_seed, "motion_mode": mode.value},
                            rows, value=headline,
                            extra={"all_clean_correct": all_clean, "widths_within_15pct": widths_ok})


EXPERIMENTS = ("contact", "propagation", "channel-match", "deadzone", "interference",
               "bidirectional", "sensor-bands", "scan-recognition")
