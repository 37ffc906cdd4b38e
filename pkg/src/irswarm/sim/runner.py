"""Build an engine from a scenario and run it."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..channel import ChannelParams, board
from ..codec import CodecParams, Frame
from ..geometry import Pose, RobotBody, SegmentObstacle, WorldModel
from ..protocol import RobotController, ms_to_ticks, ticks_to_ms
from .engine import Engine, Node
from .report import ExperimentReport
from .scenario import ScenarioConfig
from .trace import Trace


@dataclass
class RunResult:
    trace: Trace
    report: ExperimentReport
    engine: Engine


def robot_rng(seed: int, robot_id: int) -> np.random.Generator:
    """Per-robot stream, independent of how many robots share the world."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, int(robot_id)])


def build_engine(config: ScenarioConfig, trace: Trace) -> Engine:
    cal = config.calibration
    params = ChannelParams(v_ref=cal.v_ref, decay_exponent=cal.decay_exponent,
                           detect_threshold=cal.detect_threshold)
    codec = CodecParams(tolerance=cal.tolerance_ms)
    duration = ms_to_ticks(config.duration_ms)
    nodes = []
    for rc in config.robots:
        b = board(rc.board)
        ctrl = RobotController(rc.id, robot_rng(config.seed, rc.id), channel_count=b.layout.channel_count,
                               parallel_receive=b.parallel_receive, resend_range_ms=tuple(rc.resend_ms),
                               listen_mode=rc.listen_mode, relay=rc.relay, relay_repeats=rc.relay_repeats,
                               proximity=rc.proximity, codec=codec)
        if rc.send is not None:
            frame = Frame.make(rc.send.data)
            if rc.send.mode == "repeat":
                ctrl.send_without_confirmation(frame, rc.send.repeats)
            else:
                deadline = ms_to_ticks(rc.send.deadline_ms) if rc.send.deadline_ms else duration + 1
                ctrl.send_with_confirmation(frame, deadline)
        body = RobotBody(rc.id, Pose(rc.x, rc.y, rc.heading))
        nodes.append(Node(body, b, ctrl, body.pose.heading, rc.wobble_deg))
    obstacles = [SegmentObstacle(tuple(o.a), tuple(o.b), o.reflectivity) for o in config.obstacles]
    world = WorldModel(obstacles, [n.body for n in nodes], arena_bounds=tuple(config.arena))
    return Engine(world, nodes, params, codec, trace)


def _stop_rule(config: ScenarioConfig):
    if config.stop_when == "contact":
        return lambda e: any(n.ctrl.contact.first_contact_time is not None for n in e.nodes)
    if config.stop_when == "all_received":
        return lambda e: all(n.ctrl.holds_message for n in e.nodes)
    return None


def run(config: ScenarioConfig) -> RunResult:
    """Advance the event queue to the configured duration (or the stop rule)."""
    trace = Trace(config.trace)
    engine = build_engine(config, trace)
    engine.start()
    end = engine.run(ms_to_ticks(config.duration_ms), _stop_rule(config))
    engine.flush_logs()
    rows = []
    for n, rc in zip(engine.nodes, config.robots):
        c = n.ctrl
        # originators hold the message from the start
        held = 0.0 if rc.send is not None else (ticks_to_ms(c.received[0][0]) if c.received else None)
        rows.append({
            "seed": config.seed,
            "robot_id": n.rid,
            "value": held,
            "first_contact_ms": c.contact.first_contact_time,
            "state": c.protocol_state.value,
        })
    spread = None if not rows or any(r["value"] is None for r in rows) else max(r["value"] for r in rows)
    report = ExperimentReport("run", "value", None, "time until every robot holds a message (ms)",
                              {"seed": config.seed, "end_ms": ticks_to_ms(end)}, rows, value=spread)
    return RunResult(trace, report, engine)
