"""Discrete-event loop tying controllers, the IR medium and the trace together.

Events are ordered by ``(tick, robot_id, insertion sequence)``. A robot hears a
transmission when the first pulse starts while it is listening on a channel
that receives the sender above threshold; it then dwells on that channel until
the burst goes quiet and decodes everything that reached it, so overlapping
transmissions merge into garbage.
"""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from typing import Callable, Optional

from ..channel import BoardProfile, ChannelParams, link_gain
from ..codec import CodecParams, EventKind, decode_stream, frame_durations
from ..geometry import Pose, RobotBody, WorldModel, line_of_sight
from ..protocol import (TURNAROUND_TICKS, Emission, RobotController, ms_to_ticks, step_cycle,
                        ticks_to_ms)
from .trace import Trace


class EventType(enum.IntEnum):
    CYCLE_END = 0
    SEND = 1
    DWELL_END = 2
    REPLY = 3


@dataclass
class Train:
    robot_id: int
    channel: int
    start: int
    pulses: list  # (start_tick, duration_ticks)
    end: int
    kind: str


@dataclass
class Node:
    body: RobotBody
    board: BoardProfile
    ctrl: RobotController
    base_heading: float
    wobble: float = 0.0
    epoch: int = 0
    plan: object = None
    listen_from: int = 0
    listen_until: int = -1
    tx_until: int = -1
    dwell: Optional[tuple] = None  # (channel, start tick, trigger robot)
    deferred: bool = False
    reply: Optional[tuple] = None  # (emission, channel)

    @property
    def rid(self) -> int:
        return self.body.robot_id


class Engine:
    """Single-threaded event loop over one world.

    ``decide`` is called as ``decide(engine, node)`` in each robot's Decide
    phase, before the channel rotation advances; use it to plug in behaviour
    such as reacting to a perception scan.
    """

    def __init__(self, world: WorldModel, nodes: list, params: ChannelParams = ChannelParams(),
                 codec: CodecParams = CodecParams(), trace: Optional[Trace] = None,
                 decide: Optional[Callable[["Engine", Node], None]] = None):
        self.world = world
        self.nodes = sorted(nodes, key=lambda n: n.rid)
        self.by_id = {n.rid: n for n in self.nodes}
        self.params = params
        self.codec = codec
        self.trace = trace if trace is not None else Trace("none")
        self.decide = decide
        self.now = 0
        self._queue: list = []
        self._seq = 0
        self.trains: list = []
        self._los: dict = {}
        self._burst_gap = ms_to_ticks(codec.burst_gap)
        self._gap = ms_to_ticks(codec.gap)
        self.processed = 0

    # -- scheduling ---------------------------------------------------------------------

    def schedule(self, tick: int, node: Node, etype: EventType, epoch: Optional[int] = None):
        if tick < self.now:
            raise RuntimeError("event scheduled in the past")
        self._seq += 1
        heapq.heappush(self._queue, (tick, node.rid, self._seq, etype, node.epoch if epoch is None else epoch))

    def start(self, t0: int = 0):
        for n in self.nodes:
            self._start_cycle(n, t0)

    def run(self, until: int, stop: Optional[Callable[["Engine"], bool]] = None) -> int:
        """Process events up to tick ``until`` or until ``stop`` returns True."""
        while self._queue and self._queue[0][0] <= until:
            tick, rid, _, etype, epoch = heapq.heappop(self._queue)
            node = self.by_id[rid]
            if epoch != node.epoch:
                continue
            self.now = tick
            self.processed += 1
            if etype is EventType.SEND:
                self._on_send(node)
            elif etype is EventType.CYCLE_END:
                self._on_cycle_end(node)
            elif etype is EventType.DWELL_END:
                self._on_dwell_end(node)
            elif etype is EventType.REPLY:
                self._on_reply(node)
            if stop is not None and stop(self):
                return self.now
        self.now = max(self.now, until) if not self._queue or self._queue[0][0] > until else self.now
        return self.now

    # -- cycle handling -------------------------------------------------------------------

    def _start_cycle(self, node: Node, t: int):
        ctrl = node.ctrl
        ctrl.check_timers(t)
        plan = step_cycle(ctrl, t)
        node.plan = plan
        node.deferred = False
        if ctrl.proximity:
            self._emit(node, Emission("proximity"), 0, t)
        node.listen_from = plan.listen_start
        node.listen_until = plan.send_time if plan.send_time is not None else plan.end
        if plan.send_time is not None:
            self.schedule(plan.send_time, node, EventType.SEND)
        else:
            self.schedule(plan.end, node, EventType.CYCLE_END)

    def _on_send(self, node: Node):
        if node.dwell is not None:
            node.deferred = True
            return
        self._send_now(node)

    def _send_now(self, node: Node):
        ctrl = node.ctrl
        node.listen_until = self.now
        em = ctrl.pending_emission()
        if em is None:
            self.schedule(self.now, node, EventType.CYCLE_END)
            return
        end = self._emit(node, em, ctrl.tx_channel, self.now)
        self.schedule(end, node, EventType.CYCLE_END)

    def _on_cycle_end(self, node: Node):
        if node.dwell is not None:
            # a burst arrived after the send slot; finish hearing it first
            node.deferred = False
            node.listen_until = self.now
            return
        ctrl = node.ctrl
        if self.decide is not None:
            self.decide(self, node)
        if node.wobble > 0.0:
            h = node.base_heading + float(ctrl.rng.uniform(-node.wobble, node.wobble))
            node.body.pose = Pose(node.body.pose.x, node.body.pose.y, h)
            if self.trace.wants_pulses:
                self.trace.event(self.now, node.rid, "Motion", None, None, f"heading={node.body.pose.heading:.3f}")
        ctrl.end_cycle()
        node.epoch += 1
        self._start_cycle(node, self.now)

    # -- medium ---------------------------------------------------------------------------

    def _train_pulses(self, em: Emission, t: int) -> list:
        c = self.codec
        if em.kind == "frame":
            durs = frame_durations(em.frame, c)
        elif em.kind == "proximity":
            durs = [c.proximity_pulse]
        else:
            durs = [c.t_pulse] * em.burst().pulse_count
        out = []
        for d in durs:
            dt = ms_to_ticks(d)
            out.append((t, dt))
            t += dt + self._gap
        return out

    def _emit(self, node: Node, em: Emission, channel: int, t: int) -> int:
        pulses = self._train_pulses(em, t)
        end = pulses[-1][0] + pulses[-1][1]
        train = Train(node.rid, channel, t, pulses, end, em.kind)
        self.trains.append(train)
        if len(self.trains) > 64:
            horizon = t - 4000
            self.trains = [tr for tr in self.trains if tr.end >= horizon]
        node.tx_until = end
        if self.trace.wants_pulses:
            for s, d in pulses:
                self.trace.pulse(s, node.rid, channel, "on")
                self.trace.pulse(s + d, node.rid, channel, "off")
        if em.kind != "proximity":
            node.ctrl.on_sent(em, channel, t)
        self._notify_listeners(train)
        return end + self._gap

    def _pair(self, a: Node, b: Node) -> tuple:
        """Static geometry of an ordered pair: distance, world bearing a->b, usable flag."""
        ax, ay = a.body.pose.xy
        bx, by = b.body.pose.xy
        key = (a.rid, b.rid, ax, ay, bx, by)
        p = self._los.get(key)
        if p is None:
            d = math.hypot(bx - ax, by - ay)
            usable = (self.params.volts_at(d) >= self.params.detect_threshold
                      and line_of_sight(self.world, (ax, ay), (bx, by), (a.rid, b.rid)))
            p = (d, math.degrees(math.atan2(by - ay, bx - ax)), usable)
            self._los[key] = p
        return p

    def volts(self, tx: Node, tx_channel: int, rx: Node, rx_channel: int) -> float:
        """Received level; pairs that can never clear the threshold read 0."""
        d, ang, usable = self._pair(tx, rx)
        if not usable:
            return 0.0
        return link_gain(self.params, d, tx.board, tx_channel, (ang - tx.body.pose.heading) % 360.0,
                         rx.board, rx_channel, (ang + 180.0 - rx.body.pose.heading) % 360.0)

    def _listening(self, node: Node, t: int) -> bool:
        return (node.dwell is None and node.reply is None and node.tx_until <= t
                and node.listen_from <= t < node.listen_until)

    def _notify_listeners(self, train: Train):
        src = self.by_id[train.robot_id]
        thr = self.params.detect_threshold
        for rx in self.nodes:
            if rx is src or not self._listening(rx, train.start):
                continue
            best_c, best_v = None, thr
            for c in rx.ctrl.listen_channels(train.start, rx.plan.listen_start):
                v = self.volts(src, train.channel, rx, c)
                if v >= best_v:
                    if best_c is None or v > best_v:
                        best_c, best_v = c, v
            if best_c is None:
                continue
            rx.dwell = (best_c, train.start, src.rid)
            self.schedule(train.end + self._burst_gap + 1, rx, EventType.DWELL_END)

    def _heard_pulses(self, rx: Node, channel: int, t0: int, t1: int) -> tuple:
        """Merged supra-threshold pulses on one receiver channel over [t0, t1]."""
        thr = self.params.detect_threshold
        intervals = []
        last_end = t0
        for tr in self.trains:
            if tr.robot_id == rx.rid or tr.end < t0 or tr.start > t1:
                continue
            if self.volts(self.by_id[tr.robot_id], tr.channel, rx, channel) < thr:
                continue
            for s, d in tr.pulses:
                if s + d >= t0 and s <= t1:
                    intervals.append((s, s + d))
            last_end = max(last_end, tr.end)
        intervals.sort()
        merged = []
        for s, e in intervals:
            if merged and s <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([s, e])
        return merged, last_end

    def _on_dwell_end(self, node: Node):
        channel, t0, trigger = node.dwell
        merged, last_end = self._heard_pulses(node, channel, t0, self.now)
        if last_end + self._burst_gap >= self.now:
            # another burst is still arriving on this channel
            self.schedule(last_end + self._burst_gap + 1, node, EventType.DWELL_END)
            return
        node.dwell = None
        pulses = [(ticks_to_ms(s), ticks_to_ms(e - s)) for s, e in merged]
        events = decode_stream(pulses, self.codec)
        ctrl = node.ctrl
        ctrl.check_timers(self.now)
        reply = None
        for ev in events:
            if ev.kind is EventKind.GARBAGE:
                ctrl._log(self.now, "Garbage", trigger, channel, "")
                continue
            reply = ctrl.on_decoded(ev.kind, ev.frame, channel, self.now, trigger)
            if reply is not None:
                break
        if reply is not None:
            node.epoch += 1
            node.listen_until = self.now
            node.reply = (reply, channel)
            self.schedule(self.now + TURNAROUND_TICKS, node, EventType.REPLY)
            return
        plan = node.plan
        if node.deferred or (plan.send_time is not None and self.now >= plan.send_time):
            node.deferred = False
            self._send_now(node)
        elif plan.send_time is None and self.now >= plan.end:
            self.schedule(self.now, node, EventType.CYCLE_END)
        else:
            node.listen_from = self.now

    def _on_reply(self, node: Node):
        em, channel = node.reply
        node.reply = None
        end = self._emit(node, em, channel, self.now)
        self.schedule(end, node, EventType.CYCLE_END)

    # -- results --------------------------------------------------------------------------

    def flush_logs(self):
        """Copy controller logs into the trace (sorted by time, then robot)."""
        if not self.trace.wants_events:
            return
        for n in self.nodes:
            for t, ev, peer, ch, detail in n.ctrl.log:
                self.trace.event(t, n.rid, ev, peer, ch, detail)
            n.ctrl.log = []
