"""Per-robot autonomy cycle and the two link protocols.

Time inside the controller is kept in integer ticks of 0.05 ms so that every
pulse duration of the line code is an exact multiple of the clock.
"""

from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .codec import BurstKind, CodecParams, ControlBurst, EventKind, Frame, burst_airtime, frame_airtime

TICKS_PER_MS = 20


def ms_to_ticks(ms: float) -> int:
    return int(round(ms * TICKS_PER_MS))


def ticks_to_ms(ticks: int) -> float:
    return ticks / TICKS_PER_MS


SCAN_TICKS = ms_to_ticks(1.2)  # six 8-bit conversions, one per channel
PROXIMITY_TICKS = ms_to_ticks(1.0)
SWEEP_SLOT_TICKS = ms_to_ticks(2.0)  # one T pulse worth of listening per channel
TURNAROUND_TICKS = ms_to_ticks(1.5)
STAGE_TIMEOUT_MS = 150.0


class ProtocolState(enum.Enum):
    IDLE = "Idle"
    REQ_SENT = "ReqSent"
    READY_SENT = "ReadySent"
    DATA_SENT = "DataSent"
    DONE = "Done"
    FAILED = "Failed"


TERMINAL = (ProtocolState.DONE, ProtocolState.FAILED)


class Phase(enum.Enum):
    PROXIMITY_SENSE = "ProximitySense"
    RECEIVE = "Receive"
    SEND = "Send"
    DECIDE = "Decide"
    ACT = "Act"


@dataclass(frozen=True)
class CyclePhase:
    phase: Phase
    start: int
    budget: int

    @property
    def budget_ms(self) -> float:
        return ticks_to_ms(self.budget)


class Outcome(enum.Enum):
    DELIVERED = "Delivered"
    FAILED = "Failed"


@dataclass
class ContactReport:
    first_contact_time: Optional[float] = None  # ms
    attempts: int = 0
    bidirectional: bool = False


@dataclass(frozen=True)
class Emission:
    """What a controller wants on the air: a control burst or a data frame."""

    kind: str  # "request", "ready", "ack", "frame", "proximity"
    frame: Optional[Frame] = None

    def airtime_ticks(self, params: CodecParams) -> int:
        if self.kind == "frame":
            return ms_to_ticks(frame_airtime(self.frame, params))
        if self.kind == "request":
            return ms_to_ticks(burst_airtime(BurstKind.REQUEST, params))
        if self.kind == "proximity":
            return ms_to_ticks(params.proximity_pulse + params.gap)
        return ms_to_ticks(burst_airtime(BurstKind.READY_OR_ACK, params))

    def burst(self) -> Optional[ControlBurst]:
        if self.kind == "request":
            return ControlBurst(BurstKind.REQUEST)
        if self.kind in ("ready", "ack"):
            return ControlBurst(BurstKind.READY_OR_ACK)
        return None


REQUEST = Emission("request")
READY = Emission("ready")
ACK = Emission("ack")


@dataclass
class _Repeat:
    frame: Frame
    remaining: int


@dataclass
class CyclePlan:
    start: int
    length: int  # drawn resend interval, ticks
    phases: list
    listen_start: int
    send_time: Optional[int]
    emission: Optional[Emission]
    end: int

    @property
    def receive_cost(self) -> int:
        return next(p.budget for p in self.phases if p.phase is Phase.RECEIVE)


class RobotController:
    """Protocol state machine, outbox and channel rotation of one robot."""

    def __init__(self, robot_id: int, rng: np.random.Generator, channel_count: int = 6,
                 parallel_receive: bool = False, resend_range_ms: tuple = (10.0, 100.0),
                 rotate: bool = True, tx_channel: Optional[int] = None, rx_channel: Optional[int] = None,
                 stage_timeout_ms: float = STAGE_TIMEOUT_MS, proximity: bool = False,
                 listen_mode: str = "window", relay: Optional[str] = None, relay_repeats: int = 100,
                 relay_deadline_ms: float = 1e9, relay_fanout: int = 2,
                 codec: CodecParams = CodecParams()):
        lo, hi = resend_range_ms
        if not (10.0 <= lo <= hi <= 150.0):
            raise ValueError("resend interval must lie within [10, 150] ms")
        if listen_mode not in ("window", "sweep"):
            raise ValueError("listen_mode must be 'window' or 'sweep'")
        self.robot_id = robot_id
        self.rng = rng
        self.channel_count = channel_count
        self.parallel_receive = parallel_receive
        self.resend_range = (ms_to_ticks(lo), ms_to_ticks(hi))
        self.rotate = rotate
        self.stage_timeout = ms_to_ticks(stage_timeout_ms)
        self.proximity = proximity
        self.listen_mode = listen_mode
        self.relay = relay
        self.relay_repeats = relay_repeats
        self.relay_deadline = ms_to_ticks(relay_deadline_ms)
        self.relay_fanout = relay_fanout
        self.deliveries = 0
        self.codec = codec

        # independent random phases realise the 1/(n_tx * n_rx) rendezvous
        self.tx_channel = int(rng.integers(channel_count)) if tx_channel is None else tx_channel
        self.rx_channel = int(rng.integers(channel_count)) if rx_channel is None else rx_channel
        self.protocol_state = ProtocolState.IDLE
        self.outbox: deque = deque()
        self.retry_count = 0
        self.timers: dict = {}
        self.resend_interval = 0
        self.cycle_length = 0
        self.locked_channel: Optional[int] = None
        self.frame: Optional[Frame] = None
        self.prev_state = ProtocolState.IDLE
        self.outcome: Optional[Outcome] = None
        self.received: list = []  # (tick, frame)
        self.contact = ContactReport()
        self.completions: list = []  # ticks of finished n-repeat sends
        self.log: list = []  # (tick, event, peer, channel, detail)

    # -- public protocol entry points -------------------------------------------------

    def send_without_confirmation(self, frame: Frame, repeats: int, now: int = 0):
        if repeats < 1:
            raise ValueError("repeats must be at least 1")
        self.outbox.append(_Repeat(frame, repeats))
        self._log(now, "SendQueued", None, None, f"data={frame.data} n={repeats}")

    def send_with_confirmation(self, frame: Frame, deadline: int, now: int = 0):
        if deadline <= now:
            raise ValueError("deadline must lie in the future")
        self.frame = frame
        self.timers["deadline"] = deadline
        self.timers["relay_deadline"] = deadline
        self.timers["stage"] = now + self.stage_timeout
        self._enter(now, ProtocolState.REQ_SENT)

    @property
    def holds_message(self) -> bool:
        return bool(self.received) or self.frame is not None or bool(self.outbox)

    # -- cycle -----------------------------------------------------------------------

    def draw_resend_interval(self) -> int:
        lo, hi = self.resend_range
        return int(self.rng.integers(lo, hi + 1))

    def pending_emission(self) -> Optional[Emission]:
        """Outbox-gated: only robots with something to say use the Send phase."""
        if self.protocol_state is ProtocolState.REQ_SENT:
            return REQUEST
        if self.outbox:
            return Emission("frame", self.outbox[0].frame)
        return None

    def listen_channels(self, t: int, listen_start: int) -> tuple:
        """Channels the receiver front end watches at tick ``t``."""
        if self.parallel_receive:
            return tuple(range(self.channel_count))
        if self.listen_mode == "sweep":
            slot = (t - listen_start) // SWEEP_SLOT_TICKS
            if slot >= self.channel_count:
                return ()
            return ((self.current_rx() + slot) % self.channel_count,)
        return (self.current_rx(),)

    def current_rx(self) -> int:
        return self.locked_channel if self.locked_channel is not None else self.rx_channel

    def end_cycle(self):
        """Decide/Act bookkeeping: advance both rotations by one sector."""
        if self.rotate:
            self.tx_channel = (self.tx_channel + 1) % self.channel_count
            self.rx_channel = (self.rx_channel + 1) % self.channel_count

    # -- transmit / receive callbacks -----------------------------------------------------

    def on_sent(self, emission: Emission, channel: int, now: int):
        kind = emission.kind
        if kind == "request":
            self.contact.attempts += 1
            self.locked_channel = channel
            self._log(now, "RequestSent", None, channel, "")
        elif kind == "frame" and self.outbox and self.protocol_state is not ProtocolState.DATA_SENT:
            item = self.outbox[0]
            item.remaining -= 1
            self._log(now, "FrameSent", None, channel, f"data={item.frame.data} left={item.remaining}")
            if item.remaining == 0:
                self.outbox.popleft()
                self.completions.append(now)
                self._log(now, "SendComplete", None, channel, f"data={item.frame.data}")
        elif kind == "frame":
            self._log(now, "DataSent", None, channel, f"data={emission.frame.data}")
        elif kind == "ready":
            self._log(now, "ReadySent", None, channel, "")
        elif kind == "ack":
            self._log(now, "AckSent", None, channel, "")

    def on_decoded(self, kind: EventKind, frame: Optional[Frame], channel: int, now: int,
                   peer: Optional[int] = None) -> Optional[Emission]:
        """React to one decoded event; returns an immediate reply, if any."""
        st = self.protocol_state
        self._log(now, kind.value, peer, channel, f"data={frame.data}" if frame is not None else "")
        if st in TERMINAL:
            return None

        if kind is EventKind.REQUEST and st in (ProtocolState.IDLE, ProtocolState.REQ_SENT):
            if self.relay is not None and self.holds_message:
                # a relay that already has the message would only send it backwards
                return None
            self.prev_state = st
            self._enter(now, ProtocolState.READY_SENT)
            self.locked_channel = channel
            self.timers["ready"] = now + self.stage_timeout
            return READY

        if kind is EventKind.READY_OR_ACK:
            if st is ProtocolState.REQ_SENT:
                return self._start_data(now, channel, peer)
            if st is ProtocolState.DATA_SENT:
                self.outcome = Outcome.DELIVERED
                self.locked_channel = None
                self.deliveries += 1
                self._enter(now, ProtocolState.DONE)
                if self.relay == "confirm" and self.deliveries < self.relay_fanout:
                    # a relay keeps forwarding until it has served enough neighbours
                    frame, deadline = self.frame, self.timers.get("relay_deadline")
                    self.reset()
                    self.send_with_confirmation(frame, deadline, now)
                return None
            if (st is ProtocolState.READY_SENT and self.prev_state is ProtocolState.REQ_SENT
                    and peer is not None and self.robot_id > peer):
                # both sides answered each other; the higher id keeps the sender role
                return self._start_data(now, channel, peer)
            return None

        if kind is EventKind.FRAME:
            if st is ProtocolState.READY_SENT:
                self.timers.pop("ready", None)
                self._accept(frame, now)
                back = self.prev_state
                self.locked_channel = None
                if self.relay == "confirm" and self.frame is None:
                    self.send_with_confirmation(frame, now + self.relay_deadline, now)
                elif back is ProtocolState.REQ_SENT:
                    self._enter(now, ProtocolState.REQ_SENT)
                    self.locked_channel = channel
                else:
                    self._enter(now, ProtocolState.IDLE)
                return ACK
            if self.relay != "confirm" and st is ProtocolState.IDLE:
                first = not self.holds_message
                self._accept(frame, now)
                if first and self.relay == "repeat":
                    self.send_without_confirmation(frame, self.relay_repeats, now)
            return None
        return None

    def _start_data(self, now, channel, peer):
        if self.contact.first_contact_time is None:
            self.contact.first_contact_time = ticks_to_ms(now)
            self.contact.bidirectional = True
            self._log(now, "Contact", peer, channel, "")
        self.locked_channel = channel
        self.timers["stage"] = now + self.stage_timeout
        self.timers.pop("ready", None)
        self._enter(now, ProtocolState.DATA_SENT)
        return Emission("frame", self.frame)

    def _accept(self, frame, now):
        self.received.append((now, frame))
        self._log(now, "Delivered", None, None, f"data={frame.data}")

    def check_timers(self, now: int):
        """Fire every timeout edge that expired at or before ``now``."""
        st = self.protocol_state
        if st in TERMINAL:
            return
        deadline = self.timers.get("deadline")
        if st is ProtocolState.READY_SENT and self.timers.get("ready", now + 1) <= now:
            self.timers.pop("ready")
            self.locked_channel = None
            self._log(now, "Timeout", None, None, "ready")
            self._enter(now, self.prev_state)
            st = self.protocol_state
        if st in (ProtocolState.REQ_SENT, ProtocolState.DATA_SENT) or "stage" in self.timers:
            stage = self.timers.get("stage")
            while stage is not None and stage <= now and (deadline is None or stage <= deadline):
                self.retry_count += 1
                self._log(stage, "Timeout", None, None, f"stage retry={self.retry_count}")
                stage += self.stage_timeout
                if self.protocol_state is ProtocolState.DATA_SENT:
                    self.locked_channel = None
                    self._enter(stage - self.stage_timeout, ProtocolState.REQ_SENT)
            if stage is not None:
                self.timers["stage"] = stage
        if deadline is not None and deadline <= now and self.protocol_state is not ProtocolState.READY_SENT:
            self.outcome = Outcome.FAILED
            self.locked_channel = None
            self.timers.clear()
            self._enter(deadline, ProtocolState.FAILED)

    # -- helpers ---------------------------------------------------------------------------

    def _enter(self, now, state):
        if state is not self.protocol_state:
            self._log(now, "State", None, None, f"{self.protocol_state.value}->{state.value}")
            self.protocol_state = state
        if state in TERMINAL:
            self.timers.pop("stage", None)
            self.timers.pop("deadline", None)

    def _log(self, now, event, peer, channel, detail):
        self.log.append((now, event, peer, channel, detail))

    def reset(self):
        """Explicit way out of Done/Failed."""
        self.protocol_state = ProtocolState.IDLE
        self.timers.clear()
        self.locked_channel = None
        self.frame = None
        self.outcome = None


def step_cycle(controller: RobotController, now: int, length: Optional[int] = None) -> CyclePlan:
    """Lay out one autonomy cycle starting at tick ``now``.

    Returns the phase schedule: optional proximity pulse, the receive scan and
    listening window, the Send slot placed at the end of the drawn interval,
    then zero-time Decide/Act. The cycle stretches when the phases do not fit.
    """
    if length is None:
        length = controller.draw_resend_interval()
    controller.resend_interval = length
    t = now
    phases = []
    prox = PROXIMITY_TICKS if controller.proximity else 0
    phases.append(CyclePhase(Phase.PROXIMITY_SENSE, t, prox))
    t += prox
    scan = 0 if controller.parallel_receive else SCAN_TICKS
    listen_start = t + scan
    emission = controller.pending_emission()
    air = emission.airtime_ticks(controller.codec) if emission is not None else 0
    min_listen = controller.channel_count * SWEEP_SLOT_TICKS if controller.listen_mode == "sweep" else 0
    send_time = max(listen_start + min_listen, now + length - air)
    phases.append(CyclePhase(Phase.RECEIVE, t, send_time - t))
    phases.append(CyclePhase(Phase.SEND, send_time, air))
    end = send_time + air
    phases.append(CyclePhase(Phase.DECIDE, end, 0))
    phases.append(CyclePhase(Phase.ACT, end, 0))
    controller.cycle_length = end - now
    return CyclePlan(now, length, phases, listen_start, send_time if emission else None, emission, end)


def minimal_cycle(controller: RobotController, now: int = 0) -> CyclePlan:
    """Cycle with no idle padding: just the fixed costs of each phase."""
    return step_cycle(controller, now, length=0)


def rendezvous_probability(n_tx: int = 6, n_rx: int = 6) -> float:
    """Per-attempt chance that a rotating tx channel meets a rotating rx channel."""
    if n_tx < 1 or n_rx < 1:
        raise ValueError("channel counts must be positive")
    return 1.0 / (n_tx * n_rx)
