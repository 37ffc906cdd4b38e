"""Pulse-duration line code.

A data frame is ``T b1 T b2 ... T b9 T``: ten 2 ms delimiter pulses around
nine bit pulses (0.5 ms for a zero, 1.5 ms for a one). Every pulse is
followed by a fixed gap, so airtime counts one gap per pulse. Control
messages are bare runs of T pulses: two for a request, three for ready/ack.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence


class PulseKind(enum.Enum):
    PROXIMITY = "Proximity"
    T = "T"
    BIT0 = "Bit0"
    BIT1 = "Bit1"
    UNKNOWN = "Unknown"


class EventKind(enum.Enum):
    FRAME = "FrameReceived"
    PARITY_ERROR = "ParityError"
    REQUEST = "RequestReceived"
    READY_OR_ACK = "ReadyOrAckReceived"
    PROXIMITY_ECHO = "ProximityEcho"
    GARBAGE = "Garbage"


class BurstKind(enum.Enum):
    REQUEST = "Request"
    READY_OR_ACK = "ReadyOrAck"


BURST_PULSES = {BurstKind.REQUEST: 2, BurstKind.READY_OR_ACK: 3}


@dataclass(frozen=True)
class CodecParams:
    t_pulse: float = 2.0
    proximity_pulse: float = 1.0
    bit0_pulse: float = 0.5
    bit1_pulse: float = 1.5
    gap: float = 0.25
    tolerance: float = 0.2
    # silence longer than this separates two bursts
    burst_gap: float = 1.0

    def __post_init__(self):
        noms = sorted(self.nominals().values())
        for a, b in zip(noms, noms[1:]):
            if b - a <= 2 * self.tolerance:
                raise ValueError("nominal pulse durations must differ by more than 2*tolerance")
        if self.burst_gap <= self.gap:
            raise ValueError("burst_gap must exceed the intra-burst gap")

    def nominals(self) -> dict:
        return {
            PulseKind.PROXIMITY: self.proximity_pulse,
            PulseKind.T: self.t_pulse,
            PulseKind.BIT0: self.bit0_pulse,
            PulseKind.BIT1: self.bit1_pulse,
        }


@dataclass(frozen=True)
class Frame:
    data: int
    parity: int

    def __post_init__(self):
        if not 0 <= self.data <= 255:
            raise ValueError("frame data must be one byte")
        if self.parity not in (0, 1):
            raise ValueError("parity must be 0 or 1")

    @classmethod
    def make(cls, data: int) -> "Frame":
        """Frame with the correct even-parity bit."""
        return cls(data, parity_of(data))

    @property
    def parity_ok(self) -> bool:
        return self.parity == parity_of(self.data)

    def bits(self) -> list[int]:
        """Nine line bits, MSB first, parity last."""
        return [(self.data >> (7 - i)) & 1 for i in range(8)] + [self.parity]


def parity_of(data: int) -> int:
    return bin(data).count("1") & 1


@dataclass(frozen=True)
class PulseTrain:
    pulses: tuple
    channel: int = 0
    # silence the sender keeps after the last pulse before the line is free
    guard: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple((float(s), float(d)) for s, d in self.pulses))
        prev_end = None
        for s, d in self.pulses:
            if d <= 0:
                raise ValueError("pulse durations must be positive")
            if prev_end is not None and s < prev_end:
                raise ValueError("pulses must be ordered and non-overlapping")
            prev_end = s + d

    @property
    def start(self) -> float:
        return self.pulses[0][0] if self.pulses else 0.0

    @property
    def end(self) -> float:
        if not self.pulses:
            return 0.0
        s, d = self.pulses[-1]
        return s + d

    @property
    def airtime(self) -> float:
        """Line occupancy: first rising edge to the end of the trailing guard."""
        return self.end - self.start + self.guard if self.pulses else 0.0

    def shifted(self, dt: float) -> "PulseTrain":
        return PulseTrain(tuple((s + dt, d) for s, d in self.pulses), self.channel, self.guard)

    def __len__(self):
        return len(self.pulses)


@dataclass(frozen=True)
class ControlBurst:
    kind: BurstKind

    @property
    def pulse_count(self) -> int:
        return BURST_PULSES[self.kind]


@dataclass(frozen=True)
class DecodeEvent:
    kind: EventKind
    time: float
    frame: Optional[Frame] = None


def _layout(durations: Sequence[float], params: CodecParams, start: float, channel: int) -> PulseTrain:
    pulses = []
    t = start
    for d in durations:
        pulses.append((t, d))
        t += d + params.gap
    return PulseTrain(tuple(pulses), channel, params.gap)


def frame_durations(frame: Frame, params: CodecParams) -> list[float]:
    out = [params.t_pulse]
    for b in frame.bits():
        out.append(params.bit1_pulse if b else params.bit0_pulse)
        out.append(params.t_pulse)
    return out


def encode_frame(frame: Frame, params: CodecParams = CodecParams(), start: float = 0.0,
                 channel: int = 0, check_parity: bool = True) -> PulseTrain:
    """Pulse train for one frame.

    ``check_parity=False`` allows deliberately broken frames (used to probe
    the worst-case airtime and the decoder's parity check).
    """
    if check_parity and not frame.parity_ok:
        raise ValueError("frame parity bit does not match its data")
    return _layout(frame_durations(frame, params), params, start, channel)


def encode_burst(burst: ControlBurst, params: CodecParams = CodecParams(), start: float = 0.0,
                 channel: int = 0) -> PulseTrain:
    return _layout([params.t_pulse] * burst.pulse_count, params, start, channel)


def frame_airtime(frame: Frame, params: CodecParams = CodecParams()) -> float:
    durs = frame_durations(frame, params)
    return sum(durs) + len(durs) * params.gap


def burst_airtime(kind: BurstKind, params: CodecParams = CodecParams()) -> float:
    n = BURST_PULSES[kind]
    return n * (params.t_pulse + params.gap)


def classify_pulse(duration: float, params: CodecParams = CodecParams()) -> PulseKind:
    """Nearest nominal duration within tolerance, else UNKNOWN."""
    best, best_err = PulseKind.UNKNOWN, None
    for kind, nominal in params.nominals().items():
        err = abs(duration - nominal)
        if err <= params.tolerance + 1e-9 and (best_err is None or err < best_err):
            best, best_err = kind, err
    return best


_BITS = (PulseKind.BIT0, PulseKind.BIT1)


def _split_bursts(pulses, params):
    bursts, cur, prev_end = [], [], None
    for s, d in pulses:
        if prev_end is not None and s - prev_end > params.burst_gap:
            bursts.append(cur)
            cur = []
        cur.append((s, d))
        prev_end = s + d
    if cur:
        bursts.append(cur)
    return bursts


def _decode_burst(burst, params, out):
    syms = [classify_pulse(d, params) for _, d in burst]
    ends = [s + d for s, d in burst]
    n = len(syms)

    if n == 1 and syms[0] is PulseKind.PROXIMITY:
        out.append(DecodeEvent(EventKind.PROXIMITY_ECHO, ends[0]))
        return
    if all(s is PulseKind.T for s in syms) and n in (2, 3):
        kind = EventKind.REQUEST if n == 2 else EventKind.READY_OR_ACK
        out.append(DecodeEvent(kind, ends[-1]))
        return

    def next_t(k):
        while k < n and syms[k] is not PulseKind.T:
            k += 1
        return k

    i = next_t(0)
    if i > 0:
        out.append(DecodeEvent(EventKind.GARBAGE, ends[i - 1]))
    while i < n:
        # skip leading extra delimiters, keeping the last one as a frame start
        j = i
        while j + 1 < n and syms[j + 1] is PulseKind.T:
            j += 1
        if j > i:
            out.append(DecodeEvent(EventKind.GARBAGE, ends[j - 1]))
            i = j
        # try to read a full frame starting at the delimiter i
        bits = []
        k = i + 1
        fail = None
        for _ in range(9):
            if k >= n or syms[k] not in _BITS:
                fail = k
                break
            if k + 1 >= n or syms[k + 1] is not PulseKind.T:
                fail = k + 1
                break
            bits.append(1 if syms[k] is PulseKind.BIT1 else 0)
            k += 2
        if fail is None:
            data = 0
            for b in bits[:8]:
                data = (data << 1) | b
            frame = Frame(data, bits[8])
            kind = EventKind.FRAME if frame.parity_ok else EventKind.PARITY_ERROR
            out.append(DecodeEvent(kind, ends[k - 1], frame))
            i = next_t(k)
            if i > k:
                out.append(DecodeEvent(EventKind.GARBAGE, ends[i - 1]))
            continue
        out.append(DecodeEvent(EventKind.GARBAGE, ends[min(fail, n - 1)]))
        i = next_t(max(fail, i + 1))


def decode_stream(pulses, params: CodecParams = CodecParams()) -> list[DecodeEvent]:
    """Parse a time-ordered pulse sequence into protocol events.

    Accepts a ``PulseTrain`` or an iterable of ``(start, duration)`` pairs.
    """
    seq = pulses.pulses if isinstance(pulses, PulseTrain) else tuple(pulses)
    out: list[DecodeEvent] = []
    for burst in _split_bursts(seq, params):
        _decode_burst(burst, params, out)
    return out


class StreamDecoder:
    """Incremental decoder for one (robot, channel) pair.

    Pulses are fed as they complete; a burst is parsed once the line has been
    silent for longer than ``burst_gap``.
    """

    def __init__(self, params: CodecParams = CodecParams()):
        self.params = params
        self._pending: list = []

    def feed(self, start: float, duration: float) -> list[DecodeEvent]:
        out = self.flush_before(start)
        self._pending.append((start, duration))
        return out

    def flush_before(self, now: float) -> list[DecodeEvent]:
        """Parse the pending burst if the line has gone quiet before ``now``."""
        if self._pending:
            s, d = self._pending[-1]
            if now - (s + d) > self.params.burst_gap:
                return self.flush()
        return []

    def flush(self) -> list[DecodeEvent]:
        out: list[DecodeEvent] = []
        if self._pending:
            _decode_burst(self._pending, self.params, out)
            self._pending = []
        return out

    @property
    def busy(self) -> bool:
        return bool(self._pending)
