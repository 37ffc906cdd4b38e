"""Trace rows and their CSV form.

Times are kept in integer ticks (0.05 ms) and printed with two decimals by
integer arithmetic, so identical runs always serialise to identical bytes.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

PULSE_COLUMNS = ("time_ms", "robot_id", "channel", "edge")
EVENT_COLUMNS = ("time_ms", "robot_id", "event", "peer_id", "channel", "detail")


def fmt_ticks(ticks: int) -> str:
    """Ticks of 0.05 ms as a fixed two-decimal millisecond string."""
    hundredths = int(ticks) * 5
    sign = "-" if hundredths < 0 else ""
    hundredths = abs(hundredths)
    return f"{sign}{hundredths // 100}.{hundredths % 100:02d}"


def _cell(v) -> str:
    return "" if v is None else str(v)


@dataclass
class Trace:
    level: str = "full"  # "full", "events" or "none"
    pulses: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def __post_init__(self):
        if self.level not in ("full", "events", "none"):
            raise ValueError("trace level must be 'full', 'events' or 'none'")

    @property
    def wants_pulses(self) -> bool:
        return self.level == "full"

    @property
    def wants_events(self) -> bool:
        return self.level != "none"

    def pulse(self, tick: int, robot_id: int, channel: int, edge: str):
        self.pulses.append((tick, robot_id, channel, edge))

    def event(self, tick, robot_id, event, peer, channel, detail=""):
        self.events.append((tick, robot_id, event, peer, channel, detail))

    def sorted_events(self) -> list:
        # stable sort keeps insertion order among equal (time, robot) keys
        return sorted(self.events, key=lambda r: (r[0], r[1]))

    def pulses_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(PULSE_COLUMNS)
        for t, rid, ch, edge in self.pulses:
            w.writerow((fmt_ticks(t), rid, ch, edge))
        return buf.getvalue()

    def events_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(EVENT_COLUMNS)
        for t, rid, ev, peer, ch, detail in self.sorted_events():
            w.writerow((fmt_ticks(t), rid, ev, _cell(peer), _cell(ch), detail))
        return buf.getvalue()
