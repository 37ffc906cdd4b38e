import math

import numpy as np
import pytest

from irswarm.codec import EventKind, Frame
from irswarm.protocol import (ACK, READY, REQUEST, Outcome, Phase, ProtocolState, RobotController, minimal_cycle,
                              ms_to_ticks, rendezvous_probability, step_cycle, ticks_to_ms)


def ctl(rid=0, **kw):
    return RobotController(rid, np.random.default_rng(rid), **kw)


def test_tick_conversions():
    assert ms_to_ticks(1.2) == 24
    assert ticks_to_ms(20) == 1.0


def test_resend_range_validated():
    with pytest.raises(ValueError):
        ctl(resend_range_ms=(5.0, 100.0))
    with pytest.raises(ValueError):
        ctl(listen_mode="nope")


def test_sequential_scan_costs_one_point_two_ms():
    plan = minimal_cycle(ctl())
    assert ticks_to_ms(plan.listen_start - plan.start) == pytest.approx(1.2)
    assert ticks_to_ms(plan.receive_cost) == pytest.approx(1.2)


def test_sweep_listen_costs_thirteen_point_two_ms():
    plan = minimal_cycle(ctl(listen_mode="sweep"))
    assert ticks_to_ms(plan.receive_cost) == pytest.approx(13.2)


def test_parallel_receive_costs_nothing():
    assert minimal_cycle(ctl(parallel_receive=True)).receive_cost == 0


def test_send_slot_at_end_of_interval():
    c = ctl()
    c.send_without_confirmation(Frame.make(3), 2)
    plan = step_cycle(c, 100, length=ms_to_ticks(50))
    air = plan.emission.airtime_ticks(c.codec)
    assert plan.send_time + air == 100 + ms_to_ticks(50)
    assert [p.phase for p in plan.phases] == [Phase.PROXIMITY_SENSE, Phase.RECEIVE, Phase.SEND,
                                              Phase.DECIDE, Phase.ACT]


def test_drawn_interval_in_range():
    c = ctl()
    draws = [c.draw_resend_interval() for _ in range(500)]
    assert min(draws) >= ms_to_ticks(10) and max(draws) <= ms_to_ticks(100)


def test_send_without_confirmation_counts_down():
    c = ctl()
    f = Frame.make(7)
    c.send_without_confirmation(f, 3)
    for t in range(3):
        em = c.pending_emission()
        assert em.kind == "frame" and em.frame == f
        c.on_sent(em, 0, t)
    assert c.pending_emission() is None
    assert c.completions == [2]
    with pytest.raises(ValueError):
        c.send_without_confirmation(f, 0)


def test_rotation_advances_both_channels():
    c = ctl(tx_channel=5, rx_channel=2)
    c.end_cycle()
    assert (c.tx_channel, c.rx_channel) == (0, 3)


def test_handshake_delivers():
    a, b = ctl(0), ctl(1)
    f = Frame.make(0x42)
    a.send_with_confirmation(f, ms_to_ticks(1000))
    assert a.pending_emission() == REQUEST
    a.on_sent(REQUEST, 2, 10)
    assert b.on_decoded(EventKind.REQUEST, None, 5, 11, peer=0) == READY
    assert b.protocol_state is ProtocolState.READY_SENT
    data = a.on_decoded(EventKind.READY_OR_ACK, None, 2, 20, peer=1)
    assert data.kind == "frame" and data.frame == f
    assert a.protocol_state is ProtocolState.DATA_SENT
    assert b.on_decoded(EventKind.FRAME, f, 5, 30, peer=0) == ACK
    assert b.received == [(30, f)] and b.protocol_state is ProtocolState.IDLE
    assert a.on_decoded(EventKind.READY_OR_ACK, None, 2, 40, peer=1) is None
    assert a.protocol_state is ProtocolState.DONE and a.outcome is Outcome.DELIVERED
    assert a.contact.first_contact_time == ticks_to_ms(20)
    states = [d for _, e, _, _, d in a.log if e == "State"]
    assert states == ["Idle->ReqSent", "ReqSent->DataSent", "DataSent->Done"]


def test_deadline_failure_and_retry_count():
    c = ctl()
    c.send_with_confirmation(Frame.make(1), ms_to_ticks(500))
    c.check_timers(ms_to_ticks(499))
    assert c.protocol_state is ProtocolState.REQ_SENT
    c.check_timers(ms_to_ticks(500))
    assert c.protocol_state is ProtocolState.FAILED and c.outcome is Outcome.FAILED
    assert c.retry_count == math.floor(500 / 150)
    # terminal until reset
    assert c.on_decoded(EventKind.REQUEST, None, 0, ms_to_ticks(600)) is None
    c.reset()
    assert c.protocol_state is ProtocolState.IDLE


def test_deadline_must_be_future():
    with pytest.raises(ValueError):
        ctl().send_with_confirmation(Frame.make(1), 0, now=5)


def test_ready_timeout_returns_to_previous_state():
    c = ctl()
    c.on_decoded(EventKind.REQUEST, None, 1, 0, peer=9)
    assert c.locked_channel == 1
    c.check_timers(ms_to_ticks(150))
    assert c.protocol_state is ProtocolState.IDLE and c.locked_channel is None


def test_cross_ready_tie_break_by_id():
    hi, lo = ctl(5), ctl(2)
    for c in (hi, lo):
        c.send_with_confirmation(Frame.make(1), ms_to_ticks(1000))
    hi.on_decoded(EventKind.REQUEST, None, 0, 1, peer=2)
    lo.on_decoded(EventKind.REQUEST, None, 0, 1, peer=5)
    assert hi.on_decoded(EventKind.READY_OR_ACK, None, 0, 2, peer=2).kind == "frame"
    assert lo.on_decoded(EventKind.READY_OR_ACK, None, 0, 2, peer=5) is None


def test_rendezvous_probability():
    assert rendezvous_probability() == pytest.approx(1 / 36)
    assert 1 - (1 - rendezvous_probability()) ** 36 == pytest.approx(0.637, abs=1e-3)
    with pytest.raises(ValueError):
        rendezvous_probability(0, 6)
