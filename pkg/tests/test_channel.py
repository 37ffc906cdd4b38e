import pytest

from irswarm.channel import (BOARDS, BoardProfile, BoardVersion, ChannelLayout, ChannelParams, Endpoint,
                             Reception, Transmission, best_rx_channel, board, corner_arcs, coverage_fraction,
                             detect_interference, link_gain, signal_volts)
from irswarm.geometry import Pose, RobotBody, SegmentObstacle, WorldModel

IDEAL = BOARDS[BoardVersion.IDEAL]
V1 = BOARDS[BoardVersion.V1]
P = ChannelParams()


def facing(d, b=IDEAL):
    # robot 0 at the origin facing +x, robot 1 at (d, 0); channel 0 of 0 faces channel 3 of 1
    return Endpoint(Pose(0, 0, 0), 0, b, 0), Endpoint(Pose(d, 0, 0), 3, b, 1)


def test_reference_level_and_decay():
    assert P.volts_at(150.0) == pytest.approx(0.75)
    assert P.volts_at(75.0) == pytest.approx(0.75 * 16)
    assert P.comm_radius == pytest.approx(140.0)
    assert ChannelParams.for_radius(100.0).comm_radius == pytest.approx(100.0)


def test_threshold_must_be_positive():
    with pytest.raises(ValueError):
        ChannelParams(detect_threshold=0.0)


def test_facing_pair_volts():
    tx, rx = facing(150.0)
    assert signal_volts(None, P, tx, rx) == pytest.approx(0.75)


def test_off_axis_falls_below_a_tenth():
    on = link_gain(P, 100.0, V1, 0, 0.0, V1, 3, 180.0)
    for off in (40.0, 60.0, 90.0):
        assert link_gain(P, 100.0, V1, 0, 0.0, V1, 3, 180.0 + off) < 0.1 * on


def test_dead_zone_zeroes_signal():
    assert V1.in_dead_zone(45.0)
    assert not V1.in_dead_zone(0.0)
    assert link_gain(P, 80.0, V1, 1, 45.0, V1, 4, 225.0) == 0.0
    assert link_gain(P, 80.0, IDEAL, 1, 45.0, IDEAL, 4, 225.0) > 0.0


def test_dead_arcs_half_open_and_wrapping():
    b = BoardProfile(BoardVersion.V1, dead_zone_arcs=((350.0, 10.0),))
    assert b.in_dead_zone(355.0) and b.in_dead_zone(0.0) and not b.in_dead_zone(10.0)
    assert b.dead_fraction == pytest.approx(20 / 360)
    assert corner_arcs(2.0)[0] == (44.0, 46.0)
    with pytest.raises(ValueError):
        BoardProfile(BoardVersion.V1, dead_zone_arcs=((-5.0, 5.0),))


def test_self_link_rejected():
    a = Endpoint(Pose(0, 0), 0, IDEAL, 4)
    with pytest.raises(ValueError):
        signal_volts(None, P, a, a)


def test_occlusion_blocks_link():
    tx, rx = facing(120.0)
    world = WorldModel([SegmentObstacle((60, -20), (60, 20))],
                       [RobotBody(0, tx.pose), RobotBody(1, rx.pose)])
    assert signal_volts(world, P, tx, rx) == 0.0
    assert signal_volts(WorldModel([], [RobotBody(0, tx.pose), RobotBody(1, rx.pose)]), P, tx, rx) > 0.0


@pytest.mark.parametrize("bearing,channel", [(0.0, 0), (90.0, 1), (185.0, 3), (359.0, 0)])
def test_best_rx_channel(bearing, channel):
    assert best_rx_channel(IDEAL, bearing)[0] == channel


def test_nearest_channel_and_layout():
    lay = ChannelLayout()
    assert lay.sector_offsets == (0.0, 60.0, 120.0, 180.0, 240.0, 300.0)
    assert lay.nearest_channel(-29.0) == 0
    with pytest.raises(ValueError):
        ChannelLayout(channel_count=0)


def test_board_lookup():
    assert board("v2").parallel_receive
    assert board(BoardVersion.V1) is V1
    assert board(V1) is V1
    with pytest.raises(ValueError):
        board("v9")


def test_detect_interference():
    assert detect_interference([], (0, 10), 0.1) is Reception.SILENT
    one = [Transmission(0.5, 1.0, 5.0)]
    assert detect_interference(one, (0, 10), 0.1) is Reception.CLEAN
    two = one + [Transmission(0.5, 4.0, 8.0)]
    assert detect_interference(two, (0, 10), 0.1) is Reception.COLLIDED
    weak = one + [Transmission(0.01, 4.0, 8.0)]
    assert detect_interference(weak, (0, 10), 0.1) is Reception.CLEAN
    back_to_back = one + [Transmission(0.5, 5.0, 8.0)]
    assert detect_interference(back_to_back, (0, 10), 0.1) is Reception.CLEAN
    with pytest.raises(ValueError):
        detect_interference(one, (5, 5), 0.1)


def test_coverage():
    assert coverage_fraction(IDEAL, P, 100.0) == 0.0
    assert coverage_fraction(V1, P, 100.0) >= V1.dead_fraction
    with pytest.raises(ValueError):
        coverage_fraction(IDEAL, P, 300.0)
