import pytest
from hypothesis import given
from hypothesis import strategies as st

from irswarm.codec import (BurstKind, CodecParams, ControlBurst, EventKind, Frame, PulseKind, PulseTrain,
                           StreamDecoder, burst_airtime, classify_pulse, decode_stream, encode_burst,
                           encode_frame, frame_airtime, frame_durations)

P = CodecParams()


def laid_out(durations, start=0.0):
    """Pulses separated by the nominal gap."""
    out, t = [], start
    for d in durations:
        out.append((t, d))
        t += d + P.gap
    return out


def kinds(events):
    return [e.kind for e in events]


def test_frame_validation_and_parity():
    assert Frame.make(0b1011).parity == 1
    assert Frame.make(0).parity == 0
    with pytest.raises(ValueError):
        Frame(256, 0)
    with pytest.raises(ValueError):
        Frame(3, 2)


def test_bits_msb_first_parity_last():
    assert Frame.make(0x80).bits() == [1, 0, 0, 0, 0, 0, 0, 0, 1]


def test_layout_alternates_delimiters_and_bits():
    train = encode_frame(Frame.make(0x00))
    durs = [d for _, d in train.pulses]
    assert len(durs) == 19
    assert durs[0::2] == [2.0] * 10
    assert durs[1::2] == [0.5] * 9
    gaps = [b[0] - (a[0] + a[1]) for a, b in zip(train.pulses, train.pulses[1:])]
    assert all(g == pytest.approx(0.25) for g in gaps)


def test_airtime_examples():
    assert encode_frame(Frame.make(0x00)).airtime == pytest.approx(29.25)
    assert encode_frame(Frame.make(0xFF)).airtime == pytest.approx(37.25)
    forced = encode_frame(Frame(0xFF, 1), check_parity=False)
    assert forced.airtime == pytest.approx(38.25)
    assert frame_airtime(Frame.make(0x00)) == pytest.approx(29.25)


def test_encode_rejects_bad_parity_by_default():
    with pytest.raises(ValueError):
        encode_frame(Frame(0xFF, 1))


def test_burst_airtime():
    assert burst_airtime(BurstKind.REQUEST) == pytest.approx(4.5)
    assert encode_burst(ControlBurst(BurstKind.READY_OR_ACK)).airtime == pytest.approx(6.75)


@pytest.mark.parametrize("d,kind", [(1.0, PulseKind.PROXIMITY), (2.05, PulseKind.T), (0.5, PulseKind.BIT0),
                                    (1.5, PulseKind.BIT1), (1.25, PulseKind.UNKNOWN), (3.0, PulseKind.UNKNOWN)])
def test_classify_pulse(d, kind):
    assert classify_pulse(d) is kind


def test_overlapping_nominals_rejected():
    with pytest.raises(ValueError):
        CodecParams(tolerance=0.3)


def test_control_bursts_and_proximity():
    assert kinds(decode_stream(encode_burst(ControlBurst(BurstKind.REQUEST)))) == [EventKind.REQUEST]
    assert kinds(decode_stream(encode_burst(ControlBurst(BurstKind.READY_OR_ACK)))) == [EventKind.READY_OR_ACK]
    assert kinds(decode_stream([(0.0, 1.0)])) == [EventKind.PROXIMITY_ECHO]


def test_single_bit_flip_gives_parity_error():
    for idx in range(1, 19, 2):
        durs = frame_durations(Frame.make(0x5A), P)
        durs[idx] = 1.5 if durs[idx] == 0.5 else 0.5
        assert kinds(decode_stream(laid_out(durs))) == [EventKind.PARITY_ERROR]


def test_exhaustive_roundtrip():
    for data in range(256):
        f = Frame.make(data)
        ev = decode_stream(encode_frame(f))
        assert kinds(ev) == [EventKind.FRAME] and ev[0].frame == f


def test_back_to_back_frames():
    a = encode_frame(Frame.make(1))
    b = encode_frame(Frame.make(2), start=a.end + P.gap)
    ev = decode_stream(a.pulses + b.pulses)
    assert [e.frame.data for e in ev] == [1, 2]


def test_truncated_frame_is_garbage():
    train = encode_frame(Frame.make(7))
    assert kinds(decode_stream(train.pulses[:10])) == [EventKind.GARBAGE]


def test_stream_decoder_matches_batch():
    a = encode_frame(Frame.make(9))
    b = encode_burst(ControlBurst(BurstKind.REQUEST), start=a.end + 5.0)
    dec = StreamDecoder()
    out = []
    for s, d in a.pulses + b.pulses:
        out += dec.feed(s, d)
    out += dec.flush()
    assert kinds(out) == [EventKind.FRAME, EventKind.REQUEST]
    assert not dec.busy


def test_pulse_train_validation():
    with pytest.raises(ValueError):
        PulseTrain(((0.0, 1.0), (0.5, 1.0)))
    with pytest.raises(ValueError):
        PulseTrain(((0.0, 0.0),))


@given(st.integers(0, 255), st.integers(0, 18),
       st.sampled_from([0.5, 1.0, 1.25, 1.5, 2.0, 3.0, 0.3]))
def test_single_pulse_corruption_never_yields_wrong_frame(data, idx, dur):
    f = Frame.make(data)
    durs = frame_durations(f, P)
    durs[idx] = dur
    for e in decode_stream(laid_out(durs)):
        assert e.kind not in (EventKind.REQUEST, EventKind.READY_OR_ACK)
        if e.kind is EventKind.FRAME and e.frame != f:
            pytest.fail(f"corrupted frame decoded as {e.frame}")


@given(st.lists(st.tuples(st.floats(0.1, 5.0), st.floats(0.05, 3.0)), max_size=40))
def test_decoder_total_on_arbitrary_input(items):
    t, pulses = 0.0, []
    for gap, dur in items:
        t += gap
        pulses.append((t, dur))
        t += dur
    for e in decode_stream(pulses):
        assert e.kind in EventKind
