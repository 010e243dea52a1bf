import random

import pytest
from hypothesis import given, strategies as st

from irexf.errors import CheckFailed, EmptyDatabase, InvalidPulseTrain, MalformedFrame, NoMatch
from irexf.ir_protocol import (
    ApplianceType,
    NecFrame,
    PulseTrain,
    SignalDatabase,
    SignalFingerprint,
    classify_signal,
    jitter_train,
    nec_decode,
    nec_encode,
    record_replay,
    sensor_accepts,
    timing_distance,
)

BIT0 = (560, 560)
BIT1 = (560, 1690)


def test_encode_zero_frame_layout():
    segs = nec_encode(NecFrame(0x00, 0x00), 38000).segments
    assert len(segs) == 34
    assert segs[0] == (9000, 4500)
    assert segs[1:9] == (BIT0,) * 8
    assert segs[9:17] == (BIT1,) * 8
    assert segs[17:25] == (BIT0,) * 8
    assert segs[25:33] == (BIT1,) * 8
    assert segs[33][0] == 560


def test_encode_zero_frame_duration_without_trailing_gap():
    train = nec_encode(NecFrame(0, 0))
    assert train.duration_us - train.segments[-1][1] == 13500 + 16 * 1120 + 16 * 2250 + 560 == 67980


def test_bits_go_out_lsb_first():
    segs = nec_encode(NecFrame(0x01, 0x80)).segments
    assert segs[1] == BIT1 and segs[2:9] == (BIT0,) * 7
    # command byte 0x80: only its last bit set
    assert segs[17:24] == (BIT0,) * 7 and segs[24] == BIT1


def test_carrier_must_be_positive():
    with pytest.raises(ValueError):
        nec_encode(NecFrame(1, 2), 0)


@given(st.integers(0, 255), st.integers(0, 255))
def test_roundtrip(addr, cmd):
    assert nec_decode(nec_encode(NecFrame(addr, cmd)), 0.10) == NecFrame(addr, cmd)


def test_decode_tolerates_uniform_stretch():
    train = nec_encode(NecFrame(0x10, 0x44))
    stretched = PulseTrain(train.carrier_hz, tuple((round(m * 1.08), round(s * 1.08)) for m, s in train.segments))
    assert nec_decode(stretched, 0.10) == NecFrame(0x10, 0x44)


def test_decode_rejects_bad_bit_space():
    segs = list(nec_encode(NecFrame(0x10, 0x44)).segments)
    segs[1 + 17] = (560, 3000)
    with pytest.raises(MalformedFrame):
        nec_decode(PulseTrain(38000, tuple(segs)), 0.10)


def test_decode_rejects_wrong_length():
    segs = nec_encode(NecFrame(1, 1)).segments[:-1]
    with pytest.raises(MalformedFrame):
        nec_decode(PulseTrain(38000, segs))


def test_decode_checks_complements():
    segs = list(nec_encode(NecFrame(0x00, 0x00)).segments)
    segs[9] = BIT0  # first bit of ~address flipped to 0
    with pytest.raises(CheckFailed):
        nec_decode(PulseTrain(38000, tuple(segs)))


def test_decode_rejects_bad_leader_and_tolerance_argument():
    segs = list(nec_encode(NecFrame(3, 4)).segments)
    segs[0] = (4500, 4500)
    with pytest.raises(MalformedFrame):
        nec_decode(PulseTrain(38000, tuple(segs)))
    with pytest.raises(ValueError):
        nec_decode(nec_encode(NecFrame(3, 4)), 0.5)


@given(st.integers(0, 255), st.integers(0, 255), st.floats(0.0, 0.095), st.integers(0, 2**32))
def test_jitter_below_tolerance_decodes(addr, cmd, eps, seed):
    train = jitter_train(nec_encode(NecFrame(addr, cmd)), random.Random(seed), eps)
    assert nec_decode(train, 0.10) == NecFrame(addr, cmd)


@pytest.mark.parametrize("hz,ok", [(38000, True), (35000, True), (41000, True), (34999, False),
                                   (41001, False), (30000, False), (56000, False)])
def test_sensor_window(hz, ok):
    assert sensor_accepts(hz) is ok


def test_pulse_train_invariants():
    with pytest.raises(InvalidPulseTrain):
        PulseTrain(38000, ())
    with pytest.raises(InvalidPulseTrain):
        PulseTrain(38000, ((560, 0),))
    with pytest.raises(InvalidPulseTrain):
        PulseTrain(38000, ((560.5, 10),))


def test_record_replay_is_lossless(fingerprint_db):
    for fp in fingerprint_db:
        assert record_replay(fp.template) == fp.template
    train = nec_encode(NecFrame(0x10, 0x0C))
    assert nec_decode(record_replay(train)) == NecFrame(0x10, 0x0C)


def test_classify_self_match(fingerprint_db):
    for fp in fingerprint_db:
        match = classify_signal(record_replay(fp.template), fingerprint_db)
        assert (match.name, match.distance) == (fp.name, 0.0)
        assert match.appliance_type is fp.appliance_type


def test_classify_jittered(fingerprint_db):
    rng = random.Random(11)
    for fp in fingerprint_db:
        for _ in range(20):
            noisy = jitter_train(fp.template, rng, 0.05)
            match = classify_signal(noisy, fingerprint_db)
            assert match.name == fp.name
            assert match.distance <= 0.05 + 1e-3  # rounding to whole microseconds


def test_classify_errors(fingerprint_db):
    with pytest.raises(EmptyDatabase):
        classify_signal(nec_encode(NecFrame(0, 0)), SignalDatabase(()))
    with pytest.raises(NoMatch):
        classify_signal(PulseTrain(38000, ((100, 100),) * 7), fingerprint_db)


def test_distance_definition():
    t = PulseTrain(38000, ((100, 200),))
    o = PulseTrain(38000, ((110, 180),))
    assert timing_distance(o, t) == pytest.approx((0.1 + 0.1) / 2)
    assert timing_distance(PulseTrain(38000, ((1, 1), (1, 1))), t) == float("inf")


def test_database_names_unique_and_roundtrip(fingerprint_db, tmp_path):
    fp = fingerprint_db.entries[0]
    with pytest.raises(ValueError):
        SignalDatabase((fp, fp))
    path = tmp_path / "db.json"
    fingerprint_db.save(path)
    assert SignalDatabase.load(path) == fingerprint_db
    assert len(fingerprint_db) >= 3
    assert {f.appliance_type for f in fingerprint_db} >= {ApplianceType.TV_BOX, ApplianceType.SMART_AC,
                                                          ApplianceType.TRADITIONAL_AC}


def test_fingerprint_tolerance_range():
    t = PulseTrain(38000, ((1, 1),))
    with pytest.raises(ValueError):
        SignalFingerprint("x", ApplianceType.OTHER, "b", t, 0.5)
