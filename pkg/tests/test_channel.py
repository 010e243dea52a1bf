import random

import pytest

from irexf.channel import (
    ApplianceInventory,
    CodeTable,
    InventoryEntry,
    NoiseModel,
    SessionReport,
    TimingModel,
    ambient_study,
    pick_target,
    run_session,
)
from irexf.codec import REFERENCE_PAYLOAD, REFERENCE_PREFIX, Phase, build_session
from irexf.errors import EmptyDatabase, NoSuitableTarget
from irexf.ime import ALPHABET64, RemoteCommand
from irexf.ir_protocol import ApplianceType as T, PulseTrain, SignalDatabase, jitter_train, record_replay

PER_CMD = 0.225433526
HUMAN_PRESS = PulseTrain(38000, ((9000, 4500), (560, 560), (560, 40000)))


@pytest.fixture(scope="module")
def reference_schedule(layout):
    return build_session(layout, REFERENCE_PREFIX, REFERENCE_PAYLOAD)


def test_code_table_roundtrip():
    codes = CodeTable.default()
    assert codes.address == 0x10 and codes.codes[RemoteCommand.UP] == 0x40
    for cmd in RemoteCommand:
        assert codes.decode(codes.encode(cmd)) is cmd
    assert codes.decode(PulseTrain(56000, codes.encode(RemoteCommand.OK).segments)) is None
    assert codes.decode(HUMAN_PRESS) is None


def test_timing_and_noise_validation():
    with pytest.raises(ValueError):
        TimingModel(per_command_s=0)
    with pytest.raises(ValueError):
        NoiseModel(corrupt_prob=1.5)


def test_noiseless_session(layout, reference_schedule):
    r = run_session(reference_schedule, layout)
    assert r.decoded_url == REFERENCE_PREFIX + REFERENCE_PAYLOAD
    assert r.decoded_url.endswith(REFERENCE_PAYLOAD)
    assert not r.halted and r.halt_time_s is None and r.retransmissions == 0
    assert r.phase_commands[Phase.PREFIX.value] == 173
    assert r.commands_sent == len(reference_schedule.commands(Phase.PREFIX)) + len(reference_schedule.commands(Phase.PAYLOAD))


def test_time_accounting(layout, reference_schedule):
    t = TimingModel()
    for noise in (NoiseModel(), NoiseModel(corrupt_prob=0.02, rng_seed=4)):
        r = run_session(reference_schedule, layout, t, noise)
        assert r.total_s == pytest.approx(sum(r.phase_durations_s.values()), abs=1e-12)
        expected = t.setup_s + t.app_wait_s + t.teardown_s + t.per_command_s * r.commands_sent
        assert r.total_s == pytest.approx(expected, abs=1e-6)


def test_halt_on_foreign_signal(layout, reference_schedule):
    halt_at = 9 + 10 + 39 + 20.0
    r = run_session(reference_schedule, layout, noise=NoiseModel(foreign_events=[(halt_at, HUMAN_PRESS)]))
    assert r.halted and r.halt_time_s == halt_at
    assert reference_schedule.url.startswith(r.decoded_url) and r.decoded_url != reference_schedule.url
    assert r.phase_durations_s[Phase.TEARDOWN.value] == 0.0
    assert r.total_s == pytest.approx(halt_at)
    # commands are only counted for the slots fully before the halt
    assert r.commands_sent == int((halt_at - 19.0) / PER_CMD)


def test_halt_during_setup(layout, reference_schedule):
    r = run_session(reference_schedule, layout, noise=NoiseModel(foreign_events=[(3.0, HUMAN_PRESS)]))
    assert r.halted and r.decoded_url == "" and r.commands_sent == 0
    assert r.phase_durations_s[Phase.SETUP.value] == 3.0 and r.total_s == 3.0


def test_out_of_band_signal_is_not_seen(layout, reference_schedule):
    distant = PulseTrain(56000, HUMAN_PRESS.segments)
    r = run_session(reference_schedule, layout, noise=NoiseModel(foreign_events=[(40.0, distant)]))
    assert not r.halted and r.decoded_url == reference_schedule.url


def test_signal_during_teardown_is_ignored(layout, reference_schedule):
    end_of_payload = run_session(reference_schedule, layout).total_s - 4.0
    r = run_session(reference_schedule, layout, noise=NoiseModel(foreign_events=[(end_of_payload + 1, HUMAN_PRESS)]))
    assert not r.halted


def test_recovery_restores_payload(layout):
    schedule = build_session(layout, "http://x.cn/", "".join(random.Random(1).choice(ALPHABET64) for _ in range(50)))
    r = run_session(schedule, layout, noise=NoiseModel(corrupt_prob=0.01, rng_seed=1))
    assert r.decoded_url == schedule.url and r.retransmissions > 0


def test_without_recovery_errors_propagate(layout):
    schedule = build_session(layout, "http://x.cn/", "abcdefghij" * 5)
    broken = 0
    for seed in range(10):
        r = run_session(schedule, layout, noise=NoiseModel(corrupt_prob=0.02, rng_seed=seed),
                        recovery_enabled=False)
        assert r.retransmissions == 0
        broken += r.decoded_url != schedule.url
    assert broken > 0


def test_recovery_before_first_commit(layout):
    # Every command corrupted until the budget runs out: reset must not be the
    # fix while nothing is typed, and the loop has to terminate.
    schedule = build_session(layout, "", "ab")
    r = run_session(schedule, layout, noise=NoiseModel(corrupt_prob=1.0, rng_seed=0), max_commands=50)
    assert r.aborted and r.commands_sent == 50 and not r.halted


def test_pulse_jitter_is_recovered(layout):
    schedule = build_session(layout, "http://x.cn/", "Hello-World_42")
    r = run_session(schedule, layout, noise=NoiseModel(jitter_fraction=0.101, rng_seed=3))
    assert r.decoded_url == schedule.url and r.retransmissions > 0


def test_determinism(layout, reference_schedule):
    noise = NoiseModel(corrupt_prob=0.03, rng_seed=99, jitter_fraction=0.05)
    assert run_session(reference_schedule, layout, noise=noise) == run_session(reference_schedule, layout, noise=noise)


def test_report_dict_roundtrip(layout, reference_schedule):
    r = run_session(reference_schedule, layout)
    assert SessionReport.from_dict(r.to_dict()) == r


def test_ambient_study_counts(layout, fingerprint_db):
    sky = fingerprint_db.get("skyworth-q-plus").template
    inv = ambient_study([(float(i), record_replay(sky)) for i in range(10)], fingerprint_db)
    assert len(inv) == 1 and inv.observations[0].count == 10 and inv.observations[0].first_seen_s == 0.0
    assert len(ambient_study([], fingerprint_db)) == 0


def test_ambient_study_mixed(fingerprint_db):
    rng = random.Random(2)
    gree = fingerprint_db.get("gree-yb0f2").template
    sky = fingerprint_db.get("skyworth-q-plus").template
    junk = PulseTrain(38000, ((300, 300),) * 5)
    observed = [(5.0, gree), (1.0, junk), (2.0, jitter_train(sky, rng, 0.03)), (7.5, gree), (3.0, junk),
                (9.0, PulseTrain(20000, gree.segments))]
    inv = ambient_study(observed, fingerprint_db)
    # hand tally: junk x2 first at 1.0; skyworth x1 at 2.0; gree x2 first at 5.0; the 20 kHz one unseen
    assert [(o.name, o.count, o.first_seen_s) for o in inv.observations] == [
        ("OTHER", 2, 1.0), ("skyworth-q-plus", 1, 2.0), ("gree-yb0f2", 2, 5.0)]
    assert inv.get("OTHER").appliance_type is T.OTHER


def test_ambient_study_empty_db():
    with pytest.raises(EmptyDatabase):
        ambient_study([], SignalDatabase(()))


def _inv(*rows):
    return ApplianceInventory(tuple(InventoryEntry(*r) for r in rows))


def test_pick_target():
    assert pick_target(_inv(("tv", T.TV_BOX, "s", 3, 4.0), ("ac", T.SMART_AC, "g", 5, 1.0))) == "tv"
    assert pick_target(_inv(("a", T.TV_BOX, "s", 4, 9.0), ("b", T.TV_BOX, "x", 4, 2.0))) == "b"
    assert pick_target(_inv(("a", T.TRADITIONAL_AC, "m", 9, 0.0), ("b", T.SMART_AC, "g", 1, 5.0))) == "b"
    with pytest.raises(NoSuitableTarget):
        pick_target(_inv(("OTHER", T.OTHER, "unknown", 8, 0.0)))
