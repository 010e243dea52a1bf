"""Discrete-event simulation of an exfiltration session.

The transmitter sends one NEC frame per remote command.  The set-top box
decodes each frame and feeds it to the keyboard model; the transmitter's
own receiver hears what the box heard (the echo) and compares it with what
was meant.  A mismatch triggers the reset-and-replan recovery, a foreign
signal in the air halts the session.
"""

from __future__ import annotations

import heapq
import json
import random
from collections import deque
from dataclasses import dataclass, field
from importlib import resources

from .codec import Phase, SessionSchedule, plan_text
from .errors import EmptyDatabase, IrexfError, NoSuitableTarget
from .ime import (
    DIRECTIONS,
    RESET_SEQUENCE,
    CursorState,
    ImeLayout,
    RemoteCommand,
    apply_command,
)
from .ir_protocol import (
    DEFAULT_TOLERANCE,
    ApplianceType,
    NecFrame,
    PulseTrain,
    SignalDatabase,
    classify_signal,
    jitter_train,
    nec_decode,
    nec_encode,
    sensor_accepts,
)


@dataclass(frozen=True)
class CodeTable:
    address: int
    codes: dict

    def __post_init__(self):
        values = list(self.codes.values())
        if len(set(values)) != len(values):
            raise ValueError("command codes must be distinct")

    @classmethod
    def default(cls) -> "CodeTable":
        text = resources.files("irexf.data").joinpath("nec_codes.json").read_text(encoding="utf-8")
        data = json.loads(text)
        return cls(data["address"], {RemoteCommand(k): v for k, v in data["codes"].items()})

    def encode(self, cmd: RemoteCommand) -> PulseTrain:
        return nec_encode(NecFrame(self.address, self.codes[RemoteCommand(cmd)]))

    def decode(self, train: PulseTrain, tolerance: float = DEFAULT_TOLERANCE) -> RemoteCommand | None:
        """Command carried by ``train``, or None when the box would ignore it."""
        if not sensor_accepts(train.carrier_hz):
            return None
        try:
            frame = nec_decode(train, tolerance)
        except IrexfError:
            return None
        if frame.address != self.address:
            return None
        for cmd, code in self.codes.items():
            if code == frame.command:
                return cmd
        return None


@dataclass(frozen=True)
class TimingModel:
    per_command_s: float = 0.225433526
    setup_s: float = 9.0
    app_wait_s: float = 10.0
    teardown_s: float = 4.0

    def __post_init__(self):
        for name in ("per_command_s", "setup_s", "app_wait_s", "teardown_s"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "TimingModel":
        return cls(**{k: float(v) for k, v in data.items() if k != "schema_version"})

    def to_dict(self) -> dict:
        return {"per_command_s": self.per_command_s, "setup_s": self.setup_s,
                "app_wait_s": self.app_wait_s, "teardown_s": self.teardown_s}


@dataclass(frozen=True)
class ForeignEvent:
    time_s: float
    train: PulseTrain


@dataclass(frozen=True)
class NoiseModel:
    corrupt_prob: float = 0.0
    foreign_events: tuple = ()
    rng_seed: int = 0
    jitter_fraction: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.corrupt_prob <= 1.0:
            raise ValueError("corrupt_prob must lie in [0, 1]")
        if not 0.0 <= self.jitter_fraction < 1.0:
            raise ValueError("jitter_fraction must lie in [0, 1)")
        events = []
        for ev in self.foreign_events:
            if not isinstance(ev, ForeignEvent):
                ev = ForeignEvent(float(ev[0]), ev[1])
            events.append(ev)
        object.__setattr__(self, "foreign_events", tuple(events))

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseModel":
        events = tuple(
            ForeignEvent(float(e["time_s"]), PulseTrain.from_dict(e))
            for e in data.get("foreign_events", ())
        )
        return cls(
            corrupt_prob=float(data.get("corrupt_prob", 0.0)),
            foreign_events=events,
            rng_seed=int(data.get("rng_seed", 0)),
            jitter_fraction=float(data.get("jitter_fraction", 0.0)),
        )


@dataclass
class SessionReport:
    intended_url: str
    decoded_url: str
    commands_sent: int
    retransmissions: int
    halted: bool
    halt_time_s: float | None
    phase_durations_s: dict
    phase_commands: dict
    total_s: float
    payload_length: int = 0
    aborted: bool = False

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "intended_url": self.intended_url,
            "decoded_url": self.decoded_url,
            "payload_length": self.payload_length,
            "commands_sent": self.commands_sent,
            "retransmissions": self.retransmissions,
            "halted": self.halted,
            "halt_time_s": self.halt_time_s,
            "phase_durations_s": dict(self.phase_durations_s),
            "phase_commands": dict(self.phase_commands),
            "total_s": self.total_s,
            "aborted": self.aborted,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionReport":
        fields = dict(data)
        fields.pop("schema_version", None)
        return cls(**fields)


class _Halt(Exception):
    def __init__(self, at: float):
        self.at = at


class _Session:
    def __init__(self, schedule, layout, timing, noise, recovery_enabled, codes, tolerance,
                 max_commands=None):
        self.schedule = schedule
        self.layout = layout
        self.timing = timing
        self.noise = noise
        self.recovery = recovery_enabled
        self.codes = codes
        self.tolerance = tolerance
        self.rng = random.Random(noise.rng_seed)
        self.clock = 0.0
        self.durations = {p.value: 0.0 for p in Phase}
        self.counts = {p.value: 0 for p in Phase}
        self.sent = 0
        self.retransmissions = 0
        # Only signals the transmitter's own receiver can pick up matter.
        self.events = [(ev.time_s, i) for i, ev in enumerate(noise.foreign_events)
                       if sensor_accepts(ev.train.carrier_hz)]
        heapq.heapify(self.events)
        self.tv = CursorState.initial(layout)
        self.mirror = self.tv
        self.max_commands = max_commands
        self.aborted = False

    def _drop_past_events(self):
        while self.events and self.events[0][0] < self.clock:
            heapq.heappop(self.events)

    def _occupy(self, phase: Phase, span: float):
        """Advance the clock by ``span`` unless a foreign signal lands first."""
        self._drop_past_events()
        if self.events and self.events[0][0] < self.clock + span:
            at = self.events[0][0]
            self.durations[phase.value] += at - self.clock
            self.clock = at
            raise _Halt(at)
        self.durations[phase.value] += span
        self.clock += span

    def _channel(self, cmd: RemoteCommand) -> RemoteCommand | None:
        train = self.codes.encode(cmd)
        if self.noise.corrupt_prob and self.rng.random() < self.noise.corrupt_prob:
            wrong = self.rng.choice([d for d in DIRECTIONS if d is not cmd])
            train = self.codes.encode(wrong)
        if self.noise.jitter_fraction:
            train = jitter_train(train, self.rng, self.noise.jitter_fraction)
        return self.codes.decode(train, self.tolerance)

    def _replan(self) -> deque:
        url = self.schedule.url
        remaining = url[self.mirror.committed_count:]
        if self.mirror.committed_count >= 1:
            start = self.mirror
            for cmd in RESET_SEQUENCE:
                start = apply_command(start, cmd, self.layout)
            cmds = list(RESET_SEQUENCE)
        else:
            # Nothing typed yet: the candidate row is out of reach, so walk
            # straight from where the echo says the cursor is.
            start, cmds = self.mirror, []
        cmds += plan_text(self.layout, remaining, start, self.schedule.reset_every,
                          payload_only=False)
        return deque(cmds)

    def _type(self):
        prefix_len = len(self.schedule.url_prefix)
        queue = deque(self.schedule.commands(Phase.PREFIX) + self.schedule.commands(Phase.PAYLOAD))
        budget = self.max_commands or 20 * len(queue) + 1000
        while queue:
            if self.sent >= budget:
                self.aborted = True
                return
            cmd = queue.popleft()
            phase = Phase.PREFIX if self.mirror.committed_count < prefix_len else Phase.PAYLOAD
            self._occupy(phase, self.timing.per_command_s)
            heard = self._channel(cmd)
            if heard is not None:
                self.tv = apply_command(self.tv, heard, self.layout)
                self.mirror = apply_command(self.mirror, heard, self.layout)
            self.sent += 1
            self.counts[phase.value] += 1
            if heard is not cmd and self.recovery:
                self.retransmissions += 1
                queue = self._replan()

    def run(self) -> SessionReport:
        halted_at = None
        try:
            self._occupy(Phase.SETUP, self.timing.setup_s)
            self.counts[Phase.SETUP.value] = len(self.schedule.commands(Phase.SETUP))
            self._occupy(Phase.APP_WAIT, self.timing.app_wait_s)
            self._type()
        except _Halt as halt:
            halted_at = halt.at
        else:
            # Closing the browser goes ahead regardless of late interference.
            self.durations[Phase.TEARDOWN.value] = self.timing.teardown_s
            self.counts[Phase.TEARDOWN.value] = len(self.schedule.commands(Phase.TEARDOWN))
            self.clock += self.timing.teardown_s
        return SessionReport(
            intended_url=self.schedule.url,
            decoded_url=self.tv.typed,
            commands_sent=self.sent,
            retransmissions=self.retransmissions,
            halted=halted_at is not None,
            halt_time_s=halted_at,
            phase_durations_s=self.durations,
            phase_commands=self.counts,
            total_s=sum(self.durations.values()),
            payload_length=len(self.schedule.payload),
            aborted=self.aborted,
        )


def run_session(schedule: SessionSchedule, layout: ImeLayout,
                timing: TimingModel | None = None, noise: NoiseModel | None = None,
                recovery_enabled: bool = True, codes: CodeTable | None = None,
                tolerance: float = DEFAULT_TOLERANCE,
                max_commands: int | None = None) -> SessionReport:
    """Simulate one session.

    ``commands_sent`` counts keyboard commands (prefix and payload, every
    retransmission included); setup and teardown are charged as fixed
    phase durations.  Typing gives up (``aborted``) after ``max_commands``
    sends, by default twenty times the planned count plus 1000.
    """
    return _Session(schedule, layout, timing or TimingModel(), noise or NoiseModel(),
                    recovery_enabled, codes or CodeTable.default(), tolerance,
                    max_commands).run()


@dataclass(frozen=True)
class InventoryEntry:
    name: str
    appliance_type: ApplianceType
    brand: str
    count: int
    first_seen_s: float

    def to_dict(self) -> dict:
        return {"name": self.name, "appliance_type": self.appliance_type.value,
                "brand": self.brand, "count": self.count, "first_seen_s": self.first_seen_s}


@dataclass(frozen=True)
class ApplianceInventory:
    observations: tuple = field(default_factory=tuple)

    def __len__(self):
        return len(self.observations)

    def get(self, name: str) -> InventoryEntry:
        for entry in self.observations:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"schema_version": 1, "observations": [o.to_dict() for o in self.observations]}


UNKNOWN_NAME = "OTHER"


def ambient_study(observed, db: SignalDatabase) -> ApplianceInventory:
    """Tally sniffed signals by the appliance they match.

    Signals outside the receiver's carrier band are never seen; unmatched
    ones are pooled under a single ``OTHER`` entry.
    """
    if not len(db):
        raise EmptyDatabase("fingerprint database is empty")
    tally: dict[str, list] = {}
    for time_s, train in sorted(observed, key=lambda o: o[0]):
        if not sensor_accepts(train.carrier_hz):
            continue
        try:
            match = classify_signal(train, db)
            key, kind, brand = match.name, match.appliance_type, match.brand
        except IrexfError:
            key, kind, brand = UNKNOWN_NAME, ApplianceType.OTHER, "unknown"
        if key in tally:
            tally[key][3] += 1
        else:
            tally[key] = [key, kind, brand, 1, time_s]
    return ApplianceInventory(tuple(InventoryEntry(*row) for row in tally.values()))


_PREFERENCE = (ApplianceType.TV_BOX, ApplianceType.SMART_AC, ApplianceType.TRADITIONAL_AC)


def pick_target(inventory: ApplianceInventory) -> str:
    usable = [o for o in inventory.observations if o.appliance_type in _PREFERENCE]
    if not usable:
        raise NoSuitableTarget("no controllable appliance observed")
    best = min(usable, key=lambda o: (_PREFERENCE.index(o.appliance_type), -o.count, o.first_seen_s))
    return best.name
