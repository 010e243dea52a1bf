"""Pulse-train level infrared signalling.

Signals are modelled as mark/space duration lists on a scalar carrier
frequency.  NEC framing is the one concrete protocol implemented; anything
else is handled as an opaque waveform that can be recorded, replayed and
matched against a fingerprint database.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import (
    CheckFailed,
    EmptyDatabase,
    InvalidPulseTrain,
    MalformedFrame,
    NoMatch,
)

NEC_CARRIER_HZ = 38000
NEC_LEADER = (9000, 4500)
NEC_BURST = 560
NEC_SPACE_ZERO = 560
NEC_SPACE_ONE = 1690
# Frame-to-frame period of a held NEC key; the stop mark's trailing gap
# pads the frame out to it.
NEC_FRAME_PERIOD_US = 108000
NEC_SEGMENTS = 34

SENSOR_MIN_HZ = 35000
SENSOR_MAX_HZ = 41000

DEFAULT_TOLERANCE = 0.10


@dataclass(frozen=True)
class PulseTrain:
    carrier_hz: float
    segments: tuple[tuple[int, int], ...]

    def __post_init__(self):
        segs = tuple((int(m), int(s)) for m, s in self.segments)
        if not segs:
            raise InvalidPulseTrain("pulse train has no segments")
        for i, ((m, s), (rm, rs)) in enumerate(zip(segs, self.segments)):
            if m != rm or s != rs:
                raise InvalidPulseTrain(f"segment {i} has non-integer duration")
            if m <= 0 or s <= 0:
                raise InvalidPulseTrain(f"segment {i} has non-positive duration")
        if self.carrier_hz <= 0:
            raise InvalidPulseTrain("carrier frequency must be positive")
        object.__setattr__(self, "segments", segs)

    @property
    def duration_us(self) -> int:
        return sum(m + s for m, s in self.segments)

    def durations(self) -> list[int]:
        """Flattened [mark, space, mark, space, ...] list."""
        return [d for seg in self.segments for d in seg]

    def to_dict(self) -> dict:
        return {"carrier_hz": self.carrier_hz, "segments": [list(s) for s in self.segments]}

    @classmethod
    def from_dict(cls, data: dict, carrier_hz: float = NEC_CARRIER_HZ) -> "PulseTrain":
        if isinstance(data, list):
            return cls(carrier_hz, tuple(tuple(s) for s in data))
        return cls(data.get("carrier_hz", carrier_hz), tuple(tuple(s) for s in data["segments"]))


@dataclass(frozen=True)
class NecFrame:
    address: int
    command: int

    def __post_init__(self):
        for name in ("address", "command"):
            value = getattr(self, name)
            if not 0 <= value <= 0xFF:
                raise ValueError(f"{name} must be an 8-bit value, got {value!r}")

    def wire_bytes(self) -> tuple[int, int, int, int]:
        return (self.address, self.address ^ 0xFF, self.command, self.command ^ 0xFF)


def nec_encode(frame: NecFrame, carrier_hz: float = NEC_CARRIER_HZ) -> PulseTrain:
    if carrier_hz <= 0:
        raise ValueError("carrier_hz must be positive")
    marks_spaces: list[int] = list(NEC_LEADER)
    for byte in frame.wire_bytes():
        for bit in range(8):
            marks_spaces.append(NEC_BURST)
            marks_spaces.append(NEC_SPACE_ONE if (byte >> bit) & 1 else NEC_SPACE_ZERO)
    used = sum(marks_spaces) + NEC_BURST
    marks_spaces.append(NEC_BURST)
    marks_spaces.append(NEC_FRAME_PERIOD_US - used)
    segs = tuple(zip(marks_spaces[0::2], marks_spaces[1::2]))
    return PulseTrain(carrier_hz, segs)


def _within(observed: int, nominal: int, tol: float) -> bool:
    return abs(observed - nominal) <= tol * nominal


def nec_decode(train: PulseTrain, tolerance_fraction: float = DEFAULT_TOLERANCE) -> NecFrame:
    """Decode an NEC frame.

    Every mark and space is compared against its own nominal duration, so
    jitter never accumulates along the frame.  The stop mark's trailing gap
    is not checked.

    Raises:
        MalformedFrame: wrong segment count or a duration out of tolerance.
        CheckFailed: a complement byte does not match its data byte.
    """
    if not 0 < tolerance_fraction < 0.5:
        raise ValueError("tolerance_fraction must lie in (0, 0.5)")
    segs = train.segments
    if len(segs) != NEC_SEGMENTS:
        raise MalformedFrame(f"expected {NEC_SEGMENTS} segments, got {len(segs)}")
    lead_mark, lead_space = segs[0]
    if not (_within(lead_mark, NEC_LEADER[0], tolerance_fraction)
            and _within(lead_space, NEC_LEADER[1], tolerance_fraction)):
        raise MalformedFrame("leader out of tolerance", segment=0)

    wire = [0, 0, 0, 0]
    for i, (mark, space) in enumerate(segs[1:33]):
        if not _within(mark, NEC_BURST, tolerance_fraction):
            raise MalformedFrame(f"bit {i} mark out of tolerance", bit=i)
        if _within(space, NEC_SPACE_ZERO, tolerance_fraction):
            bit = 0
        elif _within(space, NEC_SPACE_ONE, tolerance_fraction):
            bit = 1
        else:
            raise MalformedFrame(f"bit {i} space out of tolerance", bit=i)
        wire[i // 8] |= bit << (i % 8)

    if not _within(segs[33][0], NEC_BURST, tolerance_fraction):
        raise MalformedFrame("stop mark out of tolerance", segment=33)

    addr, naddr, cmd, ncmd = wire
    if addr ^ naddr != 0xFF or cmd ^ ncmd != 0xFF:
        raise CheckFailed(
            f"complement check failed: {addr:#04x}/{naddr:#04x} {cmd:#04x}/{ncmd:#04x}"
        )
    return NecFrame(addr, cmd)


def sensor_accepts(carrier_hz: float) -> bool:
    # HS0038B-style receiver band, peak at 38 kHz.
    if carrier_hz <= 0:
        raise ValueError("carrier_hz must be positive")
    return SENSOR_MIN_HZ <= carrier_hz <= SENSOR_MAX_HZ


def record_replay(train: PulseTrain) -> PulseTrain:
    """Capture a waveform and emit it again, segment for segment."""
    captured = [tuple(seg) for seg in train.segments]
    return PulseTrain(train.carrier_hz, tuple(captured))


class ApplianceType(str, enum.Enum):
    TV_BOX = "TV_BOX"
    SMART_AC = "SMART_AC"
    TRADITIONAL_AC = "TRADITIONAL_AC"
    OTHER = "OTHER"


@dataclass(frozen=True)
class SignalFingerprint:
    name: str
    appliance_type: ApplianceType
    brand: str
    template: PulseTrain
    tolerance_fraction: float = DEFAULT_TOLERANCE

    def __post_init__(self):
        object.__setattr__(self, "appliance_type", ApplianceType(self.appliance_type))
        if not 0 < self.tolerance_fraction < 0.5:
            raise ValueError(f"{self.name}: tolerance_fraction must lie in (0, 0.5)")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "appliance_type": self.appliance_type.value,
            "brand": self.brand,
            "tolerance_fraction": self.tolerance_fraction,
            "carrier_hz": self.template.carrier_hz,
            "segments": [list(s) for s in self.template.segments],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SignalFingerprint":
        return cls(
            name=data["name"],
            appliance_type=ApplianceType(data["appliance_type"]),
            brand=data["brand"],
            template=PulseTrain(data.get("carrier_hz", NEC_CARRIER_HZ),
                                tuple(tuple(s) for s in data["segments"])),
            tolerance_fraction=data.get("tolerance_fraction", DEFAULT_TOLERANCE),
        )


@dataclass(frozen=True)
class SignalDatabase:
    entries: tuple[SignalFingerprint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        entries = tuple(self.entries)
        names = [e.name for e in entries]
        dupes = sorted({n for n in names if names.count(n) > 1})
        if dupes:
            raise ValueError(f"duplicate fingerprint names: {dupes}")
        object.__setattr__(self, "entries", entries)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def get(self, name: str) -> SignalFingerprint:
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"entries": [e.to_dict() for e in self.entries]}

    @classmethod
    def from_dict(cls, data: dict) -> "SignalDatabase":
        return cls(tuple(SignalFingerprint.from_dict(e) for e in data["entries"]))

    @classmethod
    def load(cls, path: str | Path) -> "SignalDatabase":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)


@dataclass(frozen=True)
class MatchResult:
    name: str
    appliance_type: ApplianceType
    brand: str
    distance: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "appliance_type": self.appliance_type.value,
            "brand": self.brand,
            "distance": self.distance,
        }


def timing_distance(observed: PulseTrain, template: PulseTrain) -> float:
    """Mean relative deviation over aligned durations; inf on length mismatch."""
    if len(observed.segments) != len(template.segments):
        return float("inf")
    obs, ref = observed.durations(), template.durations()
    return sum(abs(o - r) / r for o, r in zip(obs, ref)) / len(ref)


def classify_signal(train: PulseTrain, db: SignalDatabase | Iterable[SignalFingerprint]) -> MatchResult:
    entries = list(db)
    if not entries:
        raise EmptyDatabase("fingerprint database is empty")
    # min() keeps the first of equal distances, so database order breaks ties.
    best = min(entries, key=lambda fp: timing_distance(train, fp.template))
    dist = timing_distance(train, best.template)
    if dist > best.tolerance_fraction:
        raise NoMatch(f"nearest fingerprint {best.name!r} at distance {dist:.4f}")
    return MatchResult(best.name, best.appliance_type, best.brand, dist)


def jitter_train(train: PulseTrain, rng, fraction: float) -> PulseTrain:
    """Scale every duration independently by a factor in [1-fraction, 1+fraction]."""

    def j(d: int) -> int:
        return max(1, round(d * (1.0 + rng.uniform(-fraction, fraction))))

    return PulseTrain(train.carrier_hz, tuple((j(m), j(s)) for m, s in train.segments))


def segments_from_json(data: Sequence) -> tuple[tuple[int, int], ...]:
    return tuple((int(m), int(s)) for m, s in data)
