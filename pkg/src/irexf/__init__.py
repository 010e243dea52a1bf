"""Infrared covert-channel codec, simulator and capacity analysis."""

from .analysis import (
    CostMatrix,
    RateQuery,
    SourceModel,
    TypingClass,
    channel_rate,
    cost_matrix,
    detect_machine_typing,
    entropy_bits,
    expected_moves,
    markov_from_corpus,
    uniform_average,
)
from .channel import (
    ApplianceInventory,
    NoiseModel,
    SessionReport,
    TimingModel,
    ambient_study,
    pick_target,
    run_session,
)
from .codec import (
    Phase,
    SessionSchedule,
    base64url_decode,
    base64url_encode,
    build_session,
    extract_payload,
    insert_reset,
    plan_move,
    plan_text,
)
from .ime import (
    ALPHABET64,
    CANDIDATE_ROW,
    CursorState,
    ImeLayout,
    PageId,
    RemoteCommand,
    apply_command,
    canonical_layout,
    decode_command_stream,
    load_layout,
    locate,
)
from .ir_protocol import (
    ApplianceType,
    NecFrame,
    PulseTrain,
    SignalDatabase,
    SignalFingerprint,
    classify_signal,
    nec_decode,
    nec_encode,
    record_replay,
    sensor_accepts,
)

__version__ = "0.1.0"
