"""Text to remote-control command planning, session scheduling and the
URL-safe base64 payload codec."""

from __future__ import annotations

import base64
import binascii
import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidLength, InvalidSymbol, PrefixMismatch, UnknownSymbol
from .ime import (
    RESET_SEQUENCE,
    SYMBOL_INDEX,
    CursorState,
    ImeLayout,
    PageId,
    RemoteCommand,
    apply_command,
    locate,
    locate_key,
    replay,
)

UP, DOWN, LEFT, RIGHT, OK = (RemoteCommand.UP, RemoteCommand.DOWN, RemoteCommand.LEFT,
                             RemoteCommand.RIGHT, RemoteCommand.OK)

SETUP_COMMANDS = (RemoteCommand.SOURCE, RemoteCommand.OPEN_BROWSER)
TEARDOWN_COMMANDS = (RemoteCommand.BACK, RemoteCommand.HOME, RemoteCommand.SOURCE)

# Planned length of 173 commands under the canonical layout, the size of the
# prefix phase in the reference session.
REFERENCE_PREFIX = "http://irexf.ustc.edu.cn/api?d="
REFERENCE_PAYLOAD = "KeyboardisOKon20180104ThankyouUSTC"


def _walk(src: tuple[int, int], dst: tuple[int, int]) -> list[RemoteCommand]:
    dr, dc = dst[0] - src[0], dst[1] - src[1]
    path = [DOWN if dr > 0 else UP] * abs(dr)
    path += [RIGHT if dc > 0 else LEFT] * abs(dc)
    return path


def _route(layout: ImeLayout, page: PageId, pos: tuple[int, int],
           char: str) -> tuple[list[RemoteCommand], PageId, tuple[int, int]]:
    """Commands that type ``char`` with the cursor at ``(page, pos)``."""
    tpage, r, c = locate_key(layout, char)
    cmds: list[RemoteCommand] = []
    for hop in layout.switch_route(page, tpage):
        cmds += _walk(pos, layout.switch_key(page, hop))
        cmds.append(OK)
        page, pos = hop, layout.page(hop).initial_position
    cmds += _walk(pos, (r, c))
    cmds.append(OK)
    return cmds, tpage, (r, c)


def plan_move(layout: ImeLayout, src: str, dst: str) -> list[RemoteCommand]:
    """Commands moving from payload symbol ``src`` to ``dst`` and committing it.

    Same-page moves walk rows first, then columns.  Cross-page moves walk to
    the switch key, press OK, and continue from the new page's initial key.
    """
    page, r, c = locate(layout, src)
    locate(layout, dst)
    return _route(layout, page, (r, c), dst)[0]


def plan_text(layout: ImeLayout, text: str, start: CursorState | None = None,
              reset_every: int | None = None, payload_only: bool = True) -> list[RemoteCommand]:
    """Plan ``text`` from ``start`` (default: LOWER initial key, nothing typed).

    With ``reset_every=k`` the reset sequence is spliced in after every k
    committed symbols (never after the last one) and the next move is
    planned from the page's initial key.  ``payload_only=False`` admits any
    key on the layout, which URL prefixes need.
    """
    if reset_every is not None and reset_every < 1:
        raise ValueError("reset_every must be >= 1")
    for i, ch in enumerate(text):
        if payload_only and ch not in SYMBOL_INDEX:
            raise UnknownSymbol(f"{ch!r} at index {i} is not a payload symbol", index=i, symbol=ch)
        if ch not in layout.char_index:
            raise UnknownSymbol(f"{ch!r} at index {i} is not on the keyboard", index=i, symbol=ch)

    state = start if start is not None else CursorState.initial(layout)
    page = state.page
    cmds: list[RemoteCommand] = []
    if state.in_candidate_row:
        cmds.append(OK)
        pos = layout.page(page).initial_position
    else:
        pos = state.position

    for i, ch in enumerate(text, 1):
        step, page, pos = _route(layout, page, pos, ch)
        cmds += step
        if reset_every and i % reset_every == 0 and i < len(text):
            cmds += RESET_SEQUENCE
            pos = layout.page(page).initial_position
    return cmds


def insert_reset(commands: Sequence[RemoteCommand], every_k: int, layout: ImeLayout,
                 start: CursorState | None = None) -> list[RemoteCommand]:
    """Splice reset sequences into an existing command stream.

    The stream is cut after every ``every_k``-th commit; the segment leading
    to the next commit is re-planned from the page's initial key.
    """
    if every_k < 1:
        raise ValueError("every_k must be >= 1")
    commands = list(commands)
    # Split into per-commit segments; the tail holds commands after the last commit.
    segments: list[list[RemoteCommand]] = [[]]
    committed: list[str] = []
    pages: list[PageId] = []
    for cmd, (page, key) in zip(commands, replay(commands, layout, start)):
        segments[-1].append(cmd)
        if key is not None:
            committed.append(key)
            pages.append(page)
            segments.append([])
    tail = segments.pop()

    # A re-planned segment commits the same key as the original one, so the
    # cursor after it matches the first pass and the tail needs no re-plan.
    out: list[RemoteCommand] = []
    for i, seg in enumerate(segments):
        if i and i % every_k == 0:
            out += RESET_SEQUENCE
            page = pages[i - 1]
            seg, _, _ = _route(layout, page, layout.page(page).initial_position, committed[i])
        out += seg
    return out + tail


def base64url_encode(data: bytes) -> str:
    return base64.urlsafe_b64encode(bytes(data)).decode("ascii").rstrip("=")


def base64url_decode(text: str) -> bytes:
    for i, ch in enumerate(text):
        if ch not in SYMBOL_INDEX:
            raise InvalidSymbol(f"{ch!r} at index {i} is not a base64url symbol")
    if len(text) % 4 == 1:
        raise InvalidLength(f"length {len(text)} is not a valid unpadded base64 length")
    try:
        return base64.urlsafe_b64decode(text + "=" * (-len(text) % 4))
    except binascii.Error as exc:  # pragma: no cover - guarded above
        raise InvalidSymbol(str(exc)) from exc


def extract_payload(url: str, prefix: str) -> str:
    if not url.startswith(prefix):
        raise PrefixMismatch(f"{url!r} does not start with {prefix!r}")
    return url[len(prefix):]


class Phase(str, enum.Enum):
    SETUP = "SETUP"
    APP_WAIT = "APP_WAIT"
    PREFIX = "PREFIX"
    PAYLOAD = "PAYLOAD"
    TEARDOWN = "TEARDOWN"


@dataclass(frozen=True)
class SessionSchedule:
    url_prefix: str
    payload: str
    phases: dict = field(default_factory=dict)
    reset_every: int | None = None

    @property
    def url(self) -> str:
        return self.url_prefix + self.payload

    def commands(self, phase: Phase | None = None) -> list[RemoteCommand]:
        if phase is not None:
            return list(self.phases[Phase(phase)])
        return [c for p in Phase for c in self.phases.get(p, ())]

    def boundaries(self) -> list[dict]:
        out, pos = [], 0
        for p in Phase:
            n = len(self.phases.get(p, ()))
            out.append({"phase": p.value, "start": pos, "end": pos + n})
            pos += n
        return out

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "url_prefix": self.url_prefix,
            "payload": self.payload,
            "reset_every": self.reset_every,
            "commands": [{"cmd": c.value} for c in self.commands()],
            "phases": self.boundaries(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SessionSchedule":
        flat = [RemoteCommand(c["cmd"]) for c in data["commands"]]
        phases = {}
        for b in data["phases"]:
            phases[Phase(b["phase"])] = tuple(flat[b["start"]:b["end"]])
        return cls(data["url_prefix"], data["payload"], phases, data.get("reset_every"))


def build_session(layout: ImeLayout, url_prefix: str, payload: str,
                  reset_every: int | None = None) -> SessionSchedule:
    start = CursorState.initial(layout)
    prefix_cmds = plan_text(layout, url_prefix, start, reset_every, payload_only=False)
    state = start
    for cmd in prefix_cmds:
        state = apply_command(state, cmd, layout)
    payload_cmds = plan_text(layout, payload, state, reset_every)
    phases = {
        Phase.SETUP: SETUP_COMMANDS,
        Phase.APP_WAIT: (),
        Phase.PREFIX: tuple(prefix_cmds),
        Phase.PAYLOAD: tuple(payload_cmds),
        Phase.TEARDOWN: TEARDOWN_COMMANDS,
    }
    return SessionSchedule(url_prefix, payload, phases, reset_every)


def commit_count(commands: Iterable[RemoteCommand], layout: ImeLayout,
                 start: CursorState | None = None) -> int:
    """Number of OK presses in ``commands`` that type a symbol."""
    state = start if start is not None else CursorState.initial(layout)
    before = state.committed_count
    for cmd in commands:
        state = apply_command(state, cmd, layout)
    return state.committed_count - before
