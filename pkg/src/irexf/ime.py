"""On-screen keyboard geometry and the receiver-side cursor state machine.

The layout has four rectangular pages.  A cell is either a typable
character, a reserved page-switch label (``#123``, ``#SYM``, ``#ABC``,
``#abc``) or an empty string for an inert padding cell.  Above row 0 sits the
candidate row, which the cursor can enter only once something has been typed;
pressing OK there types nothing and drops the cursor back on the page's
initial key.
"""

from __future__ import annotations

import enum
import json
import os
import string
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable, Iterator, Union

from .errors import InvalidLayout, UnknownSymbol

ALPHABET64 = string.ascii_uppercase + string.ascii_lowercase + string.digits + "-_"
SYMBOL_INDEX = {ch: i for i, ch in enumerate(ALPHABET64)}

SWITCH_LABELS = {"#123": "DIGITS", "#SYM": "SYMBOLS", "#ABC": "UPPER", "#abc": "LOWER"}
PAD = ""

# Longest vertical climb the reset sequence can absorb: 4 UPs from the
# bottom row must reach the candidate row.
MAX_ROWS = 4


class PageId(str, enum.Enum):
    LOWER = "LOWER"
    UPPER = "UPPER"
    DIGITS = "DIGITS"
    SYMBOLS = "SYMBOLS"


class RemoteCommand(str, enum.Enum):
    UP = "UP"
    DOWN = "DOWN"
    LEFT = "LEFT"
    RIGHT = "RIGHT"
    OK = "OK"
    SOURCE = "SOURCE"
    HOME = "HOME"
    OPEN_BROWSER = "OPEN_BROWSER"
    BACK = "BACK"


NAVIGATION = (RemoteCommand.UP, RemoteCommand.DOWN, RemoteCommand.LEFT,
              RemoteCommand.RIGHT, RemoteCommand.OK)
DIRECTIONS = NAVIGATION[:4]
RESET_SEQUENCE = (RemoteCommand.UP,) * 4 + (RemoteCommand.OK,)

_STEP = {
    RemoteCommand.UP: (-1, 0),
    RemoteCommand.DOWN: (1, 0),
    RemoteCommand.LEFT: (0, -1),
    RemoteCommand.RIGHT: (0, 1),
}


class _CandidateRow:
    __slots__ = ()

    def __repr__(self):
        return "CANDIDATE_ROW"

    def __reduce__(self):
        return "CANDIDATE_ROW"


CANDIDATE_ROW = _CandidateRow()

Position = Union[tuple[int, int], _CandidateRow]


@dataclass(frozen=True)
class KeyPage:
    page_id: PageId
    grid: tuple[tuple[str, ...], ...]
    initial_position: tuple[int, int]

    @property
    def rows(self) -> int:
        return len(self.grid)

    @property
    def cols(self) -> int:
        return len(self.grid[0])

    def label(self, pos: tuple[int, int]) -> str:
        return self.grid[pos[0]][pos[1]]

    def contains(self, pos: tuple[int, int]) -> bool:
        r, c = pos
        return 0 <= r < self.rows and 0 <= c < self.cols


@dataclass(frozen=True)
class ImeLayout:
    pages: dict
    switch_keys: dict
    version: str = "1"

    def __post_init__(self):
        self._validate()

    def page(self, page_id) -> KeyPage:
        return self.pages[PageId(page_id)]

    @cached_property
    def char_index(self) -> dict[str, tuple[PageId, int, int]]:
        # Every typable label, not just Alphabet64; URL prefixes need ':' etc.
        index = {}
        for pid, page in self.pages.items():
            for r, row in enumerate(page.grid):
                for c, lab in enumerate(row):
                    if lab != PAD and lab not in SWITCH_LABELS:
                        index[lab] = (pid, r, c)
        return index

    def switch_key(self, src, dst) -> tuple[int, int]:
        return self.switch_keys[(PageId(src), PageId(dst))]

    def _validate(self) -> None:
        if set(self.pages) != set(PageId):
            raise InvalidLayout("layout must define exactly the four pages")
        seen: dict[str, tuple] = {}
        for pid, page in self.pages.items():
            if not page.grid or any(len(row) != len(page.grid[0]) for row in page.grid):
                raise InvalidLayout(f"{pid.value}: grid must be a non-empty rectangle")
            if page.rows > MAX_ROWS:
                raise InvalidLayout(f"{pid.value}: at most {MAX_ROWS} rows allowed")
            if not page.contains(page.initial_position):
                raise InvalidLayout(f"{pid.value}: initial position outside grid")
            for r, row in enumerate(page.grid):
                for c, lab in enumerate(row):
                    if lab == PAD:
                        continue
                    if lab.startswith("#") and len(lab) > 1 and lab not in SWITCH_LABELS:
                        raise InvalidLayout(f"unknown reserved label {lab!r}")
                    if lab in SWITCH_LABELS:
                        continue
                    if len(lab) != 1:
                        raise InvalidLayout(f"key label {lab!r} must be one character")
                    if lab in seen:
                        raise InvalidLayout(f"{lab!r} appears more than once")
                    seen[lab] = (pid, r, c)
        missing = [ch for ch in ALPHABET64 if ch not in seen]
        if missing:
            raise InvalidLayout(f"alphabet symbols missing from layout: {''.join(missing)}")
        for want, pid in ((("q"), PageId.LOWER), ("Q", PageId.UPPER), ("1", PageId.DIGITS)):
            page = self.pages[pid]
            if page.label(page.initial_position) != want:
                raise InvalidLayout(f"{pid.value} must start on {want!r}")
        for (src, dst), pos in self.switch_keys.items():
            page = self.pages[src]
            if not page.contains(pos) or SWITCH_LABELS.get(page.label(pos)) != dst.value:
                raise InvalidLayout(f"switch key {src.value}->{dst.value} at {pos} is not a switch to {dst.value}")
        for src in PageId:
            for dst in PageId:
                if src != dst and self.switch_route(src, dst) is None:
                    raise InvalidLayout(f"{dst.value} unreachable from {src.value} in two switches")

    def switch_route(self, src, dst) -> list[PageId] | None:
        """Pages passed through going src -> dst, at most two switches."""
        src, dst = PageId(src), PageId(dst)
        if src == dst:
            return []
        if (src, dst) in self.switch_keys:
            return [dst]
        for mid in PageId:
            if (src, mid) in self.switch_keys and (mid, dst) in self.switch_keys:
                return [mid, dst]
        return None

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "pages": [
                {"page_id": p.page_id.value, "initial": list(p.initial_position),
                 "grid": [list(row) for row in p.grid]}
                for p in self.pages.values()
            ],
            "switch_keys": {f"{s.value}→{d.value}": list(pos)
                            for (s, d), pos in self.switch_keys.items()},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ImeLayout":
        pages = {}
        for p in data["pages"]:
            pid = PageId(p["page_id"])
            pages[pid] = KeyPage(pid, tuple(tuple(row) for row in p["grid"]), tuple(p["initial"]))
        switch_keys = {}
        for key, pos in data.get("switch_keys", {}).items():
            src, dst = key.replace("->", "→").split("→")
            switch_keys[(PageId(src), PageId(dst))] = tuple(pos)
        if not switch_keys:
            # Derive from the grids when the file leaves the table out.
            for pid, page in pages.items():
                for r, row in enumerate(page.grid):
                    for c, lab in enumerate(row):
                        if lab in SWITCH_LABELS:
                            switch_keys.setdefault((pid, PageId(SWITCH_LABELS[lab])), (r, c))
        return cls(pages, switch_keys, str(data.get("version", "1")))

    @classmethod
    def load(cls, path: str | Path) -> "ImeLayout":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


_CANONICAL: ImeLayout | None = None


def canonical_layout() -> ImeLayout:
    global _CANONICAL
    if _CANONICAL is None:
        text = resources.files("irexf.data").joinpath("layout.json").read_text(encoding="utf-8")
        _CANONICAL = ImeLayout.from_dict(json.loads(text))
    return _CANONICAL


def load_layout(path: str | Path | None = None) -> ImeLayout:
    """Layout from ``path``, else $IREXF_LAYOUT, else the packaged canonical one."""
    path = path or os.environ.get("IREXF_LAYOUT")
    return ImeLayout.load(path) if path else canonical_layout()


def locate(layout: ImeLayout, symbol: str) -> tuple[PageId, int, int]:
    if symbol not in SYMBOL_INDEX:
        raise UnknownSymbol(f"{symbol!r} is not a payload symbol", symbol=symbol)
    return layout.char_index[symbol]


def locate_key(layout: ImeLayout, char: str) -> tuple[PageId, int, int]:
    """Like locate() but accepts any typable key, e.g. URL punctuation."""
    try:
        return layout.char_index[char]
    except KeyError:
        raise UnknownSymbol(f"{char!r} is not on the keyboard", symbol=char) from None


@dataclass(frozen=True)
class CursorState:
    page: PageId
    position: Position
    typed: str = ""
    committed_count: int = 0

    @classmethod
    def initial(cls, layout: ImeLayout, page: PageId = PageId.LOWER) -> "CursorState":
        return cls(page, layout.page(page).initial_position)

    @property
    def in_candidate_row(self) -> bool:
        return self.position is CANDIDATE_ROW


def apply_command(state: CursorState, cmd: RemoteCommand, layout: ImeLayout) -> CursorState:
    page = layout.pages[state.page]
    if not isinstance(cmd, RemoteCommand):
        cmd = RemoteCommand(cmd)
    # Built directly rather than via dataclasses.replace(); this is the hot loop.
    step = _STEP.get(cmd)
    if step is not None:
        if state.in_candidate_row:
            # The candidate strip swallows UP/LEFT/RIGHT; DOWN leaves it.
            if cmd is RemoteCommand.DOWN:
                return CursorState(state.page, page.initial_position, state.typed, state.committed_count)
            return state
        r, c = state.position
        if cmd is RemoteCommand.UP and r == 0:
            if state.committed_count >= 1:
                return CursorState(state.page, CANDIDATE_ROW, state.typed, state.committed_count)
            return state
        nr = min(max(r + step[0], 0), page.rows - 1)
        nc = min(max(c + step[1], 0), page.cols - 1)
        return CursorState(state.page, (nr, nc), state.typed, state.committed_count)

    if cmd is RemoteCommand.OK:
        if state.in_candidate_row:
            return CursorState(state.page, page.initial_position, state.typed, state.committed_count)
        lab = page.label(state.position)
        if lab in SWITCH_LABELS:
            target = PageId(SWITCH_LABELS[lab])
            return CursorState(target, layout.pages[target].initial_position, state.typed,
                               state.committed_count)
        if lab == PAD:
            return state
        return CursorState(state.page, state.position, state.typed + lab, state.committed_count + 1)

    # Session commands (SOURCE, HOME, ...) act outside the keyboard.
    return state


def run_commands(commands: Iterable[RemoteCommand], layout: ImeLayout,
                 start: CursorState | None = None) -> CursorState:
    state = start if start is not None else CursorState.initial(layout)
    for cmd in commands:
        state = apply_command(state, cmd, layout)
    return state


def replay(commands: Iterable[RemoteCommand], layout: ImeLayout,
           start: CursorState | None = None) -> Iterator[tuple[PageId, str | None]]:
    """Step through ``commands`` like apply_command, yielding (page, typed key or None).

    Keeps the cursor in locals instead of allocating a CursorState per step.
    """
    state = start if start is not None else CursorState.initial(layout)
    pid, committed = state.page, state.committed_count
    page = layout.pages[pid]
    last_r, last_c = page.rows - 1, page.cols - 1
    cand = state.in_candidate_row
    r, c = (0, 0) if cand else state.position
    up, down, ok = RemoteCommand.UP, RemoteCommand.DOWN, RemoteCommand.OK
    for cmd in commands:
        if not isinstance(cmd, RemoteCommand):
            cmd = RemoteCommand(cmd)
        key = None
        step = _STEP.get(cmd)
        if step is not None:
            if cand:
                if cmd is down:
                    cand = False
                    r, c = page.initial_position
            elif cmd is up and r == 0:
                cand = committed >= 1
            else:
                nr, nc = r + step[0], c + step[1]
                if 0 <= nr <= last_r:
                    r = nr
                if 0 <= nc <= last_c:
                    c = nc
        elif cmd is ok:
            if cand:
                cand = False
                r, c = page.initial_position
            else:
                lab = page.grid[r][c]
                if lab in SWITCH_LABELS:
                    pid = PageId(SWITCH_LABELS[lab])
                    page = layout.pages[pid]
                    last_r, last_c = page.rows - 1, page.cols - 1
                    r, c = page.initial_position
                elif lab != PAD:
                    committed += 1
                    key = lab
        yield pid, key


def decode_command_stream(commands: Iterable[RemoteCommand], layout: ImeLayout,
                          start: CursorState | None = None) -> str:
    return "".join(key for _, key in replay(commands, layout, start) if key is not None)
