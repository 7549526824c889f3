"""Static kitchen layouts and their ASCII serialization."""
from __future__ import annotations

import enum
from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterator

Cell = tuple[int, int]


class LayoutError(ValueError):
    pass


class MalformedGrid(LayoutError):
    pass


class MissingStation(LayoutError):
    pass


class BadSpawn(LayoutError):
    pass


class TileKind(enum.Enum):
    FLOOR = "."
    GENERAL_COUNTER = "X"
    SHARED_COUNTER = "S"
    MEAT_DISPENSER = "M"
    ONION_DISPENSER = "O"
    DIRTY_PLATE_DISPENSER = "P"
    GRILL = "G"
    SINK = "W"
    CHOPPING_BOARD = "B"
    DELIVERY = "T"

    @property
    def passable(self) -> bool:
        return self is TileKind.FLOOR

    @property
    def is_counter(self) -> bool:
        return self in (TileKind.GENERAL_COUNTER, TileKind.SHARED_COUNTER)

    @property
    def is_appliance(self) -> bool:
        return self in (TileKind.GRILL, TileKind.SINK, TileKind.CHOPPING_BOARD)

    @property
    def is_dispenser(self) -> bool:
        return self in (
            TileKind.MEAT_DISPENSER,
            TileKind.ONION_DISPENSER,
            TileKind.DIRTY_PLATE_DISPENSER,
        )


REQUIRED_STATIONS = (
    TileKind.MEAT_DISPENSER,
    TileKind.ONION_DISPENSER,
    TileKind.DIRTY_PLATE_DISPENSER,
    TileKind.GRILL,
    TileKind.SINK,
    TileKind.CHOPPING_BOARD,
    TileKind.DELIVERY,
)

SPAWN_CHARS = ("1", "2")

# Human-readable station names used in prompts and action strings.
STATION_NAMES = {
    TileKind.GENERAL_COUNTER: "general counter",
    TileKind.SHARED_COUNTER: "shared counter",
    TileKind.MEAT_DISPENSER: "meat dispenser",
    TileKind.ONION_DISPENSER: "onion dispenser",
    TileKind.DIRTY_PLATE_DISPENSER: "dirty plate dispenser",
    TileKind.GRILL: "grill",
    TileKind.SINK: "sink",
    TileKind.CHOPPING_BOARD: "chopping board",
    TileKind.DELIVERY: "delivery",
}

# N, S, E, W in this order everywhere tie-breaking matters.
DIRECTIONS: dict[str, Cell] = {"N": (-1, 0), "S": (1, 0), "E": (0, 1), "W": (0, -1)}


@dataclass(frozen=True, eq=False)
class Layout:
    """An immutable kitchen grid.

    ``grid[r][c]`` is the tile at row ``r``, column ``c``. Spawn cells are
    floor tiles; the spawn markers only exist in the ASCII form.
    """

    name: str
    grid: tuple[tuple[TileKind, ...], ...]
    spawns: tuple[Cell, Cell]
    description: str = field(default="", compare=False)

    @property
    def height(self) -> int:
        return len(self.grid)

    @property
    def width(self) -> int:
        return len(self.grid[0]) if self.grid else 0

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Layout):
            return NotImplemented
        return (self.name, self.grid, self.spawns) == (other.name, other.grid, other.spawns)

    def __hash__(self) -> int:
        return hash((self.name, self.grid, self.spawns))

    def tile(self, cell: Cell) -> TileKind | None:
        r, c = cell
        if 0 <= r < self.height and 0 <= c < self.width:
            return self.grid[r][c]
        return None

    def is_floor(self, cell: Cell) -> bool:
        return self.tile(cell) is TileKind.FLOOR

    def cells(self) -> Iterator[tuple[Cell, TileKind]]:
        for r, row in enumerate(self.grid):
            for c, kind in enumerate(row):
                yield (r, c), kind

    @cached_property
    def tiles_by_kind(self) -> dict[TileKind, tuple[Cell, ...]]:
        out: dict[TileKind, list[Cell]] = {k: [] for k in TileKind}
        for cell, kind in self.cells():
            out[kind].append(cell)
        return {k: tuple(v) for k, v in out.items()}

    def tiles(self, kind: TileKind) -> tuple[Cell, ...]:
        return self.tiles_by_kind[kind]

    @cached_property
    def floor_neighbors(self) -> dict[Cell, tuple[tuple[str, Cell], ...]]:
        """Floor cell -> ((direction, floor neighbour), ...) in N,S,E,W order."""
        out = {}
        for cell, kind in self.cells():
            if kind is not TileKind.FLOOR:
                continue
            nbrs = []
            for d, (dr, dc) in DIRECTIONS.items():
                nxt = (cell[0] + dr, cell[1] + dc)
                if self.is_floor(nxt):
                    nbrs.append((d, nxt))
            out[cell] = tuple(nbrs)
        return out

    @cached_property
    def distance_cache(self) -> dict[Cell, dict[Cell, int]]:
        """Memo of obstacle-free floor distances, filled by the planner."""
        return {}

    @cached_property
    def station_access(self) -> dict[Cell, tuple[tuple[Cell, str], ...]]:
        """Non-floor tile -> ((floor cell beside it, facing toward it), ...)."""
        out: dict[Cell, list[tuple[Cell, str]]] = {}
        for cell, kind in self.cells():
            if kind is TileKind.FLOOR:
                continue
            spots = []
            for d, (dr, dc) in DIRECTIONS.items():
                stand = (cell[0] - dr, cell[1] - dc)
                if self.is_floor(stand):
                    spots.append((stand, d))
            out[cell] = sorted(spots)
        return {k: tuple(v) for k, v in out.items()}

    @cached_property
    def station_labels(self) -> dict[Cell, str]:
        """Display name per non-floor tile; numbered only when a kind repeats."""
        labels = {}
        for kind, cells in self.tiles_by_kind.items():
            if kind is TileKind.FLOOR:
                continue
            base = STATION_NAMES[kind]
            for i, cell in enumerate(cells):
                if kind.is_counter or len(cells) > 1:
                    labels[cell] = f"{base} {i + 1}"
                else:
                    labels[cell] = base
        return labels

    def to_text(self) -> str:
        rows = [f"# name: {self.name}"]
        if self.description:
            rows.append(f"# description: {self.description}")
        for r, row in enumerate(self.grid):
            chars = [k.value for k in row]
            for i, (sr, sc) in enumerate(self.spawns):
                if sr == r:
                    chars[sc] = SPAWN_CHARS[i]
            rows.append("".join(chars))
        return "\n".join(rows) + "\n"

    def validate(self) -> None:
        validate_layout(self)


def _reachable(layout: Layout, start: Cell) -> set[Cell]:
    seen = {start}
    queue = deque([start])
    nbrs = layout.floor_neighbors
    while queue:
        cur = queue.popleft()
        for _, nxt in nbrs[cur]:
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return seen


def validate_layout(layout: Layout) -> None:
    if len(layout.spawns) != 2 or layout.spawns[0] == layout.spawns[1]:
        raise BadSpawn("a layout needs exactly two distinct spawns")
    for s in layout.spawns:
        if not layout.is_floor(s):
            raise BadSpawn(f"spawn {s} is not a floor cell")
    missing = [k.name for k in REQUIRED_STATIONS if not layout.tiles(k)]
    if missing:
        raise MissingStation(f"layout {layout.name!r} lacks {', '.join(missing)}")
    access = layout.station_access
    for s in layout.spawns:
        region = _reachable(layout, s)
        if not any(stand in region for spots in access.values() for stand, _ in spots):
            raise BadSpawn(f"spawn {s} cannot reach any station")


def parse_layout(text: str, name: str = "", description: str = "", validate: bool = True) -> Layout:
    """Parse the ASCII layout format (see ``TileKind`` for the alphabet).

    Blank lines and lines starting with ``#`` are ignored, so layout files may
    carry a header comment; a ``# name: <id>`` comment sets the name when
    ``name`` is not given.
    """
    rows = []
    for line in text.splitlines():
        stripped = line.rstrip("\r\n")
        if not stripped.strip():
            continue
        if stripped.startswith("#"):
            key, _, value = stripped[1:].partition(":")
            if key.strip() == "name" and not name:
                name = value.strip()
            elif key.strip() == "description" and not description:
                description = value.strip()
            continue
        rows.append(stripped)
    if not rows:
        raise MalformedGrid("empty layout")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise MalformedGrid("ragged rows")

    chars = {k.value: k for k in TileKind}
    grid = []
    spawns: dict[str, Cell] = {}
    n_spawn_marks = 0
    for r, row in enumerate(rows):
        out_row = []
        for c, ch in enumerate(row):
            if ch in SPAWN_CHARS:
                n_spawn_marks += 1
                spawns[ch] = (r, c)
                out_row.append(TileKind.FLOOR)
            elif ch in chars:
                out_row.append(chars[ch])
            else:
                raise MalformedGrid(f"unknown character {ch!r} at row {r}, column {c}")
        grid.append(tuple(out_row))

    if n_spawn_marks != 2 or set(spawns) != set(SPAWN_CHARS):
        raise BadSpawn("expected exactly one '1' and one '2' spawn marker")
    layout = Layout(
        name=name or "unnamed",
        grid=tuple(grid),
        spawns=(spawns["1"], spawns["2"]),
        description=description,
    )
    if validate:
        validate_layout(layout)
    return layout


SHIPPED_LAYOUTS = ("open", "ring", "hallway", "forced")


def load_layout(name_or_path: str) -> Layout:
    """Load a shipped layout by name, or any ``.layout`` file by path."""
    if name_or_path in SHIPPED_LAYOUTS:
        text = resources.files("kitchenqd.layouts").joinpath(f"{name_or_path}.layout").read_text()
        return parse_layout(text, name=name_or_path)
    with open(name_or_path) as fh:
        text = fh.read()
    return parse_layout(text)
