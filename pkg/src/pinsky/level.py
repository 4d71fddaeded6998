"""dZelda levels: tile grid, validation and the ASCII text format.

The text format is one header line ``W H variant`` followed by ``H`` rows
of ``W`` glyphs::

    w  wall      .  floor     A  avatar spawn
    +  key       g  door      3  monster spawn

Serialisation always ends with a single newline, so
``serialize(parse(text)) == text`` for canonical text and
``parse(serialize(level)) == level`` for every valid level.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class Tile(enum.IntEnum):
    # values double as observation channel indices
    WALL = 0
    FLOOR = 1
    KEY = 2
    DOOR = 3
    MONSTER = 4
    AVATAR = 5


class Variant(str, enum.Enum):
    SINGLE_DOOR = "singleDoor"
    MULTI_DOOR = "multiDoor"


GLYPHS = {
    Tile.WALL: "w",
    Tile.FLOOR: ".",
    Tile.KEY: "+",
    Tile.DOOR: "g",
    Tile.MONSTER: "3",
    Tile.AVATAR: "A",
}
_FROM_GLYPH = {g: t for t, g in GLYPHS.items()}

OBJECT_TILES = (Tile.KEY, Tile.DOOR, Tile.MONSTER, Tile.AVATAR)


class LevelError(ValueError):
    """A level violates one of the layout invariants."""


@dataclass(eq=False)
class Level:
    cells: np.ndarray
    variant: Variant = Variant.SINGLE_DOOR
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self.cells = np.ascontiguousarray(self.cells, dtype=np.int8)
        self.cells.setflags(write=False)
        self.variant = Variant(self.variant)

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def positions(self, tile: Tile) -> list[tuple[int, int]]:
        """Row-major list of cells holding ``tile``."""
        rows, cols = np.nonzero(self.cells == tile)
        return [(int(r), int(c)) for r, c in zip(rows, cols)]

    @property
    def avatar(self) -> tuple[int, int]:
        return self.positions(Tile.AVATAR)[0]

    @property
    def keys(self) -> list[tuple[int, int]]:
        return self.positions(Tile.KEY)

    @property
    def doors(self) -> list[tuple[int, int]]:
        return self.positions(Tile.DOOR)

    @property
    def monsters(self) -> list[tuple[int, int]]:
        return self.positions(Tile.MONSTER)

    def wall_mask(self) -> np.ndarray:
        return self.cells == Tile.WALL

    def interior_walls(self) -> int:
        return int((self.cells[1:-1, 1:-1] == Tile.WALL).sum())

    def static_arrays(self):
        """(walls uint8, keys int64[nk,2], doors int64[nd,2], n_monsters) for kernels."""
        if "static" not in self._cache:
            walls = np.ascontiguousarray(self.wall_mask(), dtype=np.uint8)
            keys = np.array(self.keys, dtype=np.int64).reshape(-1, 2)
            doors = np.array(self.doors, dtype=np.int64).reshape(-1, 2)
            self._cache["static"] = (walls, keys, doors, len(self.monsters))
        return self._cache["static"]

    def violations(self) -> list[str]:
        if "violations" not in self._cache:
            self._cache["violations"] = self._violations()
        return list(self._cache["violations"])

    def _violations(self) -> list[str]:
        problems = []
        h, w = self.cells.shape
        if h < 3 or w < 3:
            return [f"grid {w}x{h} too small for a walled border"]
        if not np.isin(self.cells, [int(t) for t in Tile]).all():
            problems.append("unknown tile value")
        border = np.concatenate(
            [self.cells[0], self.cells[-1], self.cells[:, 0], self.cells[:, -1]]
        )
        if (border != Tile.WALL).any():
            problems.append("border cells must all be walls")
        n_avatar = int((self.cells == Tile.AVATAR).sum())
        if n_avatar != 1:
            problems.append(f"exactly one avatar spawn required, found {n_avatar}")
        n_keys = int((self.cells == Tile.KEY).sum())
        n_doors = int((self.cells == Tile.DOOR).sum())
        if n_keys < 1:
            problems.append("at least one key required")
        if n_doors < 1:
            problems.append("at least one door required")
        if self.variant is Variant.SINGLE_DOOR and n_doors > 1:
            problems.append(f"singleDoor level must have exactly 1 door, found {n_doors}")
        return problems

    def validate(self) -> "Level":
        problems = self.violations()
        if problems:
            raise LevelError("; ".join(problems))
        return self

    def copy(self) -> "Level":
        return Level(self.cells.copy(), self.variant)

    def with_cells(self, cells: np.ndarray) -> "Level":
        return Level(cells, self.variant)

    def __eq__(self, other):
        if not isinstance(other, Level):
            return NotImplemented
        return self.variant == other.variant and np.array_equal(self.cells, other.cells)

    def __hash__(self):
        return hash((self.variant, self.cells.tobytes(), self.cells.shape))

    def rows(self) -> list[str]:
        return ["".join(GLYPHS[Tile(v)] for v in row) for row in self.cells]

    def __str__(self):
        return serialize(self)


def parse(text: str, validate: bool = True) -> Level:
    lines = text.splitlines()
    if not lines:
        raise LevelError("empty level text")
    header = lines[0].split()
    if len(header) != 3:
        raise LevelError(f"header must be 'W H variant', got {lines[0]!r}")
    try:
        w, h = int(header[0]), int(header[1])
        variant = Variant(header[2])
    except ValueError as exc:
        raise LevelError(f"bad header {lines[0]!r}: {exc}") from None
    body = lines[1:]
    if len(body) != h:
        raise LevelError(f"expected {h} rows, got {len(body)}")
    cells = np.empty((h, w), dtype=np.int8)
    for r, row in enumerate(body):
        if len(row) != w:
            raise LevelError(f"row {r} has {len(row)} glyphs, expected {w}")
        for c, ch in enumerate(row):
            try:
                cells[r, c] = _FROM_GLYPH[ch]
            except KeyError:
                raise LevelError(f"unknown glyph {ch!r} at ({r},{c})") from None
    level = Level(cells, variant)
    return level.validate() if validate else level


def serialize(level: Level) -> str:
    return f"{level.width} {level.height} {level.variant.value}\n" + "\n".join(level.rows()) + "\n"


def from_rows(rows, variant=Variant.SINGLE_DOOR, validate: bool = True) -> Level:
    """Build a level from glyph rows (no header)."""
    rows = [r for r in rows]
    text = f"{len(rows[0])} {len(rows)} {Variant(variant).value}\n" + "\n".join(rows) + "\n"
    return parse(text, validate=validate)


def load(path) -> Level:
    return parse(Path(path).read_text())


def save(level: Level, path) -> None:
    Path(path).write_text(serialize(level))


_DATA = Path(__file__).parent / "data"


def bundled(name: str) -> Path:
    """Path of a seed level shipped with the package (``singledoor`` / ``multidoor``)."""
    return _DATA / f"seed_{name.lower()}.txt"
