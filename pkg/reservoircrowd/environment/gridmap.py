from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from reservoircrowd.utils.errors import MapParseError

WALKABLE = '.'
WALL = '#'
HEADER_PREFIX = 'periodic_x='


@dataclass(frozen=True)
class MapSpec:
    """Static geometry of a grid world.

    ``walls[y, x]`` is True on wall cells; row 0 is the top row and "up"
    decreases y. Rows above and below the map read as walls.
    """

    name: str
    walls: np.ndarray = field(repr=False)
    periodic_x: bool = True

    @property
    def height(self) -> int:
        return self.walls.shape[0]

    @property
    def width(self) -> int:
        return self.walls.shape[1]

    @property
    def walkable(self) -> np.ndarray:
        return ~self.walls

    @property
    def walkable_count(self) -> int:
        return int(np.count_nonzero(~self.walls))

    def is_walkable(self, x: int, y: int) -> bool:
        if not 0 <= y < self.height:
            return False
        if self.periodic_x:
            x %= self.width
        elif not 0 <= x < self.width:
            return False
        return not self.walls[y, x]

    def mirrored(self) -> MapSpec:
        return MapSpec(f"{self.name}-mirrored", self.walls[:, ::-1].copy(), self.periodic_x)

    def to_text(self) -> str:
        rows = [''.join(WALL if w else WALKABLE for w in row) for row in self.walls]
        return '\n'.join([f"{HEADER_PREFIX}{str(self.periodic_x).lower()}"] + rows) + '\n'


def load_map(text: str, name: str = 'map') -> MapSpec:
    """Parse an ASCII grid of '.' (walkable) and '#' (wall) cells.

    An optional first line ``periodic_x=true|false`` sets the horizontal
    boundary condition (default true). Blank lines are ignored.

    Raises:
        MapParseError: On ragged rows, unknown characters or an empty grid.
    """
    periodic_x = True
    rows = []
    width = None
    for line_number, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip('\r\n')
        if not line.strip():
            continue
        if line.startswith(HEADER_PREFIX):
            if rows:
                raise MapParseError("Header must precede the grid", line_number, 1)
            value = line[len(HEADER_PREFIX):].strip().lower()
            if value not in ('true', 'false'):
                raise MapParseError(f"Invalid periodic_x value '{value}'", line_number, len(HEADER_PREFIX) + 1)
            periodic_x = value == 'true'
            continue
        for column, char in enumerate(line, start=1):
            if char not in (WALKABLE, WALL):
                raise MapParseError(f"Unknown map character {char!r}", line_number, column)
        if width is None:
            width = len(line)
        elif len(line) != width:
            raise MapParseError(f"Ragged row of length {len(line)}, expected {width}", line_number, len(line) + 1)
        rows.append([char == WALL for char in line])

    if not rows:
        raise MapParseError("Map contains no grid rows")
    return MapSpec(name, np.array(rows, dtype=bool), periodic_x)


def read_map(file_path) -> MapSpec:
    file_path = Path(file_path)
    try:
        text = file_path.read_text(encoding='utf-8')
    except OSError as error:
        raise OSError(f"Could not read map file {file_path}: {error}") from error
    return load_map(text, name=file_path.stem)
