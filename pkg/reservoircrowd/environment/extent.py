from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

from reservoircrowd.utils.errors import ConfigValidationError

from .gridmap import MapSpec


@dataclass
class Extent:
    """Inclusive rectangular placement region of a map."""

    x0: int
    x1: int
    y0: int
    y1: int

    def __init__(self, region):
        self.x0, self.x1, self.y0, self.y1 = (int(v) for v in region)
        if self.x1 < self.x0 or self.y1 < self.y0:
            raise ConfigValidationError('region', f"empty placement region {list(region)}")

    def checkerboard_slots(self, grid: MapSpec) -> List[Tuple[int, int]]:
        """Walkable cells with (x + y) even, column by column from the left edge.

        Cells inside a column run top to bottom.
        """
        if self.x1 >= grid.width or self.y1 >= grid.height:
            region = [self.x0, self.x1, self.y0, self.y1]
            raise ConfigValidationError('region', f"placement region {region} exceeds the "
                                                  f"{grid.width}x{grid.height} map")
        return [
            (x, y)
            for x in range(self.x0, self.x1 + 1)
            for y in range(self.y0, self.y1 + 1)
            if (x + y) % 2 == 0 and not grid.walls[y, x]
        ]
