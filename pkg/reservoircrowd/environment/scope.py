from __future__ import annotations

from dataclasses import dataclass, field
from typing import List

import reservoircrowd.utils as utils

from .agents import PlacementGroup, default_plan
from .extent import Extent
from .gridmap import MapSpec, read_map


@dataclass
class Scope:
    """Static description of one task instance: map, placement and horizon."""

    name: str = None
    grid: MapSpec = None
    extent: Extent = None
    n_agent: int = None
    t_max: int = None
    plan: List[PlacementGroup] = field(default=None)

    def __init__(self, settings: dict, grid: MapSpec = None):
        task = settings['task']
        self.name = task['name']
        self.grid = grid if grid is not None else read_map(utils.config.resolve_map_path(settings))
        self.extent = Extent(utils.config.resolve_region(settings))
        self.n_agent = task['n_agent']
        self.t_max = task['t_max']
        self.plan = default_plan(self.name, self.n_agent)
