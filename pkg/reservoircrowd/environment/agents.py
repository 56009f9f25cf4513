from __future__ import annotations

from dataclasses import dataclass
from enum import IntEnum
from typing import List, Sequence, Tuple

from reservoircrowd.utils.errors import PlacementCapacityError

from .extent import Extent
from .gridmap import MapSpec


class Action(IntEnum):
    UP = 0
    DOWN = 1
    RIGHT = 2
    LEFT = 3


# (dx, dy) per action; "up" decreases the row index.
DISPLACEMENTS = {
    Action.UP: (0, -1),
    Action.DOWN: (0, 1),
    Action.RIGHT: (1, 0),
    Action.LEFT: (-1, 0),
}
N_ACTIONS = len(Action)


class Direction(IntEnum):
    RIGHT = 1
    LEFT = -1


@dataclass
class AgentState:
    id: int
    position: Tuple[int, int]
    group_id: int
    target_direction: Direction
    cumulative_reward: int = 0


@dataclass(frozen=True)
class PlacementGroup:
    """One entry of a placement plan.

    ``count`` agents of ``group_id`` head ``direction``. ``from_right`` fills the
    checkerboard slots in mirrored order, starting at the right edge of the region.
    """

    group_id: int
    direction: Direction
    count: int
    from_right: bool = False


@dataclass(frozen=True)
class MoveIntent:
    agent_id: int
    action: Action
    target: Tuple[int, int]


def default_plan(task_name: str, n_agent: int) -> List[PlacementGroup]:
    if task_name == 'task1':
        return [PlacementGroup(0, Direction.RIGHT, n_agent)]
    n_right = (n_agent + 1) // 2
    return [
        PlacementGroup(0, Direction.RIGHT, n_right),
        PlacementGroup(1, Direction.LEFT, n_agent - n_right, from_right=True),
    ]


def place_agents_checkerboard(grid: MapSpec, n_agent: int, groups: Sequence[PlacementGroup],
                              region: Extent) -> List[AgentState]:
    """Place agents on the checkerboard cells of ``region``.

    Left-filled groups take slots from the front of the column-major slot list,
    right-filled groups from its back, so the two never meet while the total
    fits. Agent ids follow the plan order.

    Raises:
        PlacementCapacityError: When the region has fewer slots than agents.
    """
    if sum(g.count for g in groups) != n_agent:
        raise ValueError(f"Placement plan places {sum(g.count for g in groups)} agents, expected {n_agent}")
    slots = region.checkerboard_slots(grid)
    if n_agent > len(slots):
        raise PlacementCapacityError(
            f"Cannot place {n_agent} agents: region has only {len(slots)} checkerboard slots"
        )

    agents = []
    front, back = 0, len(slots)
    for group in groups:
        for _ in range(group.count):
            if group.from_right:
                back -= 1
                position = slots[back]
            else:
                position = slots[front]
                front += 1
            agents.append(AgentState(len(agents), position, group.group_id, group.direction))
    return agents
