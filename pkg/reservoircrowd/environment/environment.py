from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import numpy as np

from reservoircrowd.utils.errors import ContractViolation

from .agents import DISPLACEMENTS, Action, AgentState, MoveIntent, place_agents_checkerboard
from .gridmap import MapSpec
from .scope import Scope

logger = logging.getLogger(__name__)

OBS_RADIUS = 5
OBS_SIDE = 2 * OBS_RADIUS + 1
OBS_CHANNELS = 2
OBS_DIM = OBS_SIDE * OBS_SIDE * OBS_CHANNELS

_DISPLACEMENT_ARRAY = np.array([DISPLACEMENTS[a] for a in Action], dtype=np.int64)


def observe_all(grid: MapSpec, positions: np.ndarray) -> np.ndarray:
    """Local 11x11x2 bitmaps of every agent, flattened row-major to (n, 242).

    Channel 0 marks agents (the observer included), channel 1 walls. Rows
    beyond the top/bottom edge read as walls; columns wrap when the map is
    periodic and read as walls otherwise.
    """
    positions = np.asarray(positions, dtype=np.int64).reshape(-1, 2)
    agent_layer = np.zeros(grid.walls.shape, dtype=np.float64)
    agent_layer[positions[:, 1], positions[:, 0]] = 1.0
    wall_layer = grid.walls.astype(np.float64)

    pad_x = 0 if grid.periodic_x else OBS_RADIUS
    padding = ((OBS_RADIUS, OBS_RADIUS), (pad_x, pad_x))
    agent_layer = np.pad(agent_layer, padding, constant_values=0.0)
    wall_layer = np.pad(wall_layer, padding, constant_values=1.0)

    offsets = np.arange(-OBS_RADIUS, OBS_RADIUS + 1)
    rows = positions[:, 1, None] + OBS_RADIUS + offsets
    cols = positions[:, 0, None] + offsets
    cols = cols % grid.width if grid.periodic_x else cols + pad_x

    index = (rows[:, :, None], cols[:, None, :])
    window = np.stack([agent_layer[index], wall_layer[index]], axis=-1)
    return window.reshape(len(positions), OBS_DIM)


def observe(grid: MapSpec, agents: Sequence[AgentState], observer_id: int) -> np.ndarray:
    positions = np.array([a.position for a in agents], dtype=np.int64).reshape(-1, 2)
    ids = [a.id for a in agents]
    if observer_id not in ids:
        raise ValueError(f"Unknown observer {observer_id}")
    return observe_all(grid, positions)[ids.index(observer_id)]


def resolve_moves(grid: MapSpec, positions: np.ndarray, directions: np.ndarray,
                  actions: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simultaneous move resolution against the pre-move occupancy.

    A move succeeds iff its target is inside the map, not a wall, not occupied
    before the step and targeted by no other agent.

    Returns:
        (new positions (n, 2), rewards (n,), signed horizontal steps (n,))
    """
    positions = np.asarray(positions, dtype=np.int64).reshape(-1, 2)
    actions = np.asarray(actions, dtype=np.int64)
    height, width = grid.walls.shape
    x, y = positions[:, 0], positions[:, 1]
    dx, dy = _DISPLACEMENT_ARRAY[actions].T
    tx, ty = x + dx, y + dy

    valid = (ty >= 0) & (ty < height)
    if grid.periodic_x:
        tx = tx % width
    else:
        valid &= (tx >= 0) & (tx < width)

    flat = np.where(valid, ty * width + tx, 0)
    occupied = np.zeros(height * width, dtype=bool)
    occupied[y * width + x] = True
    counts = np.bincount(flat[valid], minlength=height * width)

    success = valid & ~grid.walls.ravel()[flat] & ~occupied[flat] & (counts[flat] == 1)

    new_positions = np.where(success[:, None], np.stack([tx, ty], axis=1), positions)
    steps = np.where(success, dx, 0)
    rewards = steps * np.asarray(directions, dtype=np.int64)
    return new_positions, rewards, steps


def move_intents(grid: MapSpec, agents: Sequence[AgentState], actions: Sequence[int]) -> List[MoveIntent]:
    intents = []
    for agent, action in zip(agents, actions):
        dx, dy = DISPLACEMENTS[Action(action)]
        x, y = agent.position[0] + dx, agent.position[1] + dy
        if grid.periodic_x:
            x %= grid.width
        intents.append(MoveIntent(agent.id, Action(action), (x, y)))
    return intents


def resolve_step(grid: MapSpec, agents: Sequence[AgentState],
                 intents: Sequence[MoveIntent]) -> Tuple[List[Tuple[int, int]], np.ndarray]:
    """Resolve one intent per agent as a pure function of (agents, intents).

    Raises:
        ContractViolation: On duplicate agent ids or a missing/extra intent.
    """
    ids = [a.id for a in agents]
    if len(set(ids)) != len(ids):
        raise ContractViolation(f"Duplicate agent ids in {ids}")
    by_agent = {}
    for intent in intents:
        if intent.agent_id in by_agent:
            raise ContractViolation(f"Agent {intent.agent_id} submitted more than one intent")
        by_agent[intent.agent_id] = intent
    if set(by_agent) != set(ids):
        raise ContractViolation("Every agent must submit exactly one intent")

    positions = np.array([a.position for a in agents], dtype=np.int64).reshape(-1, 2)
    directions = np.array([int(a.target_direction) for a in agents], dtype=np.int64)
    actions = np.array([int(by_agent[i].action) for i in ids], dtype=np.int64)
    new_positions, rewards, _ = resolve_moves(grid, positions, directions, actions)
    return [tuple(int(v) for v in p) for p in new_positions], rewards


class Environment:
    """Periodic grid world populated by pedestrian agents.

    Holds the dynamic state as arrays; ``agents`` materializes AgentState
    records on demand.
    """

    def __init__(self, scope: Scope):
        self.scope = scope
        self.grid = scope.grid
        self.initial_agents = place_agents_checkerboard(self.grid, scope.n_agent, scope.plan, scope.extent)
        self.group_ids = np.array([a.group_id for a in self.initial_agents], dtype=np.int64)
        self.directions = np.array([int(a.target_direction) for a in self.initial_agents], dtype=np.int64)
        self.reset()

    @property
    def n_agents(self) -> int:
        return len(self.initial_agents)

    @property
    def agents(self) -> List[AgentState]:
        return [
            AgentState(a.id, (int(p[0]), int(p[1])), a.group_id, a.target_direction, int(r))
            for a, p, r in zip(self.initial_agents, self.positions, self.cumulative_rewards)
        ]

    def reset(self) -> Environment:
        self.positions = np.array([a.position for a in self.initial_agents], dtype=np.int64).reshape(-1, 2)
        self.cumulative_rewards = np.zeros(self.n_agents, dtype=np.int64)
        self.displacements = np.zeros(self.n_agents, dtype=np.int64)
        self.t = 0
        return self

    def observe_all(self) -> np.ndarray:
        return observe_all(self.grid, self.positions)

    def observe(self, observer_id: int) -> np.ndarray:
        return self.observe_all()[observer_id]

    def step(self, actions) -> np.ndarray:
        self.positions, rewards, steps = resolve_moves(self.grid, self.positions, self.directions, actions)
        self.cumulative_rewards += rewards
        self.displacements += steps
        self.t += 1
        return rewards

    def signed_displacements(self) -> np.ndarray:
        """Net unwrapped horizontal displacement along each agent's target direction."""
        return self.displacements * self.directions
