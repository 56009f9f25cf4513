"""Average velocity, average density and fundamental-diagram points."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from reservoircrowd.environment.gridmap import MapSpec
from reservoircrowd.utils.errors import InvalidArgumentError

from .curves import standard_error

MEASUREMENT_EPISODES = 100
MEASUREMENT_START = 100


@dataclass(frozen=True)
class FundamentalPoint:
    n_agent: int
    rho_bar: float
    v_bar: float
    se: float
    group: Optional[int] = None

    def __post_init__(self):
        if not 0.0 <= self.rho_bar <= 1.0:
            raise InvalidArgumentError(f"Average density must lie in [0, 1], got {self.rho_bar}")
        if self.v_bar > 1.0 + 1e-12:
            raise InvalidArgumentError(f"Average velocity cannot exceed 1, got {self.v_bar}")


def average_velocity(mean_episode_reward, t_max: int):
    if t_max <= 0:
        raise InvalidArgumentError(f"t_max must be positive, got {t_max}")
    return mean_episode_reward / t_max


def velocity_from_displacements(displacements, t_max: int) -> float:
    """Average velocity from net unwrapped displacements.

    Displacements are measured along each agent's target direction.
    """
    return average_velocity(float(np.mean(displacements)), t_max)


def average_density(n_agent: int, grid: MapSpec) -> float:
    if grid.walkable_count < 1:
        raise InvalidArgumentError(f"Map '{grid.name}' has no walkable cell")
    return n_agent / grid.walkable_count


def default_episode_window(n_episodes: int) -> Tuple[int, int]:
    """The last hundred episodes (151-250 of a 250-episode run), inclusive."""
    return max(1, n_episodes - MEASUREMENT_EPISODES + 1), n_episodes


def default_time_window(t_max: int) -> Tuple[int, int]:
    """Time window of steps 100..t_max-1, inclusive."""
    return min(MEASUREMENT_START, t_max - 1), t_max - 1


def select_episodes(records: Sequence, episode_window: Tuple[int, int]) -> list:
    first, last = episode_window
    if first > last:
        raise InvalidArgumentError(f"Empty episode window {episode_window}")
    return [r for r in records if first <= r.episode_index <= last]


def trial_velocity(records: Sequence, t_max: int, episode_window: Tuple[int, int],
                   group: Optional[int] = None) -> float:
    selected = select_episodes(records, episode_window)
    if not selected:
        raise InvalidArgumentError(f"No recorded episode inside window {episode_window}")
    if group is None:
        rewards = [r.mean for r in selected]
    else:
        rewards = [r.group_means[group] for r in selected]
    return average_velocity(float(np.mean(rewards)), t_max)


def fundamental_point(trials: Sequence[Sequence], n_agent: int, grid: MapSpec, t_max: int,
                      episode_window: Optional[Tuple[int, int]] = None,
                      group: Optional[int] = None) -> FundamentalPoint:
    """One point of the fundamental diagram.

    Density of the run against its velocity averaged over the episode window
    of every trial.
    """
    if len(trials) == 0:
        raise InvalidArgumentError("A fundamental-diagram point needs at least one trial")
    if episode_window is None:
        episode_window = default_episode_window(min(len(records) for records in trials))
    velocities = np.array([trial_velocity(records, t_max, episode_window, group) for records in trials])
    return FundamentalPoint(n_agent, average_density(n_agent, grid), float(velocities.mean()),
                            float(standard_error(velocities[:, None])[0]), group)
