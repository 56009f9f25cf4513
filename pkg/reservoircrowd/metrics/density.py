"""Density colormaps and occupancy snapshots from trajectory logs."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Tuple

import numpy as np

from reservoircrowd.environment.gridmap import MapSpec
from reservoircrowd.utils import paths
from reservoircrowd.utils.errors import InvalidArgumentError, TrajectoryLogMissingError

logger = logging.getLogger(__name__)

WALL = -1
VACANT = 0


@dataclass
class DensityMap:
    """Mean occupancy per cell and group, shape (groups, height, width)."""

    occupancy: np.ndarray
    groups: Tuple[int, ...]
    time_window: Tuple[int, int]
    episode_window: Tuple[int, int]
    n_snapshots: int

    def group(self, group_id: int) -> np.ndarray:
        return self.occupancy[self.groups.index(group_id)]

    def totals(self) -> np.ndarray:
        return self.occupancy.sum(axis=(1, 2))


def occupancy_counts(positions: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    counts = np.zeros(shape, dtype=np.int64)
    positions = np.asarray(positions)
    np.add.at(counts, (positions[:, 1], positions[:, 0]), 1)
    return counts


def accumulate_density(snapshots: Iterable[Tuple[int, np.ndarray, np.ndarray]], shape: Tuple[int, int],
                       time_window: Tuple[int, int], episode_window: Tuple[int, int]) -> DensityMap:
    """Average group occupancy per cell over both windows.

    In:
        snapshots: (episode_index, positions (t_max + 1, n, 2), group_ids (n,)) per episode
        shape: (height, width) of the map
        time_window, episode_window: inclusive (first, last)
    Out:
        density: (DensityMap) mean indicator of group occupancy per cell
    """
    t0, t1 = time_window
    e0, e1 = episode_window
    if t0 > t1 or e0 > e1 or t0 < 0:
        raise InvalidArgumentError(f"Empty window: time {time_window}, episodes {episode_window}")

    sums, groups, n_snapshots = None, None, 0
    for episode_index, positions, group_ids in snapshots:
        if not e0 <= episode_index <= e1:
            continue
        if t1 >= len(positions):
            raise InvalidArgumentError(f"Time window {time_window} exceeds the {len(positions) - 1} recorded steps")
        if groups is None:
            groups = tuple(int(g) for g in np.unique(group_ids))
            sums = np.zeros((len(groups),) + tuple(shape), dtype=np.int64)
        window = np.asarray(positions[t0:t1 + 1], dtype=np.int64)
        for k, g in enumerate(groups):
            members = window[:, np.asarray(group_ids) == g].reshape(-1, 2)
            np.add.at(sums[k], (members[:, 1], members[:, 0]), 1)
        n_snapshots += t1 - t0 + 1

    if n_snapshots == 0:
        raise InvalidArgumentError(f"No snapshot inside time {time_window} and episodes {episode_window}")
    return DensityMap(sums / n_snapshots, groups, (t0, t1), (e0, e1), n_snapshots)


def load_trajectory(trial_path, episode_index: int) -> Tuple[np.ndarray, np.ndarray]:
    file_path = paths.trajectory_file(trial_path, episode_index)
    if not file_path.exists():
        raise TrajectoryLogMissingError(
            f"Trajectory log {file_path} not found; rerun with --log-trajectories to record positions"
        )
    with np.load(file_path) as data:
        return data['positions'], data['group_ids']


def iter_trajectories(trial_path, episode_window: Tuple[int, int]) -> Iterator[Tuple[int, np.ndarray, np.ndarray]]:
    for episode_index in range(episode_window[0], episode_window[1] + 1):
        positions, group_ids = load_trajectory(trial_path, episode_index)
        yield episode_index, positions, group_ids


def density_from_logs(trial_paths: Iterable[Path], grid: MapSpec, time_window: Tuple[int, int],
                      episode_window: Tuple[int, int]) -> DensityMap:
    """Density averaged over the given trials' logged episodes."""
    def snapshots():
        for trial_path in trial_paths:
            logger.debug(f"Reading trajectories of {trial_path}")
            yield from iter_trajectories(trial_path, episode_window)
    return accumulate_density(snapshots(), grid.walls.shape, time_window, episode_window)


def snapshot(trial_path, episode_index: int, t: int, grid: MapSpec) -> np.ndarray:
    """Cell labels of the configuration before step t.

    Labels are WALL, VACANT, or group id + 1 for an occupied cell.
    """
    positions, group_ids = load_trajectory(trial_path, episode_index)
    if not 0 <= t < len(positions):
        raise InvalidArgumentError(f"Step {t} outside the recorded range [0, {len(positions) - 1}]")
    labels = np.where(grid.walls, WALL, VACANT).astype(np.int64)
    frame = np.asarray(positions[t], dtype=np.int64)
    labels[frame[:, 1], frame[:, 0]] = np.asarray(group_ids, dtype=np.int64) + 1
    return labels
