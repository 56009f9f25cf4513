"""Learning curves aggregated over independent trials."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from reservoircrowd.utils.errors import InvalidArgumentError

logger = logging.getLogger(__name__)


@dataclass
class LearningCurve:
    """Per-episode mean/best/worst reward averaged over trials.

    Each comes with its standard error across trials. ``unit`` is 'reward' for
    totals per episode or 'velocity' once divided by t_max.
    """

    episodes: np.ndarray
    mean: np.ndarray
    best: np.ndarray
    worst: np.ndarray
    se_mean: np.ndarray
    se_best: np.ndarray
    se_worst: np.ndarray
    n_trials: int
    unit: str = 'reward'

    def __post_init__(self):
        slack = 1e-9 * max(1.0, float(np.max(np.abs(self.best), initial=0.0)))
        if np.any(self.best + slack < self.mean) or np.any(self.mean + slack < self.worst):
            raise InvalidArgumentError("Learning curve violates best >= mean >= worst")

    def __len__(self):
        return len(self.episodes)

    @property
    def single_trial(self) -> bool:
        """Standard errors are reported as 0 when only one trial exists."""
        return self.n_trials == 1

    def as_velocity(self, t_max: int) -> LearningCurve:
        if t_max <= 0:
            raise InvalidArgumentError(f"t_max must be positive, got {t_max}")
        return LearningCurve(self.episodes, self.mean / t_max, self.best / t_max, self.worst / t_max,
                             self.se_mean / t_max, self.se_best / t_max, self.se_worst / t_max,
                             self.n_trials, unit='velocity')

    def rows(self):
        for i in range(len(self)):
            yield [int(self.episodes[i]), float(self.mean[i]), float(self.best[i]), float(self.worst[i]),
                   float(self.se_mean[i]), float(self.se_best[i]), float(self.se_worst[i])]


def standard_error(values: np.ndarray) -> np.ndarray:
    """Sample standard deviation across trials (axis 0) over sqrt(n_trials)."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if n < 2:
        return np.zeros(values.shape[1:])
    return values.std(axis=0, ddof=1) / np.sqrt(n)


def learning_curve(trials: Sequence[Sequence], group_ids: Optional[np.ndarray] = None,
                   group: Optional[int] = None) -> LearningCurve:
    """Aggregate per-episode statistics over trials.

    In:
        trials: one EpisodeRecord list per completed trial
        group_ids, group: restrict the statistics to the agents of one group
    Out:
        curve: (LearningCurve) over the episodes every trial completed
    """
    if len(trials) == 0:
        raise InvalidArgumentError("A learning curve needs at least one trial")
    n_episodes = min(len(records) for records in trials)
    if any(len(records) != n_episodes for records in trials):
        logger.warning(f"Trials differ in length; the curve covers the first {n_episodes} episodes")
    if n_episodes == 0:
        empty = np.zeros(0)
        return LearningCurve(np.zeros(0, dtype=np.int64), empty, empty, empty, empty, empty, empty, len(trials))

    rewards = np.array([[r.rewards for r in records[:n_episodes]] for records in trials], dtype=np.float64)
    if group is not None:
        if group_ids is None:
            raise InvalidArgumentError("Group statistics need the agents' group ids")
        rewards = rewards[:, :, np.asarray(group_ids) == group]
        if rewards.shape[2] == 0:
            raise InvalidArgumentError(f"No agent belongs to group {group}")

    means, bests, worsts = rewards.mean(axis=2), rewards.max(axis=2), rewards.min(axis=2)
    episodes = np.array([r.episode_index for r in trials[0][:n_episodes]], dtype=np.int64)
    return LearningCurve(episodes, means.mean(axis=0), bests.mean(axis=0), worsts.mean(axis=0),
                         standard_error(means), standard_error(bests), standard_error(worsts), len(trials))
