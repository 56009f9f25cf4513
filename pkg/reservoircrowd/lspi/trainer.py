"""Least-squares policy iteration of ESN output rows.

Each learning group keeps accumulators A (d x d) and B (1 x d), d = n_res + 1,
that are updated once per episode, solved for the group's output row, and
then scaled by the forgetting factor.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve
from scipy.linalg.lapack import get_lapack_funcs

from reservoircrowd.utils.errors import ContractViolation, InvalidArgumentError, SingularAccumulatorError

logger = logging.getLogger(__name__)

CONDITION_WARNING = 1e12
CONDITION_LIMIT = 1e14
RESIDUAL_TOLERANCE = 1e-8


class GroupingMode(str, Enum):
    SHARED_WITHIN_GROUP = 'shared_within_group'
    INDEPENDENT = 'independent'
    SHARED_ACROSS_GROUPS = 'shared_across_groups'


@dataclass
class GroupMode:
    """Maps every agent to the accumulators it trains and reads.

    ``group_of[i]`` is the learning key of agent i. In the cross-group mode
    ``eta_g[i]`` is the one-hot tag of agent i's task group.
    """

    mode: GroupingMode
    group_of: np.ndarray
    eta_g: Optional[np.ndarray] = None

    @classmethod
    def build(cls, mode, task_groups: Sequence[int]) -> GroupMode:
        mode = GroupingMode(mode)
        task_groups = np.asarray(task_groups, dtype=np.int64)
        if mode is GroupingMode.SHARED_WITHIN_GROUP:
            return cls(mode, task_groups.copy())
        if mode is GroupingMode.INDEPENDENT:
            return cls(mode, np.arange(len(task_groups), dtype=np.int64))
        if np.any((task_groups < 0) | (task_groups > 1)):
            raise InvalidArgumentError("Cross-group sharing supports task groups 0 and 1 only")
        return cls(mode, np.zeros(len(task_groups), dtype=np.int64), np.eye(2)[task_groups])

    @property
    def keys(self) -> List[int]:
        return sorted(int(k) for k in np.unique(self.group_of))

    def members(self, key: int) -> np.ndarray:
        return np.flatnonzero(self.group_of == key)


@dataclass
class Accumulators:
    a_tilde: np.ndarray = field(repr=False)
    b_tilde: np.ndarray = field(repr=False)
    episodes_seen: int = 0
    group_id: int = 0

    @classmethod
    def initial(cls, dim: int, beta: float, group_id: int = 0) -> Accumulators:
        return cls(beta * np.eye(dim), np.zeros((1, dim)), 0, group_id)


@dataclass
class EpsilonSchedule:
    epsilon0: float = 1.0
    delta_epsilon: float = 0.95
    epsilon_min: float = 0.02
    epsilon: float = None

    def __post_init__(self):
        if self.epsilon is None:
            self.epsilon = self.epsilon0


@dataclass
class EpisodeTrace:
    """Augmented reservoir states x_hat(t) = (X(t); 1) and rewards of one agent."""

    x_hats: List[np.ndarray] = field(default_factory=list, repr=False)
    rewards: List[float] = field(default_factory=list)

    def __len__(self):
        return len(self.x_hats)


@dataclass
class EpisodeBatch:
    y1: np.ndarray
    y2: np.ndarray
    r: np.ndarray


def epsilon_greedy(q_values, epsilon: float, rng: np.random.Generator) -> int:
    """Pick the argmax with probability 1 - epsilon, a uniform random action otherwise.

    Ties go to the lowest index.
    """
    q_values = np.asarray(q_values)
    if q_values.size == 0:
        raise InvalidArgumentError("Cannot choose from an empty set of Q-values")
    if rng.random() < epsilon:
        return int(rng.integers(q_values.size))
    return int(np.argmax(q_values))


def epsilon_greedy_population(q_values: np.ndarray, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """One independent epsilon-greedy draw per row of ``q_values`` (n, |A|)."""
    q_values = np.asarray(q_values)
    if q_values.ndim != 2 or q_values.shape[1] == 0:
        raise InvalidArgumentError("Q-values must have shape (n, |A|) with |A| >= 1")
    explore = rng.random(q_values.shape[0]) < epsilon
    random_actions = rng.integers(q_values.shape[1], size=q_values.shape[0])
    return np.where(explore, random_actions, np.argmax(q_values, axis=1))


def record_step(trace: EpisodeTrace, x_hat: np.ndarray, reward: float) -> EpisodeTrace:
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x_hat.ndim != 1 or x_hat[-1] != 1.0:
        raise ContractViolation("Augmented reservoir state must be a vector ending in exactly 1")
    trace.x_hats.append(x_hat)
    trace.rewards.append(float(reward))
    return trace


def build_episode_batch(traces: Sequence[EpisodeTrace], gamma: float) -> EpisodeBatch:
    """Stack the traces of one group time-major.

    Rows of step t hold every member in order; the last |G| rows hold the
    terminal states.
    """
    lengths = {len(trace) for trace in traces}
    if len(lengths) != 1:
        raise InvalidArgumentError(f"Trace lengths differ within a group: {sorted(lengths)}")
    if lengths.pop() < 1:
        raise InvalidArgumentError("Traces must hold at least the terminal state")

    states = np.stack([np.stack(trace.x_hats) for trace in traces], axis=1)  # (T + 1, |G|, d)
    rewards = np.array([trace.rewards for trace in traces]).T  # (T + 1, |G|)
    if np.any(rewards[-1] != 0.0):
        raise ContractViolation("Reward after the end of the episode must be zero")

    dim = states.shape[-1]
    y2 = states.reshape(-1, dim)
    y1 = np.concatenate([states[:-1] - gamma * states[1:], states[-1:]]).reshape(-1, dim)
    return EpisodeBatch(y1, y2, rewards.reshape(-1, 1))


def finalize_episode(traces: Sequence[EpisodeTrace], accumulators: Accumulators, gamma: float) -> Accumulators:
    batch = build_episode_batch(traces, gamma)
    accumulators.a_tilde += batch.y1.T @ batch.y2
    accumulators.b_tilde += batch.r.T @ batch.y2
    accumulators.episodes_seen += 1
    return accumulators


def solve_output_weights(accumulators: Accumulators) -> np.ndarray:
    """Return W = B A^-1 as the solution of W A = B (A^T W^T = B^T).

    The inverse is never formed.

    Raises:
        SingularAccumulatorError: When the factorization fails or the 1-norm
            condition estimate of A exceeds 1e14.
    """
    a_tilde, b_tilde = accumulators.a_tilde, accumulators.b_tilde
    try:
        with warnings.catch_warnings():
            warnings.simplefilter('error', LinAlgWarning)
            lu, piv = lu_factor(a_tilde)
    except (LinAlgWarning, ValueError, np.linalg.LinAlgError) as error:
        raise SingularAccumulatorError(f"LU factorization of group {accumulators.group_id} failed: {error}") from error

    gecon, = get_lapack_funcs(('gecon',), (lu,))
    rcond, _ = gecon(lu, np.linalg.norm(a_tilde, 1), norm='1')
    condition = float('inf') if rcond == 0.0 else 1.0 / rcond
    logger.debug(f"Group {accumulators.group_id}: condition estimate of A is {condition:.3e}")
    if condition > CONDITION_LIMIT:
        raise SingularAccumulatorError(
            f"Accumulator of group {accumulators.group_id} is singular to working precision "
            f"(condition estimate {condition:.3e})", condition
        )
    if condition > CONDITION_WARNING:
        logger.warning(f"Group {accumulators.group_id}: ill-conditioned accumulator ({condition:.3e})")

    w_out = lu_solve((lu, piv), b_tilde.T, trans=1).T
    residual = np.max(np.abs(w_out @ a_tilde - b_tilde))
    if residual > RESIDUAL_TOLERANCE * max(np.max(np.abs(b_tilde)), np.finfo(float).tiny):
        logger.warning(f"Group {accumulators.group_id}: solve residual {residual:.3e} above tolerance")
    return w_out


def apply_forgetting(accumulators: Accumulators, lambda_: float) -> Accumulators:
    if not 0.0 < lambda_ <= 1.0:
        raise InvalidArgumentError(f"Forgetting factor must lie in (0, 1], got {lambda_}")
    accumulators.a_tilde *= lambda_
    accumulators.b_tilde *= lambda_
    return accumulators


def decay_epsilon(schedule: EpsilonSchedule) -> EpsilonSchedule:
    if schedule.epsilon > schedule.epsilon_min:
        schedule.epsilon *= schedule.delta_epsilon
    return schedule


def accumulator_memory_bytes(n_accumulators: int, n_res: int) -> int:
    return n_accumulators * (n_res + 1) ** 2 * np.dtype(np.float64).itemsize


class LSPITrainer:
    """Episode-end training block.

    Accumulate, solve and forget per learning group, then decay epsilon.
    """

    def __init__(self, group_mode: GroupMode, n_res: int, gamma: float, lambda_: float, beta: float,
                 schedule: EpsilonSchedule):
        self.group_mode = group_mode
        self.dim = n_res + 1
        self.gamma = gamma
        self.lambda_ = lambda_
        self.beta = beta
        self.schedule = schedule
        self.accumulators: Dict[int, Accumulators] = {
            key: Accumulators.initial(self.dim, beta, key) for key in group_mode.keys
        }

    @classmethod
    def from_settings(cls, lspi: dict, group_mode: GroupMode, n_res: int) -> LSPITrainer:
        schedule = EpsilonSchedule(lspi['epsilon0'], lspi['delta_epsilon'], lspi['epsilon_min'])
        return cls(group_mode, n_res, lspi['gamma'], lspi['lambda_'], lspi['beta'], schedule)

    def new_traces(self) -> List[EpisodeTrace]:
        return [EpisodeTrace() for _ in range(len(self.group_mode.group_of))]

    def end_episode(self, traces: Sequence[EpisodeTrace], weights) -> None:
        for key, accumulators in self.accumulators.items():
            members = self.group_mode.members(key)
            finalize_episode([traces[i] for i in members], accumulators, self.gamma)
            weights.set_output(key, solve_output_weights(accumulators))
            apply_forgetting(accumulators, self.lambda_)
        decay_epsilon(self.schedule)

    def state_dict(self) -> dict:
        arrays = {}
        for key, acc in self.accumulators.items():
            arrays[f'a_tilde_{key}'] = acc.a_tilde
            arrays[f'b_tilde_{key}'] = acc.b_tilde
        meta = {
            'epsilon': self.schedule.epsilon,
            'episodes_seen': {str(k): acc.episodes_seen for k, acc in self.accumulators.items()},
        }
        return {'arrays': arrays, 'meta': meta}

    def load_state_dict(self, arrays, meta: dict) -> None:
        for key, acc in self.accumulators.items():
            acc.a_tilde = np.array(arrays[f'a_tilde_{key}'], dtype=np.float64)
            acc.b_tilde = np.array(arrays[f'b_tilde_{key}'], dtype=np.float64)
            acc.episodes_seen = int(meta['episodes_seen'][str(key)])
        self.schedule.epsilon = float(meta['epsilon'])
