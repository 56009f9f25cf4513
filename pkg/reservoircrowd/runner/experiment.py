"""Training loop: episodes, trials and batches of independent trials."""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from reservoircrowd.environment import Environment, Scope
from reservoircrowd.esn import (
    SparsityProfile,
    WeightBundle,
    augment,
    commit_population,
    evaluate_population,
)
from reservoircrowd.lspi import GroupingMode, GroupMode, LSPITrainer, epsilon_greedy_population, record_step
from reservoircrowd.metrics.curves import LearningCurve, learning_curve
from reservoircrowd.utils import files, helper, paths

from . import checkpoint

logger = logging.getLogger(__name__)

RECORDS_CSV = 'records.csv'
RECORDS_JSON = 'records.json'


@dataclass
class TrialConfig:
    task: str
    n_agent: int
    n_episodes: int
    t_max: int
    group_mode: str
    hyperparameters: dict
    master_seed: int
    n_trials: int
    settings: dict = field(repr=False)

    @classmethod
    def from_settings(cls, settings: dict) -> TrialConfig:
        return cls(
            task=settings['task']['name'],
            n_agent=settings['task']['n_agent'],
            n_episodes=settings['run']['n_episodes'],
            t_max=settings['task']['t_max'],
            group_mode=settings['lspi']['group_mode'],
            hyperparameters={**settings['esn'], **settings['lspi']},
            master_seed=settings['run']['master_seed'],
            n_trials=settings['run']['n_trials'],
            settings=settings,
        )


@dataclass
class EpisodeRecord:
    episode_index: int
    rewards: List[int]
    epsilon: float
    group_means: Dict[int, float]
    displacements: List[int]
    duration: float = 0.0

    @property
    def mean(self) -> float:
        return float(np.mean(self.rewards))

    @property
    def best(self) -> float:
        return float(np.max(self.rewards))

    @property
    def worst(self) -> float:
        return float(np.min(self.rewards))

    def to_dict(self) -> dict:
        return {
            'episode_index': self.episode_index,
            'rewards': [int(r) for r in self.rewards],
            'epsilon': float(self.epsilon),
            'group_means': {str(k): float(v) for k, v in self.group_means.items()},
            'displacements': [int(d) for d in self.displacements],
            'duration': float(self.duration),
        }

    @classmethod
    def from_dict(cls, data: dict) -> EpisodeRecord:
        return cls(
            episode_index=int(data['episode_index']),
            rewards=[int(r) for r in data['rewards']],
            epsilon=float(data['epsilon']),
            group_means={int(k): float(v) for k, v in data['group_means'].items()},
            displacements=[int(d) for d in data['displacements']],
            duration=float(data.get('duration', 0.0)),
        )


def record_header(n_agent: int, groups) -> List[str]:
    return (['episode', 'epsilon', 'mean', 'best', 'worst']
            + [f'group_{g}_mean' for g in groups]
            + [f'agent_{i}' for i in range(n_agent)])


def record_row(record: EpisodeRecord) -> list:
    return ([record.episode_index, float(record.epsilon), record.mean, record.best, record.worst]
            + [record.group_means[g] for g in sorted(record.group_means)]
            + [int(r) for r in record.rewards])


def run_episode(env: Environment, weights: WeightBundle, states: np.ndarray, trainer: LSPITrainer,
                rng: np.random.Generator, episode_index: int = 1, log_positions: bool = False):
    """Run one episode of t_max steps.

    The terminal reservoir step and the episode-end training block follow the
    last move.

    Returns:
        (EpisodeRecord, positions (t_max + 1, n, 2) int16 or None)
    """
    start = time.perf_counter()
    t_max = env.scope.t_max
    group_mode = trainer.group_mode
    epsilon = trainer.schedule.epsilon
    traces = trainer.new_traces()
    positions = np.zeros((t_max + 1, env.n_agents, 2), dtype=np.int16) if log_positions else None

    def act(states):
        q_values, candidates = evaluate_population(env.observe_all(), states, weights,
                                                   group_mode.group_of, group_mode.eta_g)
        actions = epsilon_greedy_population(q_values, epsilon, rng)
        return actions, commit_population(candidates, actions)

    for t in range(t_max):
        actions, states = act(states)
        if log_positions:
            positions[t] = env.positions
        rewards = env.step(actions)
        x_hats = augment(states)
        for i, trace in enumerate(traces):
            record_step(trace, x_hats[i], rewards[i])

    # Terminal state: an action is still selected to fix X(t_max); the
    # environment does not move and the reward is zero.
    _, states = act(states)
    x_hats = augment(states)
    for i, trace in enumerate(traces):
        record_step(trace, x_hats[i], 0.0)
    if log_positions:
        positions[t_max] = env.positions

    trainer.end_episode(traces, weights)

    rewards = env.cumulative_rewards.copy()
    group_means = {int(g): float(rewards[env.group_ids == g].mean()) for g in np.unique(env.group_ids)}
    record = EpisodeRecord(episode_index, rewards.tolist(), epsilon, group_means,
                           env.signed_displacements().tolist(), time.perf_counter() - start)
    return record, positions


class Trial:
    """One independent training run.

    Fixed weights, trainer and policy stream derive from (master_seed, trial_index).
    """

    def __init__(self, config: TrialConfig, trial_index: int = 0):
        self.config = config
        self.trial_index = trial_index
        self.seed = helper.trial_seed(config.master_seed, trial_index)
        settings = config.settings

        self.env = Environment(Scope(settings))
        self.group_mode = GroupMode.build(config.group_mode, self.env.group_ids)
        self.weights = WeightBundle.generate(
            SparsityProfile.from_settings(settings['esn']), settings['esn']['n_res'], settings['esn']['alpha'],
            self.seed, output_keys=self.group_mode.keys,
            with_group_input=self.group_mode.mode is GroupingMode.SHARED_ACROSS_GROUPS,
        )
        self.trainer = LSPITrainer.from_settings(settings['lspi'], self.group_mode, settings['esn']['n_res'])
        self.rng = helper.stream(self.seed, 'policy')
        self.records: List[EpisodeRecord] = []

    @property
    def episodes_completed(self) -> int:
        return len(self.records)

    def restore(self, trial_path) -> None:
        arrays, meta, weights = checkpoint.load_checkpoint(trial_path)
        self.weights = weights
        self.trainer.load_state_dict(arrays, meta)
        self.rng.bit_generator.state = meta['rng_state']
        self.records = [EpisodeRecord.from_dict(r) for r in meta['records']]
        logger.info(f"Trial {self.trial_index}: resumed after episode {self.episodes_completed}")

    def run(self, trial_path: Optional[Path] = None) -> List[EpisodeRecord]:
        run_settings = self.config.settings['run']
        log_trajectories = run_settings['log_trajectories'] and trial_path is not None
        level = logging.INFO if run_settings['verbose'] else logging.DEBUG
        n_res = self.weights.n_res

        for episode_index in range(self.episodes_completed + 1, self.config.n_episodes + 1):
            self.env.reset()
            states = np.zeros((self.env.n_agents, n_res))
            record, positions = run_episode(self.env, self.weights, states, self.trainer, self.rng,
                                            episode_index, log_trajectories)
            self.records.append(record)
            logger.log(level, f"Trial {self.trial_index} episode {episode_index}: mean reward {record.mean:.2f} "
                              f"(best {record.best:.0f}, worst {record.worst:.0f}), epsilon {record.epsilon:.4f}")
            if positions is not None:
                save_trajectory(paths.trajectory_file(trial_path, episode_index), positions, self.env.group_ids)
            if trial_path is not None and episode_index % run_settings['checkpoint_interval'] == 0:
                checkpoint.save_checkpoint(trial_path, self.trainer, self.weights, self.rng,
                                           episode_index, self.records)

        if trial_path is not None:
            checkpoint.save_checkpoint(trial_path, self.trainer, self.weights, self.rng,
                                       self.episodes_completed, self.records)
            write_records(trial_path, self.records, self.env.n_agents, sorted(np.unique(self.env.group_ids)))
        return self.records


def save_trajectory(file_path: Path, positions: np.ndarray, group_ids: np.ndarray) -> None:
    file_path.parent.mkdir(parents=True, exist_ok=True)
    try:
        np.savez_compressed(file_path, positions=positions, group_ids=group_ids.astype(np.int16))
    except OSError as error:
        raise OSError(f"Could not write trajectory log {file_path}: {error}") from error


def write_records(trial_path: Path, records: List[EpisodeRecord], n_agent: int, groups) -> None:
    files.write_rows_to_csv([record_row(r) for r in records], trial_path / RECORDS_CSV,
                            header=record_header(n_agent, [int(g) for g in groups]))
    files.write_json([r.to_dict() for r in records], trial_path / RECORDS_JSON)


def read_records(trial_path: Path) -> List[EpisodeRecord]:
    return [EpisodeRecord.from_dict(r) for r in files.read_json(Path(trial_path) / RECORDS_JSON)]


def trial_complete(trial_path: Path, n_episodes: int) -> bool:
    if not (Path(trial_path) / RECORDS_JSON).exists():
        return False
    return len(files.read_json(Path(trial_path) / RECORDS_JSON)) == n_episodes


def run_trial(settings: dict, trial_index: int = 0, run_dir=None, resume: bool = False) -> List[EpisodeRecord]:
    """Run or resume one trial.

    Records and checkpoints go under ``run_dir/trial_NNN`` when ``run_dir`` is given.
    """
    config = TrialConfig.from_settings(settings)
    trial_path = None
    if run_dir is not None:
        trial_path = paths.trial_dir(run_dir, trial_index)
        trial_path.mkdir(parents=True, exist_ok=True)
        if resume and trial_complete(trial_path, config.n_episodes):
            logger.info(f"Trial {trial_index}: already complete")
            return read_records(trial_path)
    trial = Trial(config, trial_index)
    if resume and trial_path is not None and checkpoint.has_checkpoint(trial_path):
        trial.restore(trial_path)
    return trial.run(trial_path)


@dataclass
class BatchResult:
    trials: Dict[int, List[EpisodeRecord]]
    failures: Dict[int, str]
    seeds: Dict[int, str]

    @property
    def completed(self) -> List[List[EpisodeRecord]]:
        return [self.trials[i] for i in sorted(self.trials)]

    def aggregate(self) -> LearningCurve:
        """Mean and standard error per episode over the completed trials."""
        if self.failures:
            logger.warning(f"Aggregate over {len(self.trials)} completed trials, {len(self.failures)} failed")
        return learning_curve(self.completed)


def _run_trial_worker(settings, trial_index, run_dir, resume):
    return trial_index, run_trial(settings, trial_index, run_dir, resume)


def run_batch(settings: dict, run_dir=None, jobs: Optional[int] = None, resume: bool = False) -> BatchResult:
    """Run n_trials independent trials, seeds split from master_seed.

    ``jobs`` bounds the number of worker processes (default: run.jobs); 0 uses
    every available core and 1 runs the trials inline. A failing trial is
    reported and the remaining trials still complete.
    """
    config = TrialConfig.from_settings(settings)
    n_trials = config.n_trials
    if n_trials < 1:
        raise ValueError("n_trials must be at least 1")
    if jobs is None:
        jobs = settings['run']['jobs']
    jobs = jobs or os.cpu_count() or 1
    seeds = {i: helper.trial_seed_label(helper.trial_seed(config.master_seed, i)) for i in range(n_trials)}
    trials, failures = {}, {}

    if jobs == 1 or n_trials == 1:
        for i in range(n_trials):
            try:
                trials[i] = run_trial(settings, i, run_dir, resume)
            except Exception as error:
                logger.error(f"Trial {i} failed: {error!r}")
                failures[i] = repr(error)
    else:
        with ProcessPoolExecutor(max_workers=min(jobs, n_trials)) as executor:
            futures = {executor.submit(_run_trial_worker, settings, i, run_dir, resume): i for i in range(n_trials)}
            for future in as_completed(futures):
                i = futures[future]
                try:
                    trials[i] = future.result()[1]
                except Exception as error:
                    logger.error(f"Trial {i} failed: {error!r}")
                    failures[i] = repr(error)

    if failures:
        logger.warning(f"{len(failures)} of {n_trials} trials failed; aggregates use {len(trials)} completed trials")
    return BatchResult(trials, failures, seeds)
