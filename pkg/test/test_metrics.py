import numpy as np
import pytest

from reservoircrowd import metrics
from reservoircrowd.environment import Environment, Scope, read_map
from reservoircrowd.metrics.density import load_trajectory
from reservoircrowd.metrics.diagram import select_episodes, trial_velocity
from reservoircrowd.runner import EpisodeRecord
from reservoircrowd.utils import paths
from reservoircrowd.utils.errors import InvalidArgumentError, TrajectoryLogMissingError

TASK1 = read_map(paths.task1_map)
TASK2 = read_map(paths.task2_map)


def record(episode, rewards, group_ids=None):
    rewards = list(rewards)
    group_ids = np.zeros(len(rewards), dtype=int) if group_ids is None else np.asarray(group_ids)
    means = {int(g): float(np.mean(np.asarray(rewards)[group_ids == g])) for g in np.unique(group_ids)}
    return EpisodeRecord(episode, rewards, 0.5, means, rewards)


@pytest.mark.parametrize('reward, expected', [(400, 0.8), (500, 1.0), (0, 0.0)])
def test_average_velocity(reward, expected):
    assert metrics.average_velocity(reward, 500) == pytest.approx(expected)


def test_average_velocity_needs_positive_horizon():
    with pytest.raises(InvalidArgumentError):
        metrics.average_velocity(1, 0)


@pytest.mark.parametrize('grid, n_agent, expected', [(TASK1, 12, 0.0625), (TASK2, 32, 0.2), (TASK2, 64, 0.4)])
def test_average_density(grid, n_agent, expected):
    assert metrics.average_density(n_agent, grid) == pytest.approx(expected)


def test_velocity_from_rewards_equals_velocity_from_displacements(make_settings):
    env = Environment(Scope(make_settings(name='task2', n_agent=32)))
    rng = np.random.default_rng(0)
    for _ in range(300):
        env.step(rng.choice(4, size=32, p=[0.1, 0.1, 0.6, 0.2]))
    by_reward = metrics.average_velocity(env.cumulative_rewards.mean(), 300)
    assert by_reward == pytest.approx(metrics.velocity_from_displacements(env.signed_displacements(), 300))


def test_static_agent_density():
    positions = np.tile([[3, 2]], (11, 1, 1))
    density = metrics.accumulate_density([(1, positions, np.array([0]))], (8, 20), (0, 10), (1, 1))
    expected = np.zeros((8, 20))
    expected[2, 3] = 1.0
    assert np.array_equal(density.group(0), expected)
    assert density.n_snapshots == 11


def test_oscillating_agent_density():
    positions = np.array([[[0, 0]], [[1, 0]]] * 3)
    density = metrics.accumulate_density([(1, positions, np.array([0]))], (2, 2), (0, 3), (1, 1))
    assert density.group(0)[0].tolist() == [0.5, 0.5]


def test_density_is_conserved_per_group():
    rng = np.random.default_rng(1)
    snapshots = []
    for episode in range(1, 6):
        frames = [rng.permutation(160)[:10] for _ in range(21)]
        positions = np.array([[[c % 20, c // 20] for c in frame] for frame in frames])
        snapshots.append((episode, positions, np.array([0] * 6 + [1] * 4)))
    density = metrics.accumulate_density(snapshots, (8, 20), (5, 20), (2, 4))
    assert density.groups == (0, 1)
    assert np.allclose(density.totals(), [6.0, 4.0])
    assert density.n_snapshots == 3 * 16


def test_density_window_errors():
    positions = np.zeros((5, 1, 2), dtype=int)
    with pytest.raises(InvalidArgumentError):
        metrics.accumulate_density([(1, positions, np.array([0]))], (2, 2), (3, 2), (1, 1))
    with pytest.raises(InvalidArgumentError):
        metrics.accumulate_density([(1, positions, np.array([0]))], (2, 2), (0, 4), (2, 3))
    with pytest.raises(InvalidArgumentError):
        metrics.accumulate_density([(1, positions, np.array([0]))], (2, 2), (0, 5), (1, 1))


def test_missing_trajectory_logs_point_to_flag(tmp_path):
    with pytest.raises(TrajectoryLogMissingError, match='--log-trajectories'):
        load_trajectory(tmp_path, 1)


def test_learning_curve_aggregates_trials():
    trials = [[record(1, [2, 4]), record(2, [6, 0])], [record(1, [0, 0]), record(2, [10, 2])]]
    curve = metrics.learning_curve(trials)
    assert curve.episodes.tolist() == [1, 2]
    assert curve.mean.tolist() == [1.5, 4.5]
    assert curve.best.tolist() == [2.0, 8.0]
    assert curve.worst.tolist() == [1.0, 1.0]
    assert curve.se_mean == pytest.approx([np.std([3, 0], ddof=1) / np.sqrt(2), np.std([3, 6], ddof=1) / np.sqrt(2)])
    assert not curve.single_trial


def test_identical_trials_have_zero_error():
    trials = [[record(1, [3, 5])] for _ in range(8)]
    curve = metrics.learning_curve(trials)
    assert not curve.se_mean.any() and not curve.se_best.any()


def test_group_curve():
    trials = [[record(1, [4, 2, -1], [0, 0, 1])]]
    curve = metrics.learning_curve(trials, np.array([0, 0, 1]), 1)
    assert curve.mean.tolist() == [-1.0]
    assert curve.single_trial
    velocity = curve.as_velocity(10)
    assert velocity.mean.tolist() == [-0.1]
    assert velocity.unit == 'velocity'


def test_default_windows():
    assert metrics.default_episode_window(250) == (151, 250)
    assert metrics.default_episode_window(30) == (1, 30)
    assert metrics.default_time_window(500) == (100, 499)
    assert metrics.default_time_window(5) == (4, 4)


def test_fundamental_point_uses_last_hundred_episodes():
    trials = [[record(e, [500 if e > 150 else 0] * 12) for e in range(1, 251)] for _ in range(8)]
    assert len(select_episodes(trials[0], metrics.default_episode_window(250))) == 100
    point = metrics.fundamental_point(trials, 12, TASK1, 500)
    assert point.v_bar == pytest.approx(1.0)
    assert point.rho_bar == pytest.approx(0.0625)
    assert point.se == 0.0


def test_group_velocity():
    records = [record(1, [10, 20, -5, -15], [0, 0, 1, 1])]
    assert trial_velocity(records, 10, (1, 1), group=0) == pytest.approx(1.5)
    assert trial_velocity(records, 10, (1, 1), group=1) == pytest.approx(-1.0)


def test_empty_curve_writes_header_only(tmp_path):
    curve = metrics.learning_curve([[]])
    written = metrics.emit(curve, tmp_path / 'curve.csv')
    assert (tmp_path / 'curve.csv').read_text() == 'episode,mean,best,worst,se_mean,se_best,se_worst\n'
    assert written[1].name == 'curve.json'


def test_curve_round_trip(tmp_path):
    trials = [[record(1, [1, 2, 7]), record(2, [3, 3, 3])], [record(1, [0, 1, 2]), record(2, [5, 9, 1])]]
    curve = metrics.learning_curve(trials)
    metrics.emit(curve, tmp_path / 'curve.csv', sidecar={'config_hash': 'abc'})
    again = metrics.read_curve(tmp_path / 'curve.csv')
    for name in ('episodes', 'mean', 'best', 'worst', 'se_mean', 'se_best', 'se_worst'):
        assert np.array_equal(getattr(again, name), getattr(curve, name))
    assert again.n_trials == 2


def test_diagram_round_trip(tmp_path):
    points = [metrics.FundamentalPoint(40, 40 / 192, 0.31, 0.02), metrics.FundamentalPoint(12, 0.0625, 0.9, 0.01)]
    metrics.emit(points, tmp_path / 'diagram.csv')
    again = metrics.read_diagram(tmp_path / 'diagram.csv')
    assert [p.n_agent for p in again] == [12, 40]
    assert again == sorted(points, key=lambda p: p.n_agent)


def test_density_round_trip_and_pgm_scaling(tmp_path):
    occupancy = np.zeros((2, 3, 4))
    occupancy[0, 1, 2] = 0.75
    occupancy[0, 0, 0] = 0.25
    density = metrics.DensityMap(occupancy, (0, 1), (100, 499), (151, 250), 400)
    written = metrics.emit(density, tmp_path / 'density.csv', sidecar={'seeds': {'0': '0:0'}})
    assert {p.name for p in written} == {'density_group0.csv', 'density_group0.pgm', 'density_group1.csv',
                                         'density_group1.pgm', 'density.json'}
    again = metrics.read_density(tmp_path / 'density.csv')
    assert np.array_equal(again.occupancy, occupancy)
    assert again.time_window == (100, 499) and again.episode_window == (151, 250)

    pixels = metrics.read_pgm(tmp_path / 'density_group0.pgm')
    assert pixels.shape == (3, 4)
    assert pixels[1, 2] == 65535 and pixels.max() == 65535
    assert pixels[0, 0] == round(65535 / 3)
    assert not metrics.read_pgm(tmp_path / 'density_group1.pgm').any()
    assert (tmp_path / 'density_group0.pgm').read_bytes().startswith(b'P5\n4 3\n65535\n')


def test_emit_rejects_unknown_artifacts(tmp_path):
    with pytest.raises(InvalidArgumentError):
        metrics.emit({'a': 1}, tmp_path / 'x.csv')
