"""Desk-scale learning runs. Each takes minutes; run with ``pytest -m slow``."""
import numpy as np
import pytest

from reservoircrowd.metrics.diagram import trial_velocity
from reservoircrowd.runner import run_batch

pytestmark = pytest.mark.slow

LAST_EPISODES = 20


def desk_settings(make_settings, **overrides):
    return make_settings(n_res=256, p_s_res=0.9, t_max=500, n_trials=3, jobs=0, **overrides)


def final_velocity(result, n_episodes, group=None):
    window = (n_episodes - LAST_EPISODES + 1, n_episodes)
    return float(np.mean([trial_velocity(records, 500, window, group) for records in result.completed]))


@pytest.fixture(scope='module')
def task1_runs(make_settings):
    return {
        n: run_batch(desk_settings(make_settings, n_agent=n, n_episodes=120))
        for n in (12, 40)
    }


def test_task1_low_density_flows_fast(task1_runs):
    assert not task1_runs[12].failures
    assert final_velocity(task1_runs[12], 120) >= 0.6


def test_task1_velocity_drops_with_density(task1_runs):
    assert final_velocity(task1_runs[12], 120) > final_velocity(task1_runs[40], 120)


def test_task2_groups_form_lanes(make_settings):
    result = run_batch(desk_settings(make_settings, name='task2', n_agent=32, n_episodes=150))
    assert not result.failures
    for group in (0, 1):
        assert final_velocity(result, 150, group) > 0.25


def test_task2_jams_at_high_density(make_settings):
    v32 = final_velocity(run_batch(desk_settings(make_settings, name='task2', n_agent=32, n_episodes=150)), 150)
    v64 = final_velocity(run_batch(desk_settings(make_settings, name='task2', n_agent=64, n_episodes=150)), 150)
    assert v64 < 0.5 * v32
