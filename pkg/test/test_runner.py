import numpy as np
import pytest

from reservoircrowd.runner import EpisodeRecord, Trial, TrialConfig, read_records, run_batch, run_episode, run_trial
from reservoircrowd.runner import checkpoint, experiment
from reservoircrowd.esn import WeightBundle
from reservoircrowd.utils import files, paths


def strip(records):
    return [(r.episode_index, r.rewards, r.epsilon, r.group_means, r.displacements) for r in records]


OUTPUT_KEYS = {
    'shared_within_group': [0, 1],
    'independent': [0, 1, 2, 3],
    'shared_across_groups': [0],
}


def test_single_step_episode_records_two_states(make_settings, monkeypatch):
    calls = []
    original = experiment.record_step

    def counting(trace, x_hat, reward):
        calls.append(reward)
        return original(trace, x_hat, reward)

    monkeypatch.setattr(experiment, 'record_step', counting)
    trial = Trial(TrialConfig.from_settings(make_settings(n_agent=1, t_max=1)))
    states = np.zeros((1, trial.weights.n_res))
    record, positions = run_episode(trial.env, trial.weights, states, trial.trainer, trial.rng)
    assert len(calls) == 2 and calls[-1] == 0.0
    assert trial.env.t == 1
    assert positions is None
    assert trial.trainer.accumulators[0].episodes_seen == 1
    assert record.epsilon == 1.0
    assert trial.trainer.schedule.epsilon == pytest.approx(0.95)


def test_runs_are_reproducible(make_settings):
    settings = make_settings(n_episodes=4)
    assert strip(run_trial(settings)) == strip(run_trial(settings))


def test_trials_use_their_own_seeds(make_settings):
    settings = make_settings(n_agent=6, t_max=20, n_episodes=2)
    first = run_trial(settings, trial_index=0)
    second = run_trial(settings, trial_index=1)
    assert strip(first) != strip(second)


def test_zero_episodes(make_settings):
    assert run_trial(make_settings(n_episodes=0)) == []


def test_epsilon_trace(make_settings):
    records = run_trial(make_settings(t_max=2, n_episodes=7, epsilon_min=0.8))
    # The fifth decay takes epsilon below 0.8, after which it stays put.
    expected = [1.0, 0.95, 0.9025, 0.857375, 0.81450625, 0.7737809375, 0.7737809375]
    assert [r.epsilon for r in records] == pytest.approx(expected)
    assert [r.episode_index for r in records] == list(range(1, 8))


def test_record_statistics(make_settings):
    settings = make_settings(name='task2', n_agent=6, t_max=10, n_episodes=2)
    for record in run_trial(settings):
        assert record.best >= record.mean >= record.worst
        assert -10 <= record.mean <= 10
        assert sorted(record.group_means) == [0, 1]
        assert record.mean == pytest.approx(np.mean(record.rewards))
        assert record.displacements == record.rewards


def test_record_dict_round_trip():
    record = EpisodeRecord(3, [1, -2, 4], 0.5, {0: 1.0, 1: -0.5}, [1, -2, 4], 0.25)
    assert EpisodeRecord.from_dict(record.to_dict()) == record


def test_trial_outputs(make_settings, tmp_path):
    settings = make_settings(n_episodes=3, log_trajectories=True)
    records = run_trial(settings, 0, tmp_path)
    trial_path = paths.trial_dir(tmp_path, 0)
    assert strip(read_records(trial_path)) == strip(records)
    header, rows = files.read_csv_rows(trial_path / 'records.csv')
    assert header == ['episode', 'epsilon', 'mean', 'best', 'worst', 'group_0_mean', 'agent_0', 'agent_1']
    assert len(rows) == 3
    assert checkpoint.has_checkpoint(trial_path)
    assert files.read_json(trial_path / checkpoint.META_NAME)['episodes_completed'] == 3
    with np.load(paths.trajectory_file(trial_path, 2)) as data:
        assert data['positions'].shape == (6, 2, 2)
        assert data['positions'].dtype == np.int16
        assert data['positions'][0].tolist() == [[0, 2], [0, 4]]


@pytest.mark.parametrize('mode', sorted(OUTPUT_KEYS))
def test_group_modes_run_end_to_end(make_settings, tmp_path, mode):
    settings = make_settings(name='task2', n_agent=4, group_mode=mode, n_episodes=3)
    records = run_trial(settings, 0, tmp_path)
    assert [len(r.rewards) for r in records] == [4, 4, 4]
    assert all(sorted(r.group_means) == [0, 1] for r in records)
    trial_path = paths.trial_dir(tmp_path, 0)
    assert files.read_json(trial_path / checkpoint.META_NAME)['episodes_completed'] == 3
    weights = WeightBundle.load(trial_path / checkpoint.WEIGHTS_NAME)
    assert sorted(weights.w_out) == OUTPUT_KEYS[mode]
    for row in weights.w_out.values():
        assert row.shape == (1, 17) and np.all(np.isfinite(row))
    if mode == 'shared_across_groups':
        assert weights.w_in_g.shape == (16, 2)
    else:
        assert weights.w_in_g is None
    trial = Trial(TrialConfig.from_settings(settings))
    trial.restore(trial_path)
    assert trial.episodes_completed == 3
    assert sorted(trial.trainer.accumulators) == OUTPUT_KEYS[mode]


def test_csv_outputs_are_byte_identical(make_settings, tmp_path):
    settings = make_settings(n_episodes=3)
    run_trial(settings, 0, tmp_path / 'a')
    run_trial(settings, 0, tmp_path / 'b')
    first = (paths.trial_dir(tmp_path / 'a', 0) / 'records.csv').read_bytes()
    assert first == (paths.trial_dir(tmp_path / 'b', 0) / 'records.csv').read_bytes()


@pytest.mark.parametrize('mode', sorted(OUTPUT_KEYS))
def test_resume_continues_bit_for_bit(make_settings, tmp_path, mode):
    def settings(n_episodes):
        return make_settings(name='task2', n_agent=4, group_mode=mode, n_episodes=n_episodes)

    full = run_trial(settings(4), 0, tmp_path / 'full')
    run_trial(settings(2), 0, tmp_path / 'split')
    resumed = run_trial(settings(4), 0, tmp_path / 'split', resume=True)
    assert strip(resumed) == strip(full)
    a = WeightBundle.load(paths.trial_dir(tmp_path / 'full', 0) / checkpoint.WEIGHTS_NAME)
    b = WeightBundle.load(paths.trial_dir(tmp_path / 'split', 0) / checkpoint.WEIGHTS_NAME)
    assert sorted(a.w_out) == sorted(b.w_out) == OUTPUT_KEYS[mode]
    for key in a.w_out:
        assert np.array_equal(a.w_out[key], b.w_out[key])


def test_resume_of_complete_trial_reads_records(make_settings, tmp_path, monkeypatch):
    settings = make_settings(n_episodes=2)
    records = run_trial(settings, 0, tmp_path)
    monkeypatch.setattr(experiment.Trial, 'run', lambda *args: pytest.fail("trial should not rerun"))
    assert strip(run_trial(settings, 0, tmp_path, resume=True)) == strip(records)


def test_single_trial_batch_reports_zero_error(make_settings):
    result = run_batch(make_settings(n_trials=1))
    curve = result.aggregate()
    assert curve.single_trial
    assert not curve.se_mean.any()
    assert result.seeds == {0: '0:0'}


def test_batch_survives_failing_trial(make_settings, monkeypatch, caplog):
    settings = make_settings(n_trials=3)
    original = experiment.run_trial

    def flaky(settings, trial_index, run_dir, resume):
        if trial_index == 1:
            raise RuntimeError("boom")
        return original(settings, trial_index, run_dir, resume)

    monkeypatch.setattr(experiment, 'run_trial', flaky)
    result = run_batch(settings, jobs=1)
    assert sorted(result.trials) == [0, 2]
    assert 'boom' in result.failures[1]
    assert 'Trial 1 failed' in caplog.text
    curve = result.aggregate()
    assert curve.n_trials == 2
    expected = np.mean([[r.mean for r in result.trials[i]] for i in (0, 2)], axis=0)
    assert np.allclose(curve.mean, expected)


def test_parallel_batch_matches_inline(make_settings):
    settings = make_settings(n_trials=2, n_episodes=2)
    inline = run_batch(settings, jobs=1)
    parallel = run_batch(settings, jobs=2)
    for i in (0, 1):
        assert strip(parallel.trials[i]) == strip(inline.trials[i])
