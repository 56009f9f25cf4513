import numpy as np
import pytest
import scipy.linalg

from reservoircrowd.esn import (
    ReservoirState,
    SparsityProfile,
    WeightBundle,
    augment,
    commit_action,
    commit_population,
    evaluate_candidates,
    evaluate_population,
    generate_sparse_matrix,
    rescale_spectral_radius,
    spectral_radius,
)
from reservoircrowd.environment import OBS_DIM
from reservoircrowd.utils import helper
from reservoircrowd.utils.errors import DegenerateMatrixError, InvalidArgumentError


def small_bundle(seed=0, n_res=32, alpha=0.8, keys=(0,), with_group_input=False):
    return WeightBundle.generate(SparsityProfile(p_s_res=0.5), n_res, alpha, helper.trial_seed(seed, 0),
                                 output_keys=keys, with_group_input=with_group_input)


def random_output(bundle, rng, keys=(0,)):
    for key in keys:
        bundle.set_output(key, rng.normal(size=bundle.n_res + 1))


def test_sparse_matrix_zero_fraction_per_column():
    rng = np.random.default_rng(1)
    sparsity = np.array([0.2, 0.5, 0.9])
    matrix = generate_sparse_matrix(4000, 3, sparsity, 1.0, rng)
    zero_fraction = (matrix == 0.0).mean(axis=0)
    assert np.allclose(zero_fraction, sparsity, atol=0.03)


def test_sparse_matrix_extremes():
    rng = np.random.default_rng(2)
    assert np.all(generate_sparse_matrix(10, 10, 1.0, 1.0, rng) == 0.0)
    assert np.all(generate_sparse_matrix(10, 10, 0.0, 1.0, rng) != 0.0)


def test_sparse_matrix_rejects_bad_arguments():
    rng = np.random.default_rng(3)
    with pytest.raises(InvalidArgumentError):
        generate_sparse_matrix(0, 3, 0.5, 1.0, rng)
    with pytest.raises(InvalidArgumentError):
        generate_sparse_matrix(3, 3, 1.5, 1.0, rng)
    with pytest.raises(InvalidArgumentError):
        generate_sparse_matrix(3, 3, 0.5, 0.0, rng)


def test_observation_sparsity_rings():
    sparsity = SparsityProfile().observation_sparsity()
    assert sparsity.shape == (OBS_DIM,)
    assert np.count_nonzero(sparsity == 0.6) == 9 * 2
    assert np.count_nonzero(sparsity == 0.8) == (49 - 9) * 2
    assert np.count_nonzero(sparsity == 0.9) == (121 - 49) * 2
    centre = (5 * 11 + 5) * 2
    assert sparsity[centre] == sparsity[centre + 1] == 0.6
    assert sparsity[0] == 0.9


def test_profile_rejects_unordered_ring_sparsities():
    with pytest.raises(InvalidArgumentError):
        SparsityProfile(p_s1_in=0.9, p_s2_in=0.8)


@pytest.mark.parametrize('seed', range(20))
def test_spectral_radius_matches_eigen_oracle(seed):
    rng = np.random.default_rng(seed)
    w0 = generate_sparse_matrix(256, 256, 0.9, 1.0, rng)
    w_res = rescale_spectral_radius(w0, 0.95)
    assert np.max(np.abs(scipy.linalg.eigvals(w_res))) == pytest.approx(0.95, abs=1e-6)


def test_spectral_radius_of_diagonal_matrix():
    assert spectral_radius(np.diag([0.5, -2.0, 1.0])) == pytest.approx(2.0)


def test_rescale_rejects_degenerate_matrices():
    with pytest.raises(InvalidArgumentError):
        rescale_spectral_radius(np.ones((3, 4)), 0.95)
    with pytest.raises(DegenerateMatrixError):
        rescale_spectral_radius(np.zeros((4, 4)), 0.95)


def test_weight_generation_is_deterministic():
    first, second = small_bundle(seed=5), small_bundle(seed=5)
    for name in ('w_in_o', 'w_in_a', 'w_in_b', 'w_res'):
        assert np.array_equal(getattr(first, name), getattr(second, name))
    assert not np.array_equal(first.w_res, small_bundle(seed=6).w_res)


def test_weight_shapes_and_zero_output():
    bundle = small_bundle(keys=(0, 1), with_group_input=True)
    assert bundle.w_in_o.shape == (32, OBS_DIM)
    assert bundle.w_in_a.shape == (32, 4)
    assert bundle.w_in_b.shape == (32,)
    assert bundle.w_in_g.shape == (32, 2)
    assert np.all(bundle.w_in_a != 0.0)
    assert spectral_radius(bundle.w_res) == pytest.approx(0.95, abs=1e-9)
    q_values, _ = evaluate_candidates(np.zeros(OBS_DIM), ReservoirState.zeros(32), bundle, np.array([1.0, 0.0]))
    assert np.array_equal(q_values, np.zeros(4))


def test_batched_candidates_match_per_action_loop():
    rng = np.random.default_rng(7)
    for instance in range(100):
        bundle = small_bundle(seed=instance % 5, n_res=24, alpha=rng.uniform(0.1, 1.0))
        random_output(bundle, rng)
        obs = (rng.random(OBS_DIM) < 0.2).astype(float)
        state = ReservoirState(np.abs(rng.normal(size=24)))
        q_values, candidates = evaluate_candidates(obs, state, bundle)
        w = bundle.w_out[0][0]
        for action in range(4):
            one_hot = np.eye(4)[action]
            x_tilde = np.maximum(bundle.w_in_o @ obs + bundle.w_in_a @ one_hot + bundle.w_in_b
                                 + bundle.w_res @ state.x, 0.0)
            expected = bundle.alpha * x_tilde + (1.0 - bundle.alpha) * state.x
            assert np.allclose(candidates[action], expected, rtol=0.0, atol=1e-12)
            assert q_values[action] == pytest.approx(w[:-1] @ expected + w[-1], abs=1e-12)


def test_population_matches_per_agent_evaluation():
    rng = np.random.default_rng(8)
    bundle = small_bundle(keys=(0,), with_group_input=True)
    random_output(bundle, rng)
    observations = (rng.random((5, OBS_DIM)) < 0.3).astype(float)
    states = np.abs(rng.normal(size=(5, 32)))
    tags = np.eye(2)[[0, 1, 1, 0, 1]]
    keys = np.zeros(5, dtype=int)
    q_values, candidates = evaluate_population(observations, states, bundle, keys, tags)
    for i in range(5):
        q_i, cand_i = evaluate_candidates(observations[i], ReservoirState(states[i]), bundle, tags[i])
        assert np.allclose(q_values[i], q_i, rtol=0.0, atol=1e-12)
        assert np.allclose(candidates[i], cand_i, rtol=0.0, atol=1e-12)


def test_population_reads_each_agents_output_row():
    rng = np.random.default_rng(9)
    bundle = small_bundle(keys=(0, 1))
    random_output(bundle, rng, keys=(0, 1))
    observations = np.zeros((2, OBS_DIM))
    states = np.zeros((2, 32))
    q_values, _ = evaluate_population(observations, states, bundle, np.array([0, 1]))
    q_0, _ = evaluate_candidates(observations[0], ReservoirState(states[0]), bundle, output_key=0)
    q_1, _ = evaluate_candidates(observations[1], ReservoirState(states[1]), bundle, output_key=1)
    assert np.allclose(q_values, [q_0, q_1], atol=1e-12)


def test_zero_leak_keeps_state():
    rng = np.random.default_rng(10)
    bundle = small_bundle(alpha=0.0)
    state = ReservoirState(rng.normal(size=32))
    _, candidates = evaluate_candidates(rng.random(OBS_DIM), state, bundle)
    assert np.array_equal(candidates, np.tile(state.x, (4, 1)))


def test_full_leak_is_non_negative():
    rng = np.random.default_rng(11)
    bundle = small_bundle(alpha=1.0)
    _, candidates = evaluate_candidates(rng.random(OBS_DIM), ReservoirState(rng.normal(size=32)), bundle)
    assert np.all(candidates >= 0.0)


def test_evaluate_rejects_wrong_shapes():
    bundle = small_bundle()
    with pytest.raises(InvalidArgumentError):
        evaluate_candidates(np.zeros(10), ReservoirState.zeros(32), bundle)
    with pytest.raises(InvalidArgumentError):
        evaluate_candidates(np.zeros(OBS_DIM), ReservoirState.zeros(31), bundle)
    with pytest.raises(InvalidArgumentError):
        evaluate_candidates(np.zeros(OBS_DIM), ReservoirState.zeros(32), small_bundle(with_group_input=True))


def test_commit_selects_candidate():
    candidates = np.arange(12.0).reshape(4, 3)
    state = commit_action(ReservoirState.zeros(3), candidates, 2)
    assert np.array_equal(state.x, candidates[2])
    with pytest.raises(InvalidArgumentError):
        commit_action(state, candidates, 4)
    population = np.arange(24.0).reshape(2, 4, 3)
    assert np.array_equal(commit_population(population, [1, 3]), population[[0, 1], [1, 3]])


def test_augment_appends_bias():
    assert np.array_equal(augment(np.array([2.0, 3.0])), [2.0, 3.0, 1.0])
    assert augment(np.zeros((4, 5))).shape == (4, 6)


def test_bundle_save_and_load(tmp_path):
    bundle = small_bundle(keys=(0, 1))
    random_output(bundle, np.random.default_rng(12), keys=(0, 1))
    bundle.save(tmp_path / 'weights.npz')
    loaded = WeightBundle.load(tmp_path / 'weights.npz')
    assert loaded.alpha == bundle.alpha
    assert loaded.w_in_g is None
    assert np.array_equal(loaded.w_res, bundle.w_res)
    assert sorted(loaded.w_out) == [0, 1]
    assert np.array_equal(loaded.w_out[1], bundle.w_out[1])


@pytest.mark.filterwarnings('error')
def test_bundle_save_and_load_with_group_input(tmp_path):
    bundle = small_bundle(alpha=0.6, with_group_input=True)
    random_output(bundle, np.random.default_rng(13))
    bundle.save(tmp_path / 'weights.npz')
    loaded = WeightBundle.load(tmp_path / 'weights.npz')
    assert type(loaded.alpha) is float and loaded.alpha == 0.6
    assert np.array_equal(loaded.w_in_g, bundle.w_in_g)
    obs = np.random.default_rng(14).integers(0, 2, size=OBS_DIM).astype(float)
    state = ReservoirState.zeros(32)
    for tag in ([1.0, 0.0], [0.0, 1.0]):
        expected = evaluate_candidates(obs, state, bundle, np.array(tag))
        actual = evaluate_candidates(obs, state, loaded, np.array(tag))
        assert np.array_equal(actual[0], expected[0])
        assert np.array_equal(actual[1], expected[1])
