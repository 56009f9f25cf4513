"""Echo-state network with action-conditioned reservoir updates.

Only the output rows ``w_out`` are trained; every other matrix is drawn once
from its own random stream and stays fixed.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, Optional, Tuple

import numpy as np
from scipy.sparse.linalg import ArpackNoConvergence, eigs

from reservoircrowd.environment.agents import N_ACTIONS
from reservoircrowd.environment.environment import OBS_CHANNELS, OBS_DIM, OBS_RADIUS, OBS_SIDE
from reservoircrowd.utils import helper
from reservoircrowd.utils.errors import DegenerateMatrixError, InvalidArgumentError

logger = logging.getLogger(__name__)

N_GROUP_TAGS = 2
DENSE_EIGEN_LIMIT = 2048


@dataclass(frozen=True)
class SparsityProfile:
    p_s1_in: float = 0.6
    p_s2_in: float = 0.8
    p_s3_in: float = 0.9
    p_sb_in: float = 0.9
    p_s_res: float = 0.9
    sigma_in_o: float = 1.0
    sigma_in_a: float = 2.0
    sigma_in_b: float = 1.0
    sigma_res_0: float = 1.0
    rho_target: float = 0.95

    def __post_init__(self):
        for name in ('p_s1_in', 'p_s2_in', 'p_s3_in', 'p_sb_in', 'p_s_res'):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise InvalidArgumentError(f"{name} must lie in [0, 1], got {getattr(self, name)}")
        if not self.p_s1_in <= self.p_s2_in <= self.p_s3_in:
            raise InvalidArgumentError("Ring sparsities must satisfy p_s1_in <= p_s2_in <= p_s3_in")
        if not 0.0 < self.rho_target < 1.0:
            raise InvalidArgumentError(f"rho_target must lie in (0, 1), got {self.rho_target}")

    @classmethod
    def from_settings(cls, esn: dict) -> SparsityProfile:
        return cls(
            p_s1_in=esn['p_s1_in'], p_s2_in=esn['p_s2_in'], p_s3_in=esn['p_s3_in'],
            p_sb_in=esn['p_sb_in'], p_s_res=esn['p_s_res'],
            sigma_in_o=esn['sigma_in_o'], sigma_in_a=esn['sigma_in_a'],
            sigma_in_b=esn['sigma_in_b'], sigma_res_0=esn['sigma_res_0'],
            rho_target=esn['rho'],
        )

    def observation_sparsity(self) -> np.ndarray:
        """Sparsity of every W_in_o column by the ring of its observed cell.

        Rings are the 3x3 block around the observer, then the 7x7 and 11x11 rings.
        """
        cell = np.arange(OBS_DIM) // OBS_CHANNELS
        dy = np.abs(cell // OBS_SIDE - OBS_RADIUS)
        dx = np.abs(cell % OBS_SIDE - OBS_RADIUS)
        ring = np.maximum(dx, dy)
        return np.select([ring <= 1, ring <= 3], [self.p_s1_in, self.p_s2_in], default=self.p_s3_in)


def generate_sparse_matrix(rows: int, cols: int, sparsity_per_column, sigma: float,
                           rng: np.random.Generator) -> np.ndarray:
    """Draw a sparse Gaussian matrix.

    Entry (mu, nu) is zero with probability ``sparsity_per_column[nu]`` and
    drawn from N(0, sigma^2) otherwise.

    ``sparsity_per_column`` may be a scalar applied to every column.
    """
    if rows <= 0 or cols <= 0:
        raise InvalidArgumentError(f"Matrix dimensions must be positive, got {rows}x{cols}")
    if not sigma > 0.0:
        raise InvalidArgumentError(f"Standard deviation must be positive, got {sigma}")
    sparsity = np.broadcast_to(np.asarray(sparsity_per_column, dtype=np.float64), (cols,))
    if np.any((sparsity < 0.0) | (sparsity > 1.0)):
        raise InvalidArgumentError("Sparsity values must lie in [0, 1]")

    keep = rng.random((rows, cols)) >= sparsity
    values = rng.normal(0.0, sigma, size=(rows, cols))
    return np.where(keep, values, 0.0)


def spectral_radius(matrix: np.ndarray) -> float:
    n = matrix.shape[0]
    if n > DENSE_EIGEN_LIMIT:
        try:
            values = eigs(matrix, k=1, which='LM', tol=1e-12, return_eigenvectors=False)
            return float(np.abs(values[0]))
        except ArpackNoConvergence:
            logger.warning(f"ARPACK did not converge on a {n}x{n} reservoir, using the dense eigensolver")
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


def rescale_spectral_radius(w0: np.ndarray, rho_target: float) -> np.ndarray:
    """Return ``(rho_target / rho(w0)) * w0``.

    Raises:
        InvalidArgumentError: When ``w0`` is not square.
        DegenerateMatrixError: When rho(w0) is zero.
    """
    if w0.ndim != 2 or w0.shape[0] != w0.shape[1]:
        raise InvalidArgumentError(f"Reservoir matrix must be square, got shape {w0.shape}")
    rho0 = spectral_radius(w0)
    if not rho0 > 0.0 or not np.isfinite(rho0):
        raise DegenerateMatrixError(f"Cannot rescale a matrix with spectral radius {rho0}")
    logger.debug(f"Rescaling reservoir from spectral radius {rho0:.6f} to {rho_target}")
    return (rho_target / rho0) * w0


@dataclass
class WeightBundle:
    """Fixed input and reservoir matrices shared by every agent.

    Each learning group adds one trainable output row of length n_res + 1.
    """

    w_in_o: np.ndarray = field(repr=False)
    w_in_a: np.ndarray = field(repr=False)
    w_in_b: np.ndarray = field(repr=False)
    w_res: np.ndarray = field(repr=False)
    alpha: float
    w_out: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)
    w_in_g: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def n_res(self) -> int:
        return self.w_res.shape[0]

    @classmethod
    def generate(cls, profile: SparsityProfile, n_res: int, alpha: float, seed: np.random.SeedSequence,
                 output_keys: Iterable[int] = (0,), with_group_input: bool = False) -> WeightBundle:
        if not 0.0 <= alpha <= 1.0:
            raise InvalidArgumentError(f"Leaking rate must lie in [0, 1], got {alpha}")
        w_in_o = generate_sparse_matrix(n_res, OBS_DIM, profile.observation_sparsity(), profile.sigma_in_o,
                                        helper.stream(seed, 'w_in_o'))
        w_in_a = generate_sparse_matrix(n_res, N_ACTIONS, 0.0, profile.sigma_in_a, helper.stream(seed, 'w_in_a'))
        w_in_b = generate_sparse_matrix(n_res, 1, profile.p_sb_in, profile.sigma_in_b,
                                        helper.stream(seed, 'w_in_b')).ravel()
        w_in_g = None
        if with_group_input:
            w_in_g = generate_sparse_matrix(n_res, N_GROUP_TAGS, 0.0, profile.sigma_in_a,
                                            helper.stream(seed, 'w_in_g'))
        w_res0 = generate_sparse_matrix(n_res, n_res, profile.p_s_res, profile.sigma_res_0,
                                        helper.stream(seed, 'w_res'))
        w_res = rescale_spectral_radius(w_res0, profile.rho_target)
        bundle = cls(w_in_o, w_in_a, w_in_b, w_res, float(alpha), w_in_g=w_in_g)
        for key in output_keys:
            bundle.w_out[key] = np.zeros((1, n_res + 1))
        return bundle

    def set_output(self, key: int, row: np.ndarray) -> None:
        row = np.asarray(row, dtype=np.float64).reshape(1, -1)
        if row.shape[1] != self.n_res + 1:
            raise InvalidArgumentError(f"Output row must have length {self.n_res + 1}, got {row.shape[1]}")
        self.w_out[key] = row

    def output_rows(self, keys) -> np.ndarray:
        """Stack the output rows (n, n_res + 1) of the given per-agent keys."""
        table = {key: row[0] for key, row in self.w_out.items()}
        return np.stack([table[int(key)] for key in keys])

    def save(self, file_path) -> None:
        """Write every matrix as little-endian float64, row-major, into an .npz container."""
        arrays = {
            'w_in_o': self.w_in_o, 'w_in_a': self.w_in_a, 'w_in_b': self.w_in_b,
            'w_res': self.w_res, 'alpha': np.float64(self.alpha),
        }
        if self.w_in_g is not None:
            arrays['w_in_g'] = self.w_in_g
        for key, row in self.w_out.items():
            arrays[f'w_out_{key}'] = row
        try:
            np.savez(file_path, **{k: np.ascontiguousarray(v, dtype='<f8') for k, v in arrays.items()})
        except OSError as error:
            raise OSError(f"Could not write weight bundle {file_path}: {error}") from error

    @classmethod
    def load(cls, file_path) -> WeightBundle:
        file_path = Path(file_path)
        try:
            data = np.load(file_path)
        except OSError as error:
            raise OSError(f"Could not read weight bundle {file_path}: {error}") from error
        with data:
            bundle = cls(data['w_in_o'], data['w_in_a'], data['w_in_b'], data['w_res'], data['alpha'].item(),
                         w_in_g=data['w_in_g'] if 'w_in_g' in data.files else None)
            for name in data.files:
                if name.startswith('w_out_'):
                    bundle.w_out[int(name[len('w_out_'):])] = data[name]
        return bundle


@dataclass
class ReservoirState:
    x: np.ndarray
    owner: int = 0

    @classmethod
    def zeros(cls, n_res: int, owner: int = 0) -> ReservoirState:
        return cls(np.zeros(n_res), owner)


def augment(x: np.ndarray) -> np.ndarray:
    """Append the bias component: (x; 1)."""
    x = np.asarray(x, dtype=np.float64)
    return np.concatenate([x, np.ones(x.shape[:-1] + (1,))], axis=-1)


def evaluate_candidates(obs: np.ndarray, state: ReservoirState, weights: WeightBundle,
                        group_tag: Optional[np.ndarray] = None,
                        output_key: int = 0) -> Tuple[np.ndarray, np.ndarray]:
    """Q-values and candidate reservoir states of every action at once.

    Returns:
        (q_values (|A|,), candidate_states (|A|, n_res))
    """
    obs = np.asarray(obs, dtype=np.float64)
    x = np.asarray(state.x, dtype=np.float64)
    if obs.shape != (weights.w_in_o.shape[1],):
        raise InvalidArgumentError(f"Observation must have shape ({weights.w_in_o.shape[1]},), got {obs.shape}")
    if x.shape != (weights.n_res,):
        raise InvalidArgumentError(f"Reservoir state must have shape ({weights.n_res},), got {x.shape}")

    x_in = weights.w_in_o @ obs + weights.w_in_b + weights.w_res @ x
    if weights.w_in_g is not None:
        if group_tag is None or np.shape(group_tag) != (N_GROUP_TAGS,):
            raise InvalidArgumentError("Cross-group weights require a one-hot group tag of length 2")
        x_in = x_in + weights.w_in_g @ np.asarray(group_tag, dtype=np.float64)

    x_tilde = np.maximum(x_in[None, :] + weights.w_in_a.T, 0.0)
    candidates = weights.alpha * x_tilde + (1.0 - weights.alpha) * x[None, :]
    w = weights.w_out[output_key][0]
    q_values = candidates @ w[:-1] + w[-1]
    return q_values, candidates


def evaluate_population(observations: np.ndarray, states: np.ndarray, weights: WeightBundle,
                        output_keys: np.ndarray, group_tags: Optional[np.ndarray] = None
                        ) -> Tuple[np.ndarray, np.ndarray]:
    """Evaluate the candidate actions of n agents at once.

    Returns:
        (q_values (n, |A|), candidate_states (n, |A|, n_res))
    """
    observations = np.asarray(observations, dtype=np.float64)
    states = np.asarray(states, dtype=np.float64)
    if observations.ndim != 2 or observations.shape[1] != weights.w_in_o.shape[1]:
        raise InvalidArgumentError(f"Observations must have shape (n, {weights.w_in_o.shape[1]})")
    if states.shape != (observations.shape[0], weights.n_res):
        raise InvalidArgumentError(f"Reservoir states must have shape ({observations.shape[0]}, {weights.n_res})")

    x_in = observations @ weights.w_in_o.T + weights.w_in_b + states @ weights.w_res.T
    if weights.w_in_g is not None:
        if group_tags is None:
            raise InvalidArgumentError("Cross-group weights require one-hot group tags")
        x_in = x_in + np.asarray(group_tags, dtype=np.float64) @ weights.w_in_g.T

    x_tilde = np.maximum(x_in[:, None, :] + weights.w_in_a.T[None, :, :], 0.0)
    candidates = weights.alpha * x_tilde + (1.0 - weights.alpha) * states[:, None, :]
    w = weights.output_rows(output_keys)
    q_values = np.einsum('kan,kn->ka', candidates, w[:, :-1]) + w[:, -1:]
    return q_values, candidates


def commit_action(state: ReservoirState, candidate_states: np.ndarray, chosen_action: int) -> ReservoirState:
    if not 0 <= chosen_action < len(candidate_states):
        raise InvalidArgumentError(f"Action {chosen_action} outside [0, {len(candidate_states)})")
    state.x = np.array(candidate_states[chosen_action], dtype=np.float64)
    return state


def commit_population(candidate_states: np.ndarray, actions: np.ndarray) -> np.ndarray:
    actions = np.asarray(actions, dtype=np.int64)
    if np.any((actions < 0) | (actions >= candidate_states.shape[1])):
        raise InvalidArgumentError("Action index out of range")
    return candidate_states[np.arange(len(actions)), actions]
