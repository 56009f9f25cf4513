"""Trial checkpoints.

Trainable state goes to .npz (little-endian float64, row-major) next to a JSON
sidecar with the schedule, RNG state and records so far.
"""
from __future__ import annotations

import logging
from pathlib import Path

import numpy as np

from reservoircrowd.esn import WeightBundle
from reservoircrowd.utils import files

logger = logging.getLogger(__name__)

ARRAYS_NAME = 'checkpoint.npz'
META_NAME = 'checkpoint.json'
WEIGHTS_NAME = 'weights.npz'


def save_checkpoint(trial_path, trainer, weights: WeightBundle, rng: np.random.Generator,
                    episodes_completed: int, records) -> Path:
    trial_path = Path(trial_path)
    state = trainer.state_dict()
    arrays = {name: np.ascontiguousarray(value, dtype='<f8') for name, value in state['arrays'].items()}
    try:
        np.savez(trial_path / ARRAYS_NAME, **arrays)
    except OSError as error:
        raise OSError(f"Could not write checkpoint {trial_path / ARRAYS_NAME}: {error}") from error
    weights.save(trial_path / WEIGHTS_NAME)
    meta = dict(state['meta'])
    meta.update(
        episodes_completed=episodes_completed,
        rng_state=rng.bit_generator.state,
        records=[record.to_dict() for record in records],
    )
    files.write_json(meta, trial_path / META_NAME)
    logger.debug(f"Checkpoint after episode {episodes_completed} written to {trial_path}")
    return trial_path / META_NAME


def has_checkpoint(trial_path) -> bool:
    trial_path = Path(trial_path)
    return all((trial_path / name).exists() for name in (ARRAYS_NAME, META_NAME, WEIGHTS_NAME))


def load_checkpoint(trial_path):
    """Return (arrays, meta, weights) of a trial checkpoint."""
    trial_path = Path(trial_path)
    meta = files.read_json(trial_path / META_NAME)
    try:
        with np.load(trial_path / ARRAYS_NAME) as data:
            arrays = {name: data[name] for name in data.files}
    except OSError as error:
        raise OSError(f"Could not read checkpoint {trial_path / ARRAYS_NAME}: {error}") from error
    weights = WeightBundle.load(trial_path / WEIGHTS_NAME)
    return arrays, meta, weights
