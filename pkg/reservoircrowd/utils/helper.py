import datetime
import hashlib
import json

import numpy as np

# Stream ids used when deriving generators from a master seed. Each fixed
# matrix and each stochastic concern reads its own stream.
STREAMS = {
    'w_in_o': 0,
    'w_in_a': 1,
    'w_in_b': 2,
    'w_in_g': 3,
    'w_res': 4,
    'policy': 5,
}


def getTimeStamp():
    """Return the current time stamp as an ISO 8601 string (UTC)."""
    return datetime.datetime.now(datetime.timezone.utc).isoformat(timespec='seconds')


def config_hash(settings: dict) -> str:
    """Return the first 12 hex digits of the SHA-256 of the canonical settings.

    In:
        settings: (Dict) validated configuration
    Out:
        digest: (str) 12 hex characters
    """
    canonical = json.dumps(settings, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()[:12]


def trial_seed(master_seed: int, trial_index: int) -> np.random.SeedSequence:
    """Split the master seed into the seed sequence of one trial.

    The result depends only on (master_seed, trial_index), never on the number
    of trials.
    """
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(trial_index,))


def stream(seed: np.random.SeedSequence, name: str) -> np.random.Generator:
    """Return the named generator derived from a trial seed sequence."""
    if name not in STREAMS:
        raise ValueError(f"Unknown random stream '{name}', expected one of {sorted(STREAMS)}")
    child = np.random.SeedSequence(
        entropy=seed.entropy, spawn_key=tuple(seed.spawn_key) + (STREAMS[name],)
    )
    return np.random.Generator(np.random.PCG64(child))


def trial_seed_label(seed: np.random.SeedSequence) -> str:
    return f"{seed.entropy}:{'.'.join(str(k) for k in seed.spawn_key)}"
