"""Counter-based seeding.

Every random draw in a simulation run comes from a generator whose seed is a
pure function of ``(master_seed, stream, key, index)``.  Results therefore do
not depend on how trials are batched or scheduled across workers.
"""

import numpy as np

STREAM_TRAIN = 0
STREAM_TEST = 1
STREAM_CALIBRATE = 2


def snr_key(snr_db: float) -> int:
    """Map an SNR in dB to a non-negative integer usable in a spawn key."""
    return int(round((snr_db + 1000.0) * 1000.0))


def trial_seed(master_seed: int, stream: int, key: int, index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=master_seed, spawn_key=(stream, key, index))


def trial_rng(master_seed: int, stream: int, key: int, index: int) -> np.random.Generator:
    return np.random.default_rng(trial_seed(master_seed, stream, key, index))
