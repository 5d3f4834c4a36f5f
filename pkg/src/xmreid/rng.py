"""Deterministic random streams.

All randomness in the package flows through Philox 4x64, a counter-based
generator whose 128-bit key we split as (master seed, stream id). The stream
id is an FNV-1a fold of a small integer path such as (purpose, split index),
so independent pipeline stages never share a sequence and parallel work
partitions the key space instead of racing on one generator. Golden files
are reproducible across platforms because Philox and numpy's ziggurat
Gaussian sampler are both exactly specified.
"""

import numpy as np

# Purpose tags for the first path component of a stream id.
MIXING = 1        # synthetic mixing matrices and view shifts
LATENT = 2        # per-identity latents and sample noise
ATTRIBUTES = 3    # synthetic attribute bits
SPLIT_GEN = 4     # random train/test split generation
CORPUS = 5        # synthetic description corpus
EVAL = 6          # per-split evaluation (gallery sampling, bit flips)
TRAIN = 7         # network init and SGD batching
AUGMENT = 8       # corpus augmentation

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fold(path):
    h = _FNV_OFFSET
    for part in path:
        value = int(part) & _MASK64
        for _ in range(8):
            h ^= value & 0xFF
            h = (h * _FNV_PRIME) & _MASK64
            value >>= 8
    return h


def stream(master_seed, *path):
    """Independent generator keyed by the master seed and an integer path."""
    key = np.array([int(master_seed) & _MASK64, _fold(path)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
