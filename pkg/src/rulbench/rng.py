"""Deterministic random-stream derivation.

Every source of randomness in a run (weight init, epoch shuffling, dropout
masks, attack noise) is drawn from a named substream of one master seed, so a
single integer reproduces an entire experiment bit for bit.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _label_entropy(label: str | int) -> int:
    digest = hashlib.sha256(str(label).encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def substream(seed: int, *labels: str | int) -> np.random.Generator:
    """Return a generator for the substream named by ``labels``.

    Distinct label tuples yield statistically independent streams; the same
    (seed, labels) pair yields the same stream on every platform.
    """
    entropy = [int(seed) & _MASK64] + [_label_entropy(l) for l in labels]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
