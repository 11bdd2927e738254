"""Seeded synthetic data: source sequences and memoryless channel noise.

All randomness comes from numpy's Philox4x64-10 counter-based generator keyed
by the user seed. Uniform draw number ``i * K + j`` of that stream drives cell
``(i, j)``, so the output is a fixed function of (seed, input).
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import InputError
from .model import Channel, Distribution

RNG_ALGORITHM = "numpy.random.Philox(4x64-10)"
MAX_SEED = 2**64 - 1


def make_rng(seed: int) -> np.random.Generator:
    seed = int(seed)
    if not 0 <= seed <= MAX_SEED:
        raise InputError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return np.random.Generator(np.random.Philox(key=seed))


def corrupt(x, channels: Sequence[Channel], seed: int) -> np.ndarray:
    """Pass ``x`` through each channel independently; returns an ``(n, K)`` matrix."""
    seq = np.asarray(x, dtype=np.int64).ravel()
    if seq.size == 0:
        raise InputError("cannot corrupt an empty sequence")
    if not channels:
        raise InputError("need at least one channel")
    L = channels[0].L
    if any(ch.L != L for ch in channels):
        raise InputError("channels must share one alphabet")
    if seq.min() < 0 or seq.max() >= L:
        raise InputError(f"source symbols must lie in 0..{L - 1}")
    u = make_rng(seed).random((seq.size, len(channels)))
    y = np.empty(u.shape, dtype=np.int64)
    for j, ch in enumerate(channels):
        cdf = np.cumsum(ch.matrix, axis=1)[seq, :-1]
        y[:, j] = (u[:, j, None] >= cdf).sum(axis=1)
    return y


def synthesize_source(p: Distribution, n: int, seed: int, mode: str = "exact") -> np.ndarray:
    """Draw a length-``n`` source sequence.

    ``mode="exact"`` produces a shuffled sequence with counts ``floor(n p(x))``,
    the leftover going to symbol 0; ``mode="iid"`` samples independently.
    """
    if n < 1:
        raise InputError("n must be positive")
    rng = make_rng(seed)
    if mode == "exact":
        counts = np.floor(n * p.probs).astype(np.int64)
        counts[0] += n - counts.sum()
        seq = np.repeat(np.arange(p.L), counts)
        return rng.permutation(seq)
    if mode == "iid":
        return rng.choice(p.L, size=n, p=p.probs)
    raise InputError(f"unknown mode {mode!r}; use 'exact' or 'iid'")
