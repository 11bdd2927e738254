"""Distributions, channels and dependent component systems.

A dependent component system ``(p, W_1, ..., W_K)`` feeds one hidden symbol
drawn from ``p`` through K memoryless channels. Everything here is immutable
and works on the alphabet ``{0, ..., L-1}``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import InputError

PROB_TOL = 1e-12
ACCUM_TOL = 1e-10
MAX_CELLS = 2**20


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Distribution:
    """Probability vector over ``{0, ..., L-1}``.

    Vectors whose sum is off by at most ``tol`` are renormalized; anything
    further off is rejected.
    """

    probs: np.ndarray
    tol: float = PROB_TOL

    def __post_init__(self):
        p = np.array(self.probs, dtype=float).ravel()
        if p.size < 2:
            raise InputError("alphabet needs at least two symbols")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise InputError(f"negative or non-finite probability in {p}")
        s = p.sum()
        if abs(s - 1.0) > self.tol:
            raise InputError(f"probabilities sum to {s!r}, not 1")
        object.__setattr__(self, "probs", _frozen(p / s))

    @property
    def L(self) -> int:
        return self.probs.size

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > 0)

    def __getitem__(self, x):
        return self.probs[x]

    def __eq__(self, other):
        return isinstance(other, Distribution) and np.array_equal(self.probs, other.probs)

    def __repr__(self):
        return f"Distribution({np.array2string(self.probs, precision=6)})"

    @classmethod
    def uniform(cls, L: int) -> "Distribution":
        return cls(np.full(L, 1.0 / L))

    @classmethod
    def point_mass(cls, x: int, L: int) -> "Distribution":
        p = np.zeros(L)
        p[x] = 1.0
        return cls(p)

    @classmethod
    def binary(cls, p0: float) -> "Distribution":
        return cls([p0, 1.0 - p0])

    def sorted_desc(self) -> "Distribution":
        return Distribution(np.sort(self.probs)[::-1])


@dataclass(frozen=True, eq=False)
class Channel:
    """Row-stochastic square matrix; ``matrix[x, y] = w(y|x)``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 2:
            raise InputError(f"channel must be a square matrix with L >= 2, got shape {m.shape}")
        if not np.all(np.isfinite(m)) or np.any(m < 0) or np.any(m > 1):
            raise InputError("channel entries must lie in [0, 1]")
        sums = m.sum(axis=1)
        bad = np.flatnonzero(np.abs(sums - 1.0) > PROB_TOL)
        if bad.size:
            raise InputError(f"row {bad[0]} of channel sums to {sums[bad[0]]!r}")
        object.__setattr__(self, "matrix", _frozen(m / sums[:, None]))

    @property
    def L(self) -> int:
        return self.matrix.shape[0]

    def is_invertible(self, tol: float = 1e-12) -> bool:
        return abs(np.linalg.det(self.matrix)) > tol

    def __eq__(self, other):
        return isinstance(other, Channel) and np.array_equal(self.matrix, other.matrix)

    def __repr__(self):
        return f"Channel({np.array2string(self.matrix, precision=6)})"

    @classmethod
    def identity(cls, L: int) -> "Channel":
        return cls(np.eye(L))


def bsc(b: float) -> Channel:
    """Binary symmetric channel transmitting correctly with probability ``b``."""
    if not 0.0 <= b <= 1.0:
        raise InputError(f"BSC parameter {b} outside [0, 1]")
    return Channel([[b, 1.0 - b], [1.0 - b, b]])


def bsc_param(ch: Channel) -> float:
    """Return ``b(0|0)`` of a binary symmetric channel."""
    m = ch.matrix
    if m.shape != (2, 2) or abs(m[0, 0] - m[1, 1]) > 1e-12:
        raise InputError("not a binary symmetric channel")
    return float(m[0, 0])


def compose_bsc(a: float, b: float) -> float:
    """Parameter of the BSC equal to the cascade of BSCs ``a`` and ``b``."""
    return 2.0 * a * b + 1.0 - a - b


@dataclass(frozen=True, eq=False)
class DistortionMeasure:
    matrix: np.ndarray

    def __post_init__(self):
        d = np.array(self.matrix, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InputError("distortion must be a square matrix")
        if np.any(d < 0) or not np.all(np.isfinite(d)):
            raise InputError("distortion entries must be finite and nonnegative")
        object.__setattr__(self, "matrix", _frozen(d))

    @property
    def L(self) -> int:
        return self.matrix.shape[0]

    @classmethod
    def hamming(cls, L: int) -> "DistortionMeasure":
        # penalizes disagreement: d(x, x') = 1 - [x == x']
        return cls(1.0 - np.eye(L))


@dataclass(frozen=True, eq=False)
class JointDistribution:
    """Dense probability tensor over ``X^K``, one axis per copy."""

    probs: np.ndarray

    def __post_init__(self):
        q = np.array(self.probs, dtype=float)
        if q.ndim < 1 or len(set(q.shape)) != 1 or q.shape[0] < 2:
            raise InputError(f"joint distribution must be an L x ... x L tensor, got {q.shape}")
        if q.size > MAX_CELLS:
            raise InputError(f"{q.size} cells exceeds the dense-storage cap of {MAX_CELLS}")
        if np.any(q < 0) or not np.all(np.isfinite(q)):
            raise InputError("joint distribution has negative or non-finite entries")
        s = q.sum()
        if abs(s - 1.0) > ACCUM_TOL:
            raise InputError(f"joint distribution sums to {s!r}")
        object.__setattr__(self, "probs", _frozen(q / s))

    @property
    def K(self) -> int:
        return self.probs.ndim

    @property
    def L(self) -> int:
        return self.probs.shape[0]

    def l1(self, other: "JointDistribution") -> float:
        return float(np.abs(self.probs - other.probs).sum())

    def __eq__(self, other):
        return isinstance(other, JointDistribution) and np.array_equal(self.probs, other.probs)


@dataclass(frozen=True)
class DependentComponentSystem:
    source: Distribution
    channels: tuple[Channel, ...]

    def __post_init__(self):
        chans = tuple(self.channels)
        if not chans:
            raise InputError("a dependent component system needs at least one channel")
        for j, ch in enumerate(chans):
            if ch.L != self.source.L:
                raise InputError(f"channel {j} has alphabet size {ch.L}, source has {self.source.L}")
        object.__setattr__(self, "channels", chans)

    @property
    def K(self) -> int:
        return len(self.channels)

    @property
    def L(self) -> int:
        return self.source.L

    @classmethod
    def binary(cls, p0: float, bs: Iterable[float]) -> "DependentComponentSystem":
        return cls(Distribution.binary(p0), tuple(bsc(b) for b in bs))

    def channel_stack(self) -> np.ndarray:
        return np.stack([ch.matrix for ch in self.channels])


def apply_channel(ch: Channel, p: Distribution) -> Distribution:
    if ch.L != p.L:
        raise InputError(f"channel on {ch.L} symbols applied to distribution on {p.L}")
    return Distribution(p.probs @ ch.matrix)


def product_tensor(source: np.ndarray, channels: Sequence[np.ndarray]) -> np.ndarray:
    """Raw ``sum_x p(x) W_1[x] (x) ... (x) W_K[x]`` without validation."""
    L = source.shape[0]
    acc = source.reshape(L)
    for w in channels:
        acc = acc[..., None] * w.reshape((L,) + (1,) * (acc.ndim - 1) + (L,))
    return acc.sum(axis=0)


def product_output(sys: DependentComponentSystem) -> JointDistribution:
    """Joint law of the K channel outputs."""
    return JointDistribution(product_tensor(sys.source.probs, [c.matrix for c in sys.channels]))


def dcs_distance(a: DependentComponentSystem, b: DependentComponentSystem) -> float:
    """L1 distance of the sources plus max-row L1 distance of each channel pair."""
    if a.K != b.K or a.L != b.L:
        raise InputError(f"systems differ in shape: K={a.K},L={a.L} vs K={b.K},L={b.L}")
    total = float(np.abs(a.source.probs - b.source.probs).sum())
    for va, vb in zip(a.channels, b.channels):
        total += float(np.abs(va.matrix - vb.matrix).sum(axis=1).max())
    return total


def check_permutation(tau: Sequence[int], L: int) -> np.ndarray:
    t = np.asarray(tau, dtype=int)
    if t.shape != (L,) or not np.array_equal(np.sort(t), np.arange(L)):
        raise InputError(f"{list(tau)} is not a permutation of 0..{L - 1}")
    return t


def permutations(L: int) -> list[np.ndarray]:
    """All permutations of ``range(L)`` in lexicographic order."""
    return [np.array(t) for t in itertools.permutations(range(L))]


def flip_system(sys: DependentComponentSystem, tau: Sequence[int]) -> DependentComponentSystem:
    """Relabel the hidden symbol: source ``tau(p)``, channels ``W_j o tau^-1``.

    The output law of the relabeled system is identical to the original.
    """
    t = check_permutation(tau, sys.L)
    inv = np.argsort(t)
    return DependentComponentSystem(
        Distribution(sys.source.probs[inv]),
        tuple(Channel(ch.matrix[inv, :]) for ch in sys.channels),
    )
