"""Empirical statistics of observation matrices.

An observation matrix is an ``(n, K)`` integer array: row ``i`` holds the K
noisy copies of position ``i``. Coordinates (copies) are 0-based throughout.
"""

from __future__ import annotations

import numpy as np

from .errors import ConditioningOnNullEvent, InputError, NonBinaryAlphabet, OddK
from .model import MAX_CELLS, Distribution, JointDistribution


def as_observations(obs, L: int | None = None) -> np.ndarray:
    """Validate and return an ``(n, K)`` integer observation matrix."""
    y = np.asarray(obs)
    if y.ndim == 1:
        y = y[:, None]
    if y.ndim != 2 or y.shape[0] < 1 or y.shape[1] < 1:
        raise InputError(f"observations must be a nonempty n x K matrix, got shape {y.shape}")
    if not np.issubdtype(y.dtype, np.integer):
        if not np.all(np.equal(np.mod(y, 1), 0)):
            raise InputError("observations must be integer symbols")
        y = y.astype(np.int64)
    if y.min() < 0 or (L is not None and y.max() >= L):
        raise InputError(f"observed symbols must lie in 0..{(L or 0) - 1}")
    return y


def type_of(x, L: int | None = None) -> Distribution:
    """Relative symbol frequencies of a sequence."""
    seq = np.asarray(x, dtype=np.int64).ravel()
    if seq.size == 0:
        raise InputError("type of an empty sequence is undefined")
    if L is None:
        L = max(2, int(seq.max()) + 1)
    if seq.min() < 0 or seq.max() >= L:
        raise InputError(f"symbols must lie in 0..{L - 1}")
    return Distribution(np.bincount(seq, minlength=L) / seq.size)


def joint_counts(obs, L: int = 2) -> np.ndarray:
    y = as_observations(obs, L)
    K = y.shape[1]
    if L**K > MAX_CELLS:
        raise InputError(f"L^K = {L**K} cells exceeds the dense-storage cap of {MAX_CELLS}")
    flat = np.ravel_multi_index(tuple(y.T), (L,) * K)
    return np.bincount(flat, minlength=L**K).reshape((L,) * K)


def joint_empirical(obs, L: int = 2) -> JointDistribution:
    """Joint type of the rows of ``obs`` as a dense tensor over ``X^K``."""
    counts = joint_counts(obs, L)
    return JointDistribution(counts / counts.sum())


def _check_axis(q: JointDistribution, i: int) -> int:
    if not 0 <= i < q.K:
        raise InputError(f"coordinate {i} out of range for K={q.K}")
    return i


def marginal(q: JointDistribution, i: int) -> Distribution:
    _check_axis(q, i)
    others = tuple(a for a in range(q.K) if a != i)
    return Distribution(q.probs.sum(axis=others), tol=1e-10)


def marginals(q: JointDistribution) -> np.ndarray:
    """All one-coordinate marginals as a ``(K, L)`` array."""
    return np.stack([marginal(q, i).probs for i in range(q.K)])


def marginal_excluding(q: JointDistribution, i: int) -> JointDistribution:
    _check_axis(q, i)
    if q.K < 2:
        raise InputError("cannot drop the only coordinate")
    return JointDistribution(q.probs.sum(axis=i))


def marginal_on(q: JointDistribution, coords) -> JointDistribution:
    """Marginal on the given coordinates, kept in the given order."""
    coords = [int(c) for c in coords]
    for c in coords:
        _check_axis(q, c)
    if not coords or len(set(coords)) != len(coords):
        raise InputError(f"invalid coordinate set {coords}")
    drop = tuple(a for a in range(q.K) if a not in coords)
    t = q.probs.sum(axis=drop) if drop else q.probs
    kept = sorted(coords)
    return JointDistribution(np.transpose(t, [kept.index(c) for c in coords]))


def condition_on(
    q: JointDistribution, i: int, symbol: int, on_null: JointDistribution | None = None
) -> JointDistribution:
    """Law of the other K-1 coordinates given ``y_i = symbol``.

    Raises ConditioningOnNullEvent when the event has probability zero,
    unless ``on_null`` is supplied, in which case it is returned instead.
    """
    _check_axis(q, i)
    if q.K < 2:
        raise InputError("conditioning needs at least two coordinates")
    if not 0 <= symbol < q.L:
        raise InputError(f"symbol {symbol} outside alphabet of size {q.L}")
    slab = np.take(q.probs, symbol, axis=i)
    mass = slab.sum()
    if mass <= 0:
        if on_null is not None:
            return on_null
        raise ConditioningOnNullEvent(f"P(y_{i} = {symbol}) = 0")
    return JointDistribution(slab / mass)


def _require_binary_even(L: int, K: int) -> None:
    if L != 2:
        raise NonBinaryAlphabet(f"f_K is defined for binary alphabets only, got L={L}")
    if K % 2:
        raise OddK(f"the signed sum needs an even number of copies, got K={K}")


def parity_signs(K: int) -> np.ndarray:
    """Tensor of ``(-1)^(y_1 + ... + y_K)`` over ``{0,1}^K``."""
    s = np.array([1.0, -1.0])
    out = np.ones(())
    for _ in range(K):
        out = np.multiply.outer(out, s)
    return out


def f_k_even(q: JointDistribution) -> float:
    """Signed sum of q over ``{0,1}^K`` with sign ``(-1)^(number of ones)``.

    For exact BSC outputs this is ``prod_i (1 - 2 b_i)``, whatever the source.
    """
    _require_binary_even(q.L, q.K)
    return float((parity_signs(q.K) * q.probs).sum())


def f_k_even_streaming(obs) -> float:
    """Same statistic as :func:`f_k_even` on the joint type, from raw rows."""
    y = as_observations(obs, 2)
    _require_binary_even(2, y.shape[1])
    odd = int(np.count_nonzero(y.sum(axis=1) & 1))
    n = y.shape[0]
    return (n - 2 * odd) / n
