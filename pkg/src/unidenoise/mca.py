"""Minimal clairvoyant ambiguous (MCA) decoding and baseline decoders.

Given a system ``(p, W_1..W_K)`` and a distortion ``d``, the MCA decoder maps
each output tuple ``y`` to the label minimizing the expected distortion
against the hidden symbol, up to a relabeling ``tau`` of the source alphabet.

Reading of the partition index: the cost of labeling ``y`` with ``x'`` under
``tau`` is ``sum_x p(x) d(x, tau^-1(x')) w(y|x)``. Writing the partition cells
as ``T_tau(x')`` instead gives the same minimum, since the min runs over all
``tau`` and over all partitions, and relabeling the cells is a bijection
between the two families.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .empirical import as_observations
from .errors import AlphabetTooLarge, InputError, NonBinaryAlphabet
from .model import (
    MAX_CELLS,
    Channel,
    DependentComponentSystem,
    DistortionMeasure,
    Distribution,
    permutations,
    product_tensor,
)

MAX_L = 6
# above this alphabet size the inner sum over x is compensated
KAHAN_MIN_L = 5


@dataclass(frozen=True, eq=False)
class McaDecoder:
    labeling: np.ndarray  # shape (L,)*K, entry = decoded symbol
    tau: tuple[int, ...]
    expected_distortion: float

    @property
    def K(self) -> int:
        return self.labeling.ndim

    @property
    def L(self) -> int:
        return self.labeling.shape[0]

    def cells(self) -> list[np.ndarray]:
        """Partition of the flat output indices, one cell per decoded symbol."""
        flat = self.labeling.ravel()
        return [np.flatnonzero(flat == x) for x in range(self.L)]


def _check_size(L: int, K: int) -> None:
    if L > MAX_L:
        raise AlphabetTooLarge(f"alphabet of size {L} exceeds the permutation-enumeration limit {MAX_L}")
    if L**K > MAX_CELLS:
        raise AlphabetTooLarge(f"L^K = {L**K} output tuples exceeds {MAX_CELLS}")


def composite_channel(sys: DependentComponentSystem) -> np.ndarray:
    """Rows ``x`` of the channel ``X -> X^K``, flattened to shape ``(L, L^K)``."""
    L = sys.L
    rows = [product_tensor(np.eye(L)[x], [c.matrix for c in sys.channels]).ravel() for x in range(L)]
    return np.stack(rows)


def _label_costs(p: np.ndarray, d: np.ndarray, C: np.ndarray) -> np.ndarray:
    """``A[y, x''] = sum_x p(x) d(x, x'') C[x, y]``."""
    weights = p[:, None] * d  # (x, x'')
    L = p.size
    if L < KAHAN_MIN_L:
        return C.T @ weights
    total = np.zeros((C.shape[1], L))
    comp = np.zeros_like(total)
    for x in range(L):
        term = np.outer(C[x], weights[x]) - comp
        t = total + term
        comp = (t - total) - term
        total = t
    return total


def build_mca(sys: DependentComponentSystem, d: DistortionMeasure | None = None) -> McaDecoder:
    L, K = sys.L, sys.K
    _check_size(L, K)
    if d is None:
        d = DistortionMeasure.hamming(L)
    if d.L != L:
        raise InputError(f"distortion is {d.L}x{d.L}, system alphabet has {L} symbols")
    A = _label_costs(sys.source.probs, d.matrix, composite_channel(sys))
    best = None
    for tau in permutations(L):
        inv = np.argsort(tau)
        # column x' of A[:, inv] is the cost of label x' under tau
        costs = A[:, inv]
        labels = np.argmin(costs, axis=1)  # first minimum = smallest label
        total = float(costs[np.arange(costs.shape[0]), labels].sum())
        if best is None or total < best[0]:
            best = (total, tau, labels)
    total, tau, labels = best
    return McaDecoder(
        labeling=labels.reshape((L,) * K),
        tau=tuple(int(t) for t in tau),
        expected_distortion=total,
    )


def mca_distortion(sys: DependentComponentSystem, d: DistortionMeasure | None = None) -> float:
    return build_mca(sys, d).expected_distortion


def decode(dec: McaDecoder, obs) -> np.ndarray:
    y = as_observations(obs, dec.L)
    if y.shape[1] != dec.K:
        raise InputError(f"decoder expects {dec.K} copies, observations have {y.shape[1]}")
    return dec.labeling[tuple(y.T)]


def labeling_distortion(
    sys: DependentComponentSystem, labeling: np.ndarray, d: DistortionMeasure | None = None
) -> float:
    """Expected distortion of a fixed labeling, minimized over source relabelings."""
    L = sys.L
    d = d or DistortionMeasure.hamming(L)
    A = _label_costs(sys.source.probs, d.matrix, composite_channel(sys))
    labels = np.asarray(labeling).ravel()
    rows = np.arange(labels.size)
    return min(float(A[rows, np.argsort(t)[labels]].sum()) for t in permutations(L))


def colour_agnostic_baseline(p: Distribution, w: Channel) -> float:
    """Error rate of the best fixed symbol relabeling applied letter by letter."""
    if w.L != p.L:
        raise InputError("channel and distribution alphabets differ")
    if p.L > MAX_L:
        raise AlphabetTooLarge(f"alphabet of size {p.L} exceeds {MAX_L}")
    x = np.arange(p.L)
    return 1.0 - max(float((p.probs * w.matrix[x, tau]).sum()) for tau in permutations(p.L))


def majority_decode(obs) -> np.ndarray:
    """Per-row majority vote over binary copies; ties decode to 0."""
    y = as_observations(obs)
    if y.max() > 1:
        raise NonBinaryAlphabet("majority decoding is defined for binary observations")
    ones = y.sum(axis=1)
    return (2 * ones > y.shape[1]).astype(np.int64)


def ambiguous_distortion(truth, estimate, d: DistortionMeasure | None = None, L: int | None = None) -> float:
    """Mean per-symbol distortion minimized over relabelings of the truth."""
    x = np.asarray(truth, dtype=np.int64).ravel()
    xh = np.asarray(estimate, dtype=np.int64).ravel()
    if x.shape != xh.shape or x.size == 0:
        raise InputError(f"sequences differ in length: {x.size} vs {xh.size}")
    if L is None:
        L = d.L if d is not None else max(2, int(max(x.max(), xh.max())) + 1)
    d = d or DistortionMeasure.hamming(L)
    if L > MAX_L:
        raise AlphabetTooLarge(f"alphabet of size {L} exceeds {MAX_L}")
    joint = np.zeros((L, L))
    np.add.at(joint, (x, xh), 1.0)
    return min(float((joint * d.matrix[np.asarray(t)[:, None], np.arange(L)]).sum()) for t in permutations(L)) / x.size
