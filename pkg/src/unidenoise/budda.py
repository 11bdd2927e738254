"""Closed-form estimation for binary symmetric dependent component systems.

For BSCs with parameters ``b_i`` the scalar identity

    1 - 2 q_i(0) = (1 - 2 b_i) (2 p(0) - 1)

links each output marginal to the source. The signed statistic ``f_k``
recovers ``prod_i (1 - 2 b_i)`` without knowing ``p``, so the ratio of the two
products yields ``|2 p(0) - 1|`` and hence the source, after which every
channel follows by inverting a single BSC.

Two estimators share this machinery:

``"paper"``
    Uses all K copies in every source estimate, conditions on copies 1 and 2
    at the majority symbol of copy 1, and decides between the direct and the
    conditional route by comparing ``|p - pi|`` with the smallest conditional
    marginal bias.
``"optimized"``
    Screens out copies whose channel is too close to 1/2 before every source
    estimate (their factors are pure sampling noise at practical n), conditions
    on the two copies whose conditional sources are farthest from uniform, and
    compares source biases directly.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .empirical import (
    condition_on,
    f_k_even,
    joint_empirical,
    marginal,
    marginal_excluding,
    marginal_on,
    marginals,
)
from .errors import (
    AllCopiesConstant,
    DegenerateChannel,
    DegenerateSource,
    InputError,
    NonBinaryAlphabet,
)
from .model import Distribution, JointDistribution

ESTIMATORS = ("paper", "optimized")
BRANCHES = ("auto", "direct", "conditional")


@dataclass(frozen=True)
class BuddaConfig:
    epsilon: float = 1e-6
    estimator: str = "optimized"
    # copies with estimated |1-2b| below screen_ratio * max are left out of
    # source estimates ("optimized" only)
    screen_ratio: float = 0.5
    branch: str = "auto"
    # number of conditional systems combined ("optimized" only)
    conditioning_copies: int = 2

    def __post_init__(self):
        if self.estimator not in ESTIMATORS:
            raise InputError(f"unknown estimator {self.estimator!r}; choose from {ESTIMATORS}")
        if self.branch not in BRANCHES:
            raise InputError(f"unknown branch {self.branch!r}; choose from {BRANCHES}")
        if self.conditioning_copies < 2:
            raise InputError("conditioning_copies must be at least 2")
        if not 0.0 <= self.screen_ratio <= 1.0:
            raise InputError("screen_ratio must lie in [0, 1]")


@dataclass(frozen=True)
class BuddaEstimate:
    p_hat: Distribution
    b_hat: tuple[float, ...]
    branch: str
    majority_symbol: int
    conditioning: tuple[int, ...]
    source_bias: float
    conditional_bias: float
    clamped: tuple[bool, ...]
    estimator: str
    strengths: tuple[float, ...] | None = None
    conditional_sources: dict[int, float] = field(default_factory=dict)

    @property
    def K(self) -> int:
        return len(self.b_hat)

    @property
    def any_clamped(self) -> bool:
        return any(self.clamped)


class Inversion(NamedTuple):
    b: float
    raw: float

    @property
    def clamped(self) -> bool:
        return self.b != self.raw


def _p0(d) -> float:
    return float(d.probs[0]) if isinstance(d, Distribution) else float(d)


def _require_binary(q: JointDistribution) -> None:
    if q.L != 2:
        raise NonBinaryAlphabet(f"binary estimator applied to alphabet of size {q.L}")


def f_k(q: JointDistribution, epsilon: float | None = None) -> float:
    """Source-independent product ``prod_i (1 - 2 b_i)`` from the output law.

    Even K uses the signed sum directly. Odd K combines the K leave-one-out
    even statistics; every channel appears K-1 times in their product, so the
    root taken is ``1/(K-1)``. The odd-K value is nonnegative because the sign
    of the product cannot be recovered.
    """
    _require_binary(q)
    K = q.K
    if K < 2:
        raise InputError("f_k needs at least two copies")
    if K % 2 == 0:
        value = f_k_even(q)
    else:
        prod = 1.0
        for i in range(K):
            prod *= f_k_even(marginal_excluding(q, i))
        value = float(np.sign(prod) * abs(prod) ** (1.0 / (K - 1)))
    if epsilon is not None and abs(value) < epsilon:
        raise DegenerateChannel(f"|f_{K}| = {abs(value):.3g} below {epsilon:g}; some channel is too close to 1/2")
    return value


def e_k(q: JointDistribution, epsilon: float = 1e-6) -> float:
    """Larger source probability ``max(p(0), p(1))`` of a BSC system."""
    _require_binary(q)
    f = f_k(q, epsilon)
    m = marginals(q)[:, 0]
    ratio = abs(np.prod(1.0 - 2.0 * m)) / abs(f)
    p0 = 0.5 * (1.0 + ratio ** (1.0 / q.K))
    return float(min(max(p0, 0.5), 1.0))


def bsc_from_pair(r, s, epsilon: float = 1e-6) -> Inversion:
    """BSC parameter mapping ``s`` to ``r``, clamped to [0, 1]."""
    r0, s0 = _p0(r), _p0(s)
    denom = 2.0 * s0 - 1.0
    if abs(denom) < epsilon:
        raise DegenerateSource(f"source {s0:.6g} too close to uniform to invert a channel")
    raw = (s0 + r0 - 1.0) / denom
    return Inversion(min(max(raw, 0.0), 1.0), raw)


def pairwise_correlations(q: JointDistribution) -> np.ndarray:
    """Matrix of ``f_2`` over every pair of copies; equals ``(1-2b_i)(1-2b_j)``."""
    K = q.K
    c = np.ones((K, K))
    for i, j in itertools.combinations(range(K), 2):
        c[i, j] = c[j, i] = f_k_even(marginal_on(q, (i, j)))
    return c


def channel_strengths(q: JointDistribution) -> np.ndarray:
    """Estimate ``|1 - 2 b_i|`` for every copy from pairwise correlations.

    Each copy is paired with the two strongest other copies j, k and
    ``|1-2b_i|^2 = |c_ij c_ik / c_jk|``.
    """
    _require_binary(q)
    K = q.K
    if K < 3:
        raise InputError("channel strengths need at least three copies")
    c = np.abs(pairwise_correlations(q))
    np.fill_diagonal(c, 0.0)
    score = c.sum(axis=1)
    g = np.zeros(K)
    for i in range(K):
        j, k = [a for a in np.argsort(-score, kind="stable") if a != i][:2]
        if c[j, k] > 0:
            g[i] = np.sqrt(c[i, j] * c[i, k] / c[j, k])
    return g


def _screened(strengths: np.ndarray, ratio: float) -> list[int]:
    order = np.argsort(-strengths, kind="stable")
    keep = set(int(i) for i in np.flatnonzero(strengths >= ratio * strengths.max()))
    keep.update(int(i) for i in order[:2])
    return sorted(keep)


def _source(q: JointDistribution, coords: list[int] | None, epsilon: float) -> float:
    if coords is not None and len(coords) < q.K:
        q = marginal_on(q, coords)
    return e_k(q, epsilon)


def _majority(dist: Distribution) -> int:
    return 0 if dist.probs[0] >= dist.probs[1] else 1


def _bias(p0: float) -> float:
    # ||(p0, 1-p0) - (1/2, 1/2)||_1
    return abs(2.0 * p0 - 1.0)


def _gauges_differ(b_ref: dict[int, float], b_other: dict[int, float], strengths) -> bool:
    """Compare two estimate sets on their strongest shared copy."""
    shared = sorted(set(b_ref) & set(b_other), key=lambda i: (-strengths[i], -abs(b_ref[i] - 0.5), i))
    if not shared:
        return False
    i = shared[0]
    return (b_ref[i] - 0.5) * (b_other[i] - 0.5) < 0


def _orient(b: np.ndarray, q_marg0: np.ndarray, strengths) -> np.ndarray:
    """Flip all channel estimates if they imply a source with p(0) < 1/2."""
    i = int(np.argmax(np.abs(2.0 * b - 1.0) + 1e-3 * strengths))
    if abs(2.0 * b[i] - 1.0) == 0:
        return b
    implied = (q_marg0[i] + b[i] - 1.0) / (2.0 * b[i] - 1.0)
    return 1.0 - b if implied < 0.5 else b


def estimate_from_joint(q: JointDistribution, config: BuddaConfig = BuddaConfig()) -> BuddaEstimate:
    """Run the BSC estimator on a (possibly empirical) joint output law."""
    _require_binary(q)
    K = q.K
    if K < 3:
        raise InputError(f"the binary estimator needs K >= 3 copies, got {K}")
    if np.count_nonzero(q.probs) == 1:
        raise AllCopiesConstant("every row of the observations is the same tuple")
    eps = config.epsilon
    marg = [marginal(q, i) for i in range(K)]
    marg0 = np.array([m.probs[0] for m in marg])
    optimized = config.estimator == "optimized"
    strengths = channel_strengths(q) if optimized else np.ones(K)
    all_coords = list(range(K))

    def source(qq: JointDistribution, coords: list[int], step: str) -> float:
        use = _screened(strengths[coords], config.screen_ratio) if optimized else None
        try:
            return _source(qq, use, eps)
        except (DegenerateChannel, DegenerateSource) as exc:
            raise type(exc)(str(exc), step=step) from exc

    try:
        p_hat = source(q, all_coords, "source estimate")
    except DegenerateChannel:
        if config.branch == "direct":
            raise
        p_hat = 0.5
    source_bias = _bias(p_hat)
    majority = _majority(marg[0])

    # conditional systems: coordinate c -> (conditional law, remaining coords)
    cond_sources: dict[int, float] = {}
    if optimized:
        candidates = all_coords
    else:
        candidates = [0, 1]
    cond_laws: dict[int, JointDistribution] = {}
    for c in candidates:
        sym = _majority(marg[c]) if optimized else majority
        try:
            cond_laws[c] = condition_on(q, c, sym)
        except InputError:
            continue
    if optimized:
        for c, law in cond_laws.items():
            rest = [a for a in all_coords if a != c]
            try:
                cond_sources[c] = source(law, rest, f"conditional source given copy {c + 1}")
            except (DegenerateChannel, DegenerateSource):
                cond_sources[c] = 0.5
        ranked = sorted(cond_sources, key=lambda c: (-_bias(cond_sources[c]), c))
        conditioning = tuple(ranked[: config.conditioning_copies])
        conditional_bias = min(_bias(cond_sources[c]) for c in conditioning)
    else:
        conditioning = (0, 1)
        law = cond_laws.get(0)
        if law is None:
            conditional_bias = 0.0
        else:
            conditional_bias = min(_bias(marginal(law, i).probs[0]) for i in range(K - 1))

    if config.branch == "auto":
        branch = "direct" if source_bias >= conditional_bias else "conditional"
    else:
        branch = config.branch

    if branch == "direct":
        inv = [bsc_from_pair(marg[i], p_hat, eps) for i in range(K)]
        raws = np.array([x.raw for x in inv])
        b = np.array([x.b for x in inv])
    else:
        systems: list[dict[int, float]] = []
        for c in conditioning:
            law = cond_laws.get(c)
            if law is None:
                raise DegenerateSource(f"copy {c + 1} never shows the conditioning symbol", step="conditioning")
            rest = [a for a in all_coords if a != c]
            if c not in cond_sources:
                cond_sources[c] = source(law, rest, f"conditional source given copy {c + 1}")
            raw = {}
            for pos, i in enumerate(rest):
                try:
                    raw[i] = bsc_from_pair(marginal(law, pos), cond_sources[c], eps).raw
                except DegenerateSource as exc:
                    raise DegenerateSource(str(exc), step=f"conditional route via copy {c + 1}") from exc
            if systems and _gauges_differ(systems[0], raw, strengths):
                raw = {k: 1.0 - v for k, v in raw.items()}
            systems.append(raw)
        if optimized:
            # copies seen by several systems get the mean of their estimates
            raws = np.array([np.mean([sy[i] for sy in systems if i in sy]) for i in all_coords])
        else:
            first, second = systems
            raws = np.array([first[i] if i in first else second[i] for i in all_coords])
        b = np.clip(raws, 0.0, 1.0)
        oriented = _orient(b, marg0, strengths)
        if oriented is not b:
            b, raws = oriented, 1.0 - raws

    return BuddaEstimate(
        p_hat=Distribution.binary(p_hat),
        b_hat=tuple(float(v) for v in b),
        branch=branch,
        majority_symbol=majority,
        conditioning=tuple(int(c) for c in conditioning),
        source_bias=float(source_bias),
        conditional_bias=float(conditional_bias),
        clamped=tuple(bool(v) for v in (b != raws)),
        estimator=config.estimator,
        strengths=tuple(float(g) for g in strengths) if optimized else None,
        conditional_sources={int(c): float(v) for c, v in cond_sources.items()},
    )


def budda_estimate(obs, config: BuddaConfig = BuddaConfig()) -> BuddaEstimate:
    """Estimate source and BSC parameters from an ``(n, K)`` binary observation matrix."""
    return estimate_from_joint(joint_empirical(obs, 2), config)
