"""Dependent component analysis: fit ``(r, V_1..V_K)`` to a joint output law.

The fit minimizes the squared L2 distance between the model's output tensor
and the target by block coordinate descent. Each channel row is an exact
block minimizer (a least-squares direction projected onto the simplex) and
the source is solved exactly as a simplex-constrained quadratic program, so
the objective never increases within a restart. Restarts draw from a flat
Dirichlet and the best L1 residual wins, ties going to the lower restart
index.

Only the permutation gauge is left free by the data (for K >= 3 and
invertible channels), so the winning system is reported in canonical
orientation: source sorted in nonincreasing order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, MaxRestartsExceeded
from .model import (
    Channel,
    DependentComponentSystem,
    Distribution,
    JointDistribution,
    flip_system,
    permutations,
    product_output,
    product_tensor,
)
from .sim import make_rng


@dataclass(frozen=True)
class DcaConfig:
    restarts: int = 16
    max_sweeps: int = 500
    # accepted L1 residual
    tolerance: float = 1e-6
    # stop a restart once a sweep lowers the objective by less than this fraction
    min_decrease: float = 1e-12
    # line search along the last sweep's direction (never raises the objective)
    extrapolate: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_sweeps < 1:
            raise InputError("restarts and max_sweeps must be positive")
        if self.tolerance <= 0:
            raise InputError("tolerance must be positive")


@dataclass(frozen=True)
class RestartResult:
    index: int
    system: DependentComponentSystem
    residual_l1: float
    residual_l2: float
    sweeps: int
    monotone: bool


@dataclass(frozen=True)
class DcaFit:
    system: DependentComponentSystem
    residual_l1: float
    residual_l2: float
    restarts_used: int
    converged: bool
    non_identifiable: bool = False
    warnings: tuple[str, ...] = ()
    restarts: tuple[RestartResult, ...] = field(default=(), repr=False)


def theta_forward(sys: DependentComponentSystem) -> JointDistribution:
    """Output law of a system; the map the fit inverts."""
    return product_output(sys)


def canonical_orientation(sys: DependentComponentSystem) -> DependentComponentSystem:
    """Relabel so the source is nonincreasing.

    Among permutations achieving that order the lexicographically smallest
    one is used, so an already sorted source is left alone.
    """
    p = sys.source.probs
    for tau in permutations(sys.L):
        # flipped source is p[argsort(tau)]
        if np.all(np.diff(p[np.argsort(tau)]) <= 0):
            return sys if np.array_equal(tau, np.arange(sys.L)) else flip_system(sys, tau)
    raise AssertionError("some permutation always sorts the source")


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex along the last axis."""
    v = np.asarray(v, dtype=float)
    n = v.shape[-1]
    if n == 2:
        t = np.clip(0.5 * (v[..., 0] - v[..., 1] + 1.0), 0.0, 1.0)
        return np.stack([t, 1.0 - t], axis=-1)
    u = -np.sort(-v, axis=-1)
    css = np.cumsum(u, axis=-1) - 1.0
    positive = u - css / np.arange(1, n + 1) > 0
    rho = n - 1 - np.argmax(positive[..., ::-1], axis=-1)
    theta = np.take_along_axis(css, rho[..., None], axis=-1) / (rho[..., None] + 1.0)
    return np.maximum(v - theta, 0.0)


def _simplex_qp(G: np.ndarray, h: np.ndarray) -> np.ndarray:
    """Minimize ``r'Gr/2 - h'r`` over the simplex by enumerating supports."""
    L = h.size
    if L == 2:
        # r = (t, 1-t): one-dimensional convex quadratic in t
        a = G[0, 0] - 2.0 * G[0, 1] + G[1, 1]
        g = G[0, 1] - G[1, 1] - h[0] + h[1]
        if a > 0:
            t = min(max(-g / a, 0.0), 1.0)
        else:
            t = 0.0 if g > 0 else 1.0
        return np.array([t, 1.0 - t])
    best, best_val = None, np.inf
    for size in range(1, L + 1):
        for S in itertools.combinations(range(L), size):
            S = list(S)
            A = np.zeros((size + 1, size + 1))
            A[:size, :size] = G[np.ix_(S, S)]
            A[:size, size] = 1.0
            A[size, :size] = 1.0
            rhs = np.append(h[S], 1.0)
            sol = np.linalg.lstsq(A, rhs, rcond=None)[0][:size]
            if np.any(sol < -1e-14) or abs(sol.sum() - 1.0) > 1e-9:
                continue
            r = np.zeros(L)
            r[S] = np.maximum(sol, 0.0)
            r /= r.sum()
            val = 0.5 * r @ G @ r - h @ r
            if val < best_val - 1e-18:
                best, best_val = r, val
    return best


def _others_tensor(r: np.ndarray, V: np.ndarray, j: int) -> np.ndarray:
    """``M[x, :] = r(x) * kron_{i != j} V_i[x, :]`` flattened, shape ``(L, L^(K-1))``."""
    L = r.size
    others = [V[i] for i in range(V.shape[0]) if i != j]
    M = r.reshape(L, 1)
    for w in others:
        M = (M[:, :, None] * w[:, None, :]).reshape(L, -1)
    return M


def _objective(q: np.ndarray, r: np.ndarray, V: np.ndarray) -> float:
    return float(((product_tensor(r, list(V)) - q) ** 2).sum())


def _sweep(q: np.ndarray, r: np.ndarray, V: np.ndarray) -> None:
    """One pass of block updates, in place: every channel row, then the source."""
    K, L = V.shape[0], r.size
    for j in range(K):
        Q = np.moveaxis(q, j, 0).reshape(L, -1)
        M = _others_tensor(r, V, j)
        for x in range(L):
            m = M[x]
            mm = m @ m
            if mm <= 0:
                continue
            R = Q - V[j].T @ M + np.outer(V[j, x], m)
            V[j, x] = project_simplex(R @ m / mm)
    T = _others_tensor(np.ones(L), V, -1)
    G = T @ T.T
    h = T @ q.reshape(-1)
    r[:] = _simplex_qp(G, h)


def _extrapolate(q, r, V, r_prev, V_prev, obj, factors=(8.0, 4.0, 2.0, 1.0)):
    """Try stepping past the sweep along its own direction; keep the first improvement."""
    for a in factors:
        r_try = project_simplex(r + a * (r - r_prev))
        V_try = project_simplex(V + a * (V - V_prev))
        val = _objective(q, r_try, V_try)
        if val < obj:
            return r_try, V_try, val
    return r, V, obj


def _run_restart(q: np.ndarray, rng: np.random.Generator, config: DcaConfig):
    L, K = q.shape[0], q.ndim
    r = rng.dirichlet(np.ones(L))
    V = rng.dirichlet(np.ones(L), size=(K, L))
    obj = _objective(q, r, V)
    # L2 floor that guarantees an L1 residual well inside the tolerance
    floor = (1e-3 * config.tolerance) ** 2 / q.size
    monotone = True
    sweeps = 0
    for sweeps in range(1, config.max_sweeps + 1):
        r_prev, V_prev = r.copy(), V.copy()
        _sweep(q, r, V)
        new = _objective(q, r, V)
        if new > obj + 1e-14 * obj + 1e-30:
            monotone = False
        if config.extrapolate:
            r, V, new = _extrapolate(q, r, V, r_prev, V_prev, new)
        done = obj - new < config.min_decrease * obj or new <= floor
        obj = new
        if done:
            break
    return r, V, sweeps, monotone


def _as_system(r: np.ndarray, V: np.ndarray) -> DependentComponentSystem:
    return DependentComponentSystem(
        Distribution(r / r.sum()),
        tuple(Channel(v / v.sum(axis=1, keepdims=True)) for v in V),
    )


def dca_fit(q: JointDistribution, config: DcaConfig = DcaConfig(), strict: bool = False) -> DcaFit:
    """Fit a dependent component system to ``q``.

    Every restart runs to completion so the outcome does not depend on
    evaluation order. With ``strict=True`` a fit whose best L1 residual
    exceeds ``config.tolerance`` raises MaxRestartsExceeded (the fit is
    attached as ``exc.fit``); otherwise it is returned with
    ``converged=False``.
    """
    target = q.probs
    base = make_rng(config.seed).bit_generator
    results = []
    for k in range(config.restarts):
        rng = np.random.Generator(base.jumped(k))
        r, V, sweeps, monotone = _run_restart(target, rng, config)
        sys = canonical_orientation(_as_system(r, V))
        diff = product_output(sys).probs - target
        results.append(
            RestartResult(
                index=k,
                system=sys,
                residual_l1=float(np.abs(diff).sum()),
                residual_l2=float(np.sqrt((diff**2).sum())),
                sweeps=sweeps,
                monotone=monotone,
            )
        )
    best = min(results, key=lambda res: (res.residual_l1, res.index))
    warnings = []
    if q.K < 3:
        warnings.append(f"K={q.K} < 3: the system is not identifiable from its output law")
    if best.system.source.probs.min() < 1e-3:
        warnings.append("fitted source puts mass < 1e-3 on some symbol")
    singular = [j for j, ch in enumerate(best.system.channels) if abs(np.linalg.det(ch.matrix)) < 1e-3]
    if singular:
        warnings.append(f"fitted channels {[j + 1 for j in singular]} are close to singular")
    converged = best.residual_l1 <= config.tolerance
    fit = DcaFit(
        system=best.system,
        residual_l1=best.residual_l1,
        residual_l2=best.residual_l2,
        restarts_used=len(results),
        converged=converged,
        non_identifiable=bool(warnings) and (q.K < 3 or bool(singular)),
        warnings=tuple(warnings),
        restarts=tuple(results),
    )
    if strict and not converged:
        exc = MaxRestartsExceeded(
            f"best L1 residual {best.residual_l1:.3g} after {len(results)} restarts exceeds {config.tolerance:g}"
        )
        exc.fit = fit
        raise exc
    return fit
