import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from conftest import random_binary_system
from unidenoise.dca import (
    DcaConfig,
    _simplex_qp,
    canonical_orientation,
    dca_fit,
    project_simplex,
    theta_forward,
)
from unidenoise.errors import InputError, MaxRestartsExceeded
from unidenoise.model import (
    Channel,
    DependentComponentSystem,
    Distribution,
    JointDistribution,
    bsc,
    dcs_distance,
    flip_system,
    product_output,
)


def recovered(fit_sys, truth, tol=1e-3):
    return min(dcs_distance(fit_sys, truth), dcs_distance(fit_sys, flip_system(truth, [1, 0]))) < tol


# -- simplex machinery --------------------------------------------------------


@given(arrays(np.float64, st.integers(2, 6), elements=st.floats(-5, 5)))
def test_projection_satisfies_optimality_conditions(v):
    x = project_simplex(v)
    assert np.all(x >= 0) and abs(x.sum() - 1) < 1e-12
    # x = max(v - theta, 0) for one threshold theta
    active = x > 1e-12
    theta = np.mean(v[active] - x[active])
    assert np.allclose(v[active] - x[active], theta, atol=1e-9)
    assert np.all(v[~active] <= theta + 1e-9)


def test_projection_is_batched():
    v = np.array([[0.2, 0.9, -0.1], [3.0, 0.0, 0.0]])
    out = project_simplex(v)
    for row, proj in zip(v, out):
        assert np.allclose(project_simplex(row), proj)
    assert np.allclose(out[1], [1.0, 0.0, 0.0])


@given(
    arrays(np.float64, (2, 2), elements=st.floats(-1, 1)),
    arrays(np.float64, 2, elements=st.floats(-1, 1)),
)
def test_two_point_qp_matches_grid(B, h):
    G = B @ B.T
    r = _simplex_qp(G, h)
    ts = np.linspace(0, 1, 2001)
    vals = [0.5 * np.array([t, 1 - t]) @ G @ np.array([t, 1 - t]) - h @ np.array([t, 1 - t]) for t in ts]
    got = 0.5 * r @ G @ r - h @ r
    assert got <= min(vals) + 1e-12


@given(
    arrays(np.float64, (3, 3), elements=st.floats(-1, 1)),
    arrays(np.float64, 3, elements=st.floats(-1, 1)),
)
def test_three_point_qp_matches_grid(B, h):
    G = B @ B.T + 1e-9 * np.eye(3)
    r = _simplex_qp(G, h)
    assert np.all(r >= 0) and abs(r.sum() - 1) < 1e-12
    grid = np.linspace(0, 1, 101)
    best = min(
        0.5 * np.array([a, b, 1 - a - b]) @ G @ np.array([a, b, 1 - a - b]) - h @ np.array([a, b, 1 - a - b])
        for a, b in itertools.product(grid, grid)
        if a + b <= 1 + 1e-12
    )
    assert 0.5 * r @ G @ r - h @ r <= best + 1e-12


# -- orientation and forward map ----------------------------------------------


def test_sorted_source_is_unchanged():
    s = DependentComponentSystem.binary(0.7, [0.9])
    assert canonical_orientation(s) is s


def test_unsorted_source_is_flipped():
    c = canonical_orientation(DependentComponentSystem.binary(0.3, [0.9]))
    assert np.allclose(c.source.probs, [0.7, 0.3])
    assert np.allclose(c.channels[0].matrix, bsc(0.1).matrix)


def test_uniform_source_keeps_identity():
    s = DependentComponentSystem(Distribution.uniform(3), (Channel(np.roll(np.eye(3), 1, axis=1)),))
    assert canonical_orientation(s) is s


def test_orientation_three_symbols():
    s = DependentComponentSystem(Distribution([0.2, 0.5, 0.3]), (Channel(np.eye(3)),))
    c = canonical_orientation(s)
    assert np.allclose(c.source.probs, [0.5, 0.3, 0.2])
    assert np.allclose(product_output(c).probs, product_output(s).probs)


@pytest.mark.parametrize(
    "p0,bs",
    [(0.5, [1.0, 1.0]), (0.5, [0.9, 0.8]), (0.5, [0.1, 0.45, 0.9])],
)
def test_theta_forward_is_product_output(p0, bs):
    s = DependentComponentSystem.binary(p0, bs)
    ref = oracles.joint_tensor(list(s.source.probs), [oracles.bsc_matrix(b) for b in bs])
    assert np.allclose(theta_forward(s).probs, ref, atol=1e-15)


# -- dca_fit ------------------------------------------------------------------


def test_fit_identity_channels():
    truth = DependentComponentSystem(Distribution([0.7, 0.3]), (Channel.identity(2),) * 3)
    fit = dca_fit(product_output(truth))
    assert fit.residual_l1 < 1e-8 and fit.converged
    assert np.allclose(fit.system.source.probs, [0.7, 0.3], atol=1e-8)
    for ch in fit.system.channels:
        assert np.allclose(ch.matrix, np.eye(2), atol=1e-4)


def test_fit_image_channels():
    truth = DependentComponentSystem.binary(0.55, [0.71, 0.32, 0.41])
    fit = dca_fit(product_output(truth))
    assert fit.converged and not fit.non_identifiable
    assert recovered(fit.system, truth)


def test_two_copies_are_not_identifiable():
    fit = dca_fit(JointDistribution(np.full((2, 2), 0.25)), DcaConfig(seed=0))
    assert fit.converged and fit.residual_l1 < 1e-8
    assert fit.non_identifiable and any("K=2" in w for w in fit.warnings)
    spread = max(
        dcs_distance(a.system, b.system)
        for a, b in itertools.combinations(fit.restarts, 2)
        if max(a.residual_l1, b.residual_l1) < 1e-8
    )
    assert spread > 0.1


def test_fit_is_self_consistent_and_sorted():
    truth = DependentComponentSystem.binary(0.3, [0.8, 0.25, 0.9])
    q = product_output(truth)
    fit = dca_fit(q, DcaConfig(restarts=4, seed=5))
    assert theta_forward(fit.system).l1(q) == pytest.approx(fit.residual_l1, abs=1e-12)
    assert np.all(np.diff(fit.system.source.probs) <= 0)
    assert all(r.monotone for r in fit.restarts)


def test_fit_is_deterministic():
    q = product_output(DependentComponentSystem.binary(0.6, [0.8, 0.3, 0.7]))
    cfg = DcaConfig(restarts=3, seed=11)
    a, b = dca_fit(q, cfg), dca_fit(q, cfg)
    assert a.residual_l1 == b.residual_l1
    assert a.system.source == b.system.source and a.system.channels == b.system.channels


def test_winner_has_smallest_residual():
    q = product_output(DependentComponentSystem.binary(0.6, [0.8, 0.3, 0.7]))
    fit = dca_fit(q, DcaConfig(restarts=5, seed=2))
    best = min(fit.restarts, key=lambda r: (r.residual_l1, r.index))
    assert fit.residual_l1 == best.residual_l1


def test_objective_never_increases_on_noisy_target(rng):
    counts = rng.integers(1, 50, size=(3, 3, 3)).astype(float)
    fit = dca_fit(JointDistribution(counts / counts.sum()), DcaConfig(restarts=3, max_sweeps=200, seed=1))
    assert all(r.monotone for r in fit.restarts)


def test_strict_mode_raises_with_fit_attached():
    rng = np.random.default_rng(3)
    counts = rng.integers(1, 50, size=(2, 2, 2, 2)).astype(float)
    q = JointDistribution(counts / counts.sum())
    cfg = DcaConfig(restarts=2, max_sweeps=50, seed=0)
    with pytest.raises(MaxRestartsExceeded) as info:
        dca_fit(q, cfg, strict=True)
    assert not info.value.fit.converged
    assert not dca_fit(q, cfg).converged


def test_three_symbol_fit():
    rng = np.random.default_rng(8)
    src = Distribution([0.5, 0.3, 0.2])
    chans = tuple(Channel(0.7 * np.eye(3) + 0.3 * rng.dirichlet(np.ones(3), size=3)) for _ in range(3))
    truth = DependentComponentSystem(src, chans)
    fit = dca_fit(product_output(truth), DcaConfig(seed=4))
    assert fit.converged
    assert dcs_distance(fit.system, canonical_orientation(truth)) < 1e-3


def test_config_validation():
    with pytest.raises(InputError):
        DcaConfig(restarts=0)
    with pytest.raises(InputError):
        DcaConfig(tolerance=0.0)


def test_recovers_random_systems():
    rng = np.random.default_rng(2024)
    ok = 0
    for _ in range(100):
        truth = random_binary_system(rng, K=3, margin=0.1, p_lo=0.2, p_hi=0.8)
        ok += recovered(dca_fit(product_output(truth)).system, truth)
    assert ok >= 95
