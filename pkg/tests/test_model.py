import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from conftest import general_systems
from unidenoise.errors import InputError
from unidenoise.model import (
    Channel,
    DependentComponentSystem,
    DistortionMeasure,
    Distribution,
    JointDistribution,
    apply_channel,
    bsc,
    bsc_param,
    compose_bsc,
    dcs_distance,
    flip_system,
    permutations,
    product_output,
)


def as_lists(sys):
    return list(sys.source.probs), [ch.matrix.tolist() for ch in sys.channels]


# -- types --------------------------------------------------------------------


def test_distribution_renormalizes_within_tolerance():
    d = Distribution([0.5, 0.5 + 5e-13])
    assert d.probs.sum() == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("bad", [[0.6, 0.6], [1.2, -0.2], [1.0], [np.nan, 1.0]])
def test_distribution_rejects_invalid(bad):
    with pytest.raises(InputError):
        Distribution(bad)


def test_distribution_is_read_only():
    d = Distribution([0.3, 0.7])
    with pytest.raises(ValueError):
        d.probs[0] = 0.5


def test_channel_rejects_row_off_by_more_than_tolerance():
    with pytest.raises(InputError, match="row 1"):
        Channel([[1.0, 0.0], [0.5, 0.4]])


def test_channel_rejects_non_square():
    with pytest.raises(InputError):
        Channel([[0.5, 0.5, 0.0], [0.5, 0.5, 0.0]])


def test_hamming_penalizes_disagreement():
    d = DistortionMeasure.hamming(3).matrix
    assert np.array_equal(d, 1.0 - np.eye(3))


def test_distortion_rejects_negative():
    with pytest.raises(InputError):
        DistortionMeasure([[0, -1], [1, 0]])


def test_joint_distribution_cell_cap():
    with pytest.raises(InputError):
        JointDistribution(np.full((2,) * 21, 2.0**-21))


def test_bsc_param_roundtrip():
    assert bsc_param(bsc(0.71)) == 0.71
    with pytest.raises(InputError):
        bsc_param(Channel([[0.9, 0.1], [0.2, 0.8]]))


def test_system_rejects_mixed_alphabets():
    with pytest.raises(InputError):
        DependentComponentSystem(Distribution([0.5, 0.5]), (Channel.identity(3),))


# -- apply_channel ------------------------------------------------------------


def test_apply_identity():
    out = apply_channel(Channel.identity(2), Distribution([0.7, 0.3]))
    assert np.allclose(out.probs, [0.7, 0.3], atol=0)


def test_apply_bsc():
    out = apply_channel(bsc(0.7), Distribution([0.7, 0.3]))
    assert np.allclose(out.probs, [0.58, 0.42], atol=1e-15)


@given(st.floats(0, 1))
def test_apply_useless_bsc_gives_uniform(p0):
    out = apply_channel(bsc(0.5), Distribution.binary(p0))
    assert np.allclose(out.probs, [0.5, 0.5], atol=1e-15)


def test_apply_dimension_mismatch():
    with pytest.raises(InputError):
        apply_channel(Channel.identity(3), Distribution([0.5, 0.5]))


# -- product_output -----------------------------------------------------------


def test_product_identity_channels_is_diagonal():
    q = product_output(DependentComponentSystem.binary(0.5, [1.0, 1.0])).probs
    assert np.array_equal(q, [[0.5, 0.0], [0.0, 0.5]])


def test_product_two_bscs():
    q = product_output(DependentComponentSystem.binary(0.5, [0.9, 0.8])).probs
    assert np.allclose(q, [[0.37, 0.13], [0.13, 0.37]], atol=1e-15)


def test_product_example_three_copies_matches_enumeration():
    sys = DependentComponentSystem.binary(0.5, [0.1, 0.45, 0.9])
    expected = oracles.joint_tensor([0.5, 0.5], [oracles.bsc_matrix(b) for b in (0.1, 0.45, 0.9)])
    q = product_output(sys).probs
    assert q.shape == (2, 2, 2)
    assert np.allclose(q, expected, atol=1e-15)
    correct = oracles.majority_correctness([0.5, 0.5], [oracles.bsc_matrix(b) for b in (0.1, 0.45, 0.9)])
    assert correct == pytest.approx(0.459, abs=1e-12)


@given(general_systems())
def test_product_matches_enumeration(sys):
    p, chans = as_lists(sys)
    assert np.allclose(product_output(sys).probs, oracles.joint_tensor(p, chans), atol=1e-12)


# -- dcs_distance -------------------------------------------------------------


def test_dcs_identical_is_zero():
    s = DependentComponentSystem.binary(0.3, [0.9, 0.2])
    assert dcs_distance(s, s) == 0.0


def test_dcs_single_channel():
    a = DependentComponentSystem.binary(0.4, [0.9])
    b = DependentComponentSystem.binary(0.4, [0.8])
    assert dcs_distance(a, b) == pytest.approx(0.2, abs=1e-15)


def test_dcs_disjoint_sources():
    a = DependentComponentSystem.binary(1.0, [0.9])
    b = DependentComponentSystem.binary(0.0, [0.9])
    assert dcs_distance(a, b) == 2.0


def test_dcs_shape_mismatch():
    with pytest.raises(InputError):
        dcs_distance(DependentComponentSystem.binary(0.5, [0.9]), DependentComponentSystem.binary(0.5, [0.9, 0.9]))


@given(general_systems(K_max=2), general_systems(K_max=2))
def test_dcs_matches_oracle_and_is_symmetric(a, b):
    if (a.K, a.L) != (b.K, b.L):
        return
    ref = oracles.dcs(as_lists(a), as_lists(b))
    assert dcs_distance(a, b) == pytest.approx(ref, abs=1e-12)
    assert dcs_distance(a, b) == dcs_distance(b, a)


@given(st.data())
def test_dcs_triangle_inequality(data):
    L = data.draw(st.integers(2, 3))
    K = data.draw(st.integers(1, 3))
    systems = []
    for _ in range(3):
        s = data.draw(general_systems(L_max=3, K_max=3))
        while (s.L, s.K) != (L, K):
            s = data.draw(general_systems(L_max=3, K_max=3))
        systems.append(s)
    a, b, c = systems
    assert dcs_distance(a, c) <= dcs_distance(a, b) + dcs_distance(b, c) + 1e-12


@given(st.data())
def test_output_law_is_continuous_in_dcs_distance(data):
    a = data.draw(general_systems())
    b = data.draw(general_systems())
    if (a.K, a.L) != (b.K, b.L):
        return
    assert product_output(a).l1(product_output(b)) <= dcs_distance(a, b) + 1e-12


# -- compose_bsc --------------------------------------------------------------


def test_compose_examples():
    assert compose_bsc(1.0, 0.37) == pytest.approx(0.37, abs=1e-15)
    assert compose_bsc(0.9, 0.8) == pytest.approx(0.74, abs=1e-15)
    assert compose_bsc(0.5, 0.5) == 0.5


@given(st.floats(0, 1), st.floats(0, 1))
def test_compose_is_matrix_product(a, b):
    m = bsc(a).matrix @ bsc(b).matrix
    assert m[0, 0] == pytest.approx(compose_bsc(a, b), abs=1e-14)
    assert m[0, 0] == pytest.approx(m[1, 1], abs=1e-14)


# -- flip_system --------------------------------------------------------------


def test_flip_identity_is_noop():
    s = DependentComponentSystem.binary(0.7, [0.9, 0.3])
    f = flip_system(s, [0, 1])
    assert f.source == s.source and f.channels == s.channels


def test_flip_binary():
    f = flip_system(DependentComponentSystem.binary(0.7, [0.9]), [1, 0])
    assert np.allclose(f.source.probs, [0.3, 0.7], atol=1e-15)
    assert np.allclose(f.channels[0].matrix, bsc(0.1).matrix, atol=1e-15)


def test_flip_rejects_non_permutation():
    with pytest.raises(InputError):
        flip_system(DependentComponentSystem.binary(0.7, [0.9]), [0, 0])


@given(general_systems())
def test_flip_preserves_output_law(sys):
    q = product_output(sys).probs
    for tau in permutations(sys.L):
        assert np.allclose(product_output(flip_system(sys, tau)).probs, q, atol=1e-12, rtol=0)


@given(general_systems())
def test_channel_rows_stay_stochastic(sys):
    for tau in permutations(sys.L):
        for ch in flip_system(sys, tau).channels:
            assert np.all(np.abs(ch.matrix.sum(axis=1) - 1.0) <= 1e-12)


def test_permutations_are_lexicographic():
    assert [tuple(t) for t in permutations(3)] == list(itertools.permutations(range(3)))
