import numpy as np
import pytest

from unidenoise.budda import BuddaConfig
from unidenoise.dca import DcaConfig
from unidenoise.errors import InputError
from unidenoise.mca import ambiguous_distortion, build_mca
from unidenoise.model import Channel, DependentComponentSystem, Distribution
from unidenoise.pipeline import budda_system, denoise_budda, denoise_genie, denoise_udda, source_from_symbols
from unidenoise.sim import corrupt, synthesize_source

SYSTEM = DependentComponentSystem.binary(0.6, [0.85, 0.25, 0.7, 0.9])


@pytest.fixture(scope="module")
def sample():
    x = synthesize_source(SYSTEM.source, 20000, seed=1)
    return x, corrupt(x, SYSTEM.channels, seed=2)


def test_genie_matches_its_prediction(sample):
    x, y = sample
    out = denoise_genie(y, SYSTEM)
    assert ambiguous_distortion(x, out.estimate) == pytest.approx(out.decoder.expected_distortion, abs=0.01)


def test_budda_close_to_genie(sample):
    x, y = sample
    genie = ambiguous_distortion(x, denoise_genie(y, SYSTEM).estimate)
    out = denoise_budda(y, BuddaConfig())
    assert ambiguous_distortion(x, out.estimate) - genie < 0.01
    assert out.system == budda_system(out.details)


def test_udda_close_to_genie(sample):
    x, y = sample
    genie = ambiguous_distortion(x, denoise_genie(y, SYSTEM).estimate)
    out = denoise_udda(y, 2, DcaConfig(restarts=4, seed=3))
    assert ambiguous_distortion(x, out.estimate) - genie < 0.01


def test_udda_on_three_symbols():
    rng = np.random.default_rng(6)
    src = Distribution([0.5, 0.3, 0.2])
    chans = tuple(Channel(0.75 * np.eye(3) + 0.25 * rng.dirichlet(np.ones(3), size=3)) for _ in range(3))
    truth = DependentComponentSystem(src, chans)
    x = synthesize_source(src, 30000, seed=7)
    y = corrupt(x, chans, seed=8)
    out = denoise_udda(y, 3, DcaConfig(restarts=4, seed=9))
    genie = build_mca(truth).expected_distortion
    assert ambiguous_distortion(x, out.estimate, L=3) == pytest.approx(genie, abs=0.02)


def test_genie_copy_count_mismatch(sample):
    _, y = sample
    with pytest.raises(InputError):
        denoise_genie(y[:, :3], SYSTEM)


def test_source_from_symbols():
    assert np.array_equal(source_from_symbols([0, 2, 2, 1], 3).probs, [0.25, 0.25, 0.5])
