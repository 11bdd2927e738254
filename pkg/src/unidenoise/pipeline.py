"""End-to-end denoisers: estimate a system, build its MCA decoder, decode rows."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

from .budda import BuddaConfig, BuddaEstimate, budda_estimate
from .dca import DcaConfig, DcaFit, dca_fit
from .empirical import as_observations, joint_empirical
from .errors import InputError
from .mca import McaDecoder, build_mca, decode
from .model import DependentComponentSystem, DistortionMeasure, Distribution, bsc


@dataclass(frozen=True)
class Denoised:
    estimate: np.ndarray
    system: DependentComponentSystem
    decoder: McaDecoder
    details: Any = None


def budda_system(est: BuddaEstimate) -> DependentComponentSystem:
    return DependentComponentSystem(est.p_hat, tuple(bsc(b) for b in est.b_hat))


def denoise_budda(obs, config: BuddaConfig = BuddaConfig(), d: DistortionMeasure | None = None) -> Denoised:
    y = as_observations(obs, 2)
    est = budda_estimate(y, config)
    sys = budda_system(est)
    dec = build_mca(sys, d)
    return Denoised(decode(dec, y), sys, dec, est)


def denoise_udda(
    obs, L: int = 2, config: DcaConfig = DcaConfig(), d: DistortionMeasure | None = None
) -> Denoised:
    y = as_observations(obs, L)
    fit: DcaFit = dca_fit(joint_empirical(y, L), config)
    dec = build_mca(fit.system, d)
    return Denoised(decode(dec, y), fit.system, dec, fit)


def denoise_genie(obs, sys: DependentComponentSystem, d: DistortionMeasure | None = None) -> Denoised:
    y = as_observations(obs, sys.L)
    if y.shape[1] != sys.K:
        raise InputError(f"system has {sys.K} channels, observations have {y.shape[1]} copies")
    dec = build_mca(sys, d)
    return Denoised(decode(dec, y), sys, dec)


def source_from_symbols(x, L: int) -> Distribution:
    counts = np.bincount(np.asarray(x).ravel(), minlength=L)
    return Distribution(counts / counts.sum())
