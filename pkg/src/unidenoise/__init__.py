"""Universal denoising of discrete data observed through several unknown noisy channels."""

from .budda import BuddaConfig, BuddaEstimate, budda_estimate, e_k, f_k
from .dca import DcaConfig, DcaFit, dca_fit
from .empirical import joint_empirical
from .errors import DenoiseError, EstimationError, InputError
from .mca import McaDecoder, ambiguous_distortion, build_mca, decode, mca_distortion
from .model import (
    Channel,
    DependentComponentSystem,
    DistortionMeasure,
    Distribution,
    JointDistribution,
    bsc,
    flip_system,
    product_output,
)
from .pipeline import denoise_budda, denoise_genie, denoise_udda
from .sim import corrupt, synthesize_source

__version__ = "0.1.0"
