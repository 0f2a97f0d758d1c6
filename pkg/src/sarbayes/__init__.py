"""Sampling-based SAR image formation with uncertainty quantification."""

__version__ = "0.1.0"

from .baselines import L1Config, l1_reconstruct, ml_image, soft_threshold
from .diagnostics import RhatReport, between_variance, check_all, rhat, within_variance
from .gibbs import ChainState, GibbsConfig, SampleStore, gibbs_step, run_chains
from .kernels import HyperParameters, RngStream
from .nufft import FourierCoords, GridSpec, MatrixOperator, NufftOperator, direct_dft
from .scene import PhaseHistory, ReflectivityImage, SceneSpec, generate_scene, synthesize
from .summaries import PosteriorSummary, summarize, to_db
