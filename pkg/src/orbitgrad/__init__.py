"""Orbit-weighted denoising targets for symmetry-aware diffusion models."""

from .errors import (
    DegenerateWeights,
    InvalidAction,
    InvalidConfig,
    InvalidInput,
    InvalidSampler,
    InvalidShape,
    InvalidSpace,
    InvalidTime,
    NotAGroup,
    NotInSupport,
    NumericalDivergence,
    OrbitGradError,
)
from .estimator import (
    Dataset,
    OrbitTargetEstimate,
    exact_orbit_target,
    oracle_conditional_mean,
    rb_diffusion_target,
    rb_flow_velocity_target,
    snis_orbit_target,
)
from .groups import (
    GroupSampler,
    Permutation,
    Point,
    Reflection,
    Rotation,
    TorusTranslation,
    act,
    compose,
    enumeration,
    euclidean,
    invert,
    torus,
)
from .kernels import ForwardKernel, log_density, sample_forward
from .metrics import rmsd_to_nearest, wasserstein2_1d
from .model import OrbitDiffusion
from .net import Denoiser, init_denoiser, load_checkpoint, save_checkpoint
from .sampling import ancestral_sample, flow_euler_sample
from .schedule import (
    FlowCoefficients,
    NoiseSchedule,
    direct_velocity,
    flow_interpolate,
    make_torus_schedule,
    make_vp_schedule,
)
from .seeding import child_rng
from .train import (
    Problem,
    TrainConfig,
    TrainResult,
    bootstrap_variance_pvalue,
    equivariance_error,
    gradient_variance_sweep,
    train_loop,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Denoiser",
    "FlowCoefficients",
    "ForwardKernel",
    "GroupSampler",
    "NoiseSchedule",
    "OrbitDiffusion",
    "OrbitTargetEstimate",
    "Permutation",
    "Point",
    "Problem",
    "Reflection",
    "Rotation",
    "TorusTranslation",
    "TrainConfig",
    "TrainResult",
    "act",
    "ancestral_sample",
    "bootstrap_variance_pvalue",
    "child_rng",
    "compose",
    "direct_velocity",
    "enumeration",
    "equivariance_error",
    "euclidean",
    "exact_orbit_target",
    "flow_euler_sample",
    "flow_interpolate",
    "gradient_variance_sweep",
    "init_denoiser",
    "invert",
    "load_checkpoint",
    "log_density",
    "make_torus_schedule",
    "make_vp_schedule",
    "oracle_conditional_mean",
    "rb_diffusion_target",
    "rb_flow_velocity_target",
    "rmsd_to_nearest",
    "sample_forward",
    "save_checkpoint",
    "snis_orbit_target",
    "torus",
    "train_loop",
    "wasserstein2_1d",
]
