"""MIMO terahertz continuous-variable QKD link simulator."""
from .channel import (
    ArrayGeometry,
    LinkEnvironment,
    PathComponent,
    array_response,
    build_channel,
    path_loss,
    thermal_variance,
)
from .config import ExperimentConfig
from .errors import (
    DegenerateLinkError,
    DomainError,
    InvalidConfigError,
    InvalidInputError,
    NumericError,
    PilotRankError,
    ThzQkdError,
    TrialAbortedError,
)
from .experiment import emit_results, run_pipeline, single_point, sweep, threshold_analysis
from .keygen import DetectionScheme, KeygenLink, build_keygen_link, simulate_keygen_round
from .pilot import (
    ChannelEstimate,
    NoiseCovariances,
    PilotConfig,
    dft_pilot,
    estimation_error_covariance,
    ls_estimate,
    ml_noise_covariance,
    simulate_pilot_phase,
)
from .skr import (
    SkrReport,
    skr_collective,
    skr_collective_approx,
    skr_collective_ub,
    skr_individual,
    skr_individual_approx,
    skr_individual_ub,
    threshold_quantities,
)

__version__ = "0.1.0"
