"""Stream-adaptive fronthaul quantization and power allocation for MIMO links."""

__version__ = "0.1.0"

from .quantizer import (
    BussgangReport,
    ConvergenceError,
    DistortionModel,
    LloydMaxCodebook,
    bussgang_check,
    default_model,
    design_lloyd_max,
    distortion_factor,
    quantize,
)
from .rate_model import StreamAllocation, ideal_rate, stream_rate, sum_rate
from .channel import ChannelRealization, RicianConfig, generate_rician, scale_to_snr, svd_streams
from .allocation import (
    AllocationProblem,
    SolverSettings,
    brute_force_alloc,
    greedy_alloc,
    jbp_alloc,
    quantized_water_fill,
    ub_alloc,
    unaware_wf_alloc,
    water_fill,
)
from .simulation import SweepConfig, SweepResult, run_sweep, summarize
