"""Analog-domain (MiLAC-aided) LS and MMSE channel estimation for MIMO links."""

from ._validation import ConfigError, ConvergenceError, SingularNetworkError
from .channel import (
    ChannelModel,
    ChannelRealization,
    SystemConfig,
    build_channel_model,
    build_exponential_correlation,
    eigendecompose_correlation,
    sample_channel,
)
from .estimators import (
    DigitalLSEstimator,
    DigitalMMSEEstimator,
    MilacLSEstimator,
    MilacMMSEEstimator,
    make_estimator,
)
from .ls import (
    TrainingBatch,
    TrainingSchedule,
    collect_training,
    design_ls_training,
    dft_training_matrix,
    digital_ls_baseline,
    run_milac_ls,
    simulate_training_slot,
)
from .metrics import OpCounter, PaprReport, complexity_report, nmse, papr_report
from .mmse import (
    MmseEstimatorDiagonal,
    PowerAllocation,
    allocate_training_power,
    design_mmse_training,
    digital_mmse_baseline,
    run_milac_mmse,
    theoretical_mmse,
)
from .network import (
    LinearMap,
    MilacNetwork,
    admittance_for_combiner,
    admittance_for_precoder,
    combiner_from_admittance,
    precoder_from_admittance,
)

__version__ = "0.1.0"
