"""Unrolled compound-Gaussian estimation networks with certified
sensitivity constants and generalization-error bounds."""

from .backend import active_backend
from .bounds import (
    BoundReport,
    LossSpec,
    ScalingFit,
    SweepSpec,
    cor1_comparator,
    cor2_comparator,
    covering_log_bound,
    dim_cov,
    dudley_closed_form,
    dudley_integral_quad,
    geb_bound,
    sample_complexity,
    scaling_fit,
    sweep_bound,
    ymax_estimate,
)
from .datagen import CgDataSpec, CgDataset, GapReport, empirical_gap, generate_cg_dataset, mae_loss
from .lipschitz import (
    AggregateConstants,
    StepConstants,
    aggregate_step,
    cgnet_step_constants,
    datafit_grad_constants,
    drcgnet_step_constants,
    fc_lipschitz,
    network_constants,
    network_constants_exact,
    step_constants,
    tikhonov_constants,
    tikhonov_constants_exact,
)
from .model import (
    CovarianceSpec,
    MeasurementModel,
    NumericalFailure,
    SignalBounds,
    SpdMatrix,
    ball_project,
    build_covariance,
    cost_eval,
    mrelu,
    spectral_norm,
    tikhonov_solve,
)
from .networks import (
    ForwardTrace,
    NetworkConfig,
    ParameterSet,
    cgnet_scale_step,
    drcgnet_scale_step,
    forward,
    gcgls_run,
    grad_z_F,
    parameter_distance,
    sample_covariance,
    sample_parameters,
    subnet_forward,
    validate_parameters,
)
from .verify import TARGETS, TrialDims, VerificationReport, verify_lipschitz

__version__ = "0.1.0"
