"""Epoch-wise double descent in early-stopped gradient descent.

Linear models: closed-form risk curves, Monte-Carlo risk, and the stepsize
schedule that aligns every bias-variance minimum.  Two-layer ReLU networks:
hand-derived Jacobian, per-layer stepsizes, arc-cosine kernels and spectral
bounds.
"""

from .exceptions import ConfigError, DegenerateGramError, DivergenceError, NumericalError
from .linear_model import Dataset, LinearModelSpec, orthogonal_design, population_risk, sample_dataset
from .gd import (
    EarlyStoppedGDRegressor,
    RiskCurve,
    StepsizeSchedule,
    Trajectory,
    gd_fit,
    mc_risk,
    proximal_closed_form,
    proximal_trajectory,
    risk_expression,
    u_curve,
)
from .stepsize import (
    DoubleDescentReport,
    detect_double_descent,
    optimal_stepsizes,
    optimal_stopping_time,
    u_curve_derivative,
    u_min_value,
)
from .two_layer import (
    TrainLog,
    TwoLayerParams,
    TwoLayerReLURegressor,
    forward,
    init_params,
    jacobian,
    test_risk,
    train,
)
from .kernels import (
    GramSpectrum,
    gram_matrix,
    kernel_k1,
    kernel_k2,
    linear_residual,
    mc_gram_estimate,
    param_distance_bound,
    risk_bound,
    spectrum,
    train_error_bound,
)
from .jacobian_analysis import JacobianSplit, layer_split_svd
from .experiments import ExperimentConfig, load_config, run_appendix_a, run_fig2, run_fig3

__version__ = "0.1.0"
