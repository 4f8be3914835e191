"""Regularized convex relaxation (RCR) detection for massive MIMO.

Monte-Carlo simulation of the RCR detector together with the asymptotic
MSE / symbol-error predictions obtained from a scalar min-max problem.
"""

from .constellation import Constellation, ConfigurationError, InputError
from .relaxation import RelaxationSet, default_for
from .detector import SolverSettings, DetectionOutcome, rcr_solve, rls_solve, detect
from .predictor import (
    PredictorParams,
    SaddleSolution,
    Prediction,
    SaddleError,
    objective,
    expectation_dist_sq,
    solve_saddle,
    predict_mse,
    predict_sep_generic,
    predict_sep_psk,
    predict,
    optimal_zeta,
)
from .simulate import (
    ScenarioParams,
    TrialResult,
    AggregateResult,
    gen_channel,
    gen_noise,
    run_trial,
    run_scenario,
    sweep,
)

__version__ = "0.1.0"
