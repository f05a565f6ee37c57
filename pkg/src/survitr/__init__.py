"""Optimal individualized treatment rules for bivariate right-censored outcomes.

The library fits per-arm lognormal accelerated failure time marginals with
an adaptive prediction-powered estimating equation, links them through an
Archimedean copula into a joint survival surface, and trains a softmax
neural policy that maximizes estimated joint survival at a target time
pair. A simulation harness and a command-line interface reproduce the
benchmark scenarios end to end.
"""

from .data import Dataset, Observation, WeightConfig, load_dataset, save_dataset, split_by_arm
from .censoring import CensoringModel, fit_cox_censoring, fit_km_censoring, ipcw_weights
from .forest import ForestHyperparams, ForestPredictor, fit_ipcw_forest
from .marginal import MarginalFit, app_score, estimate_kappa, marginal_survival, solve_app_beta
from .copula import CopulaFamily, CopulaFit, JointModel, fit_theta, joint_survival, select_link_cv
from .policy import PolicyNetwork, TrainConfig, decide, init_network, train
from .pipeline import FitConfig, ItrModel, fit_itr
from .model_io import load_model, save_model
from .simulation import (
    ScenarioSpec,
    calibrate_tau,
    compute_otia,
    generate_dataset,
    oracle_decisions,
    oracle_policy,
    run_replications,
    true_joint_survival,
)

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Observation",
    "WeightConfig",
    "load_dataset",
    "save_dataset",
    "split_by_arm",
    "CensoringModel",
    "fit_km_censoring",
    "fit_cox_censoring",
    "ipcw_weights",
    "ForestHyperparams",
    "ForestPredictor",
    "fit_ipcw_forest",
    "MarginalFit",
    "app_score",
    "solve_app_beta",
    "estimate_kappa",
    "marginal_survival",
    "CopulaFamily",
    "CopulaFit",
    "JointModel",
    "fit_theta",
    "joint_survival",
    "select_link_cv",
    "PolicyNetwork",
    "TrainConfig",
    "init_network",
    "decide",
    "train",
    "FitConfig",
    "ItrModel",
    "fit_itr",
    "save_model",
    "load_model",
    "ScenarioSpec",
    "generate_dataset",
    "calibrate_tau",
    "true_joint_survival",
    "oracle_policy",
    "oracle_decisions",
    "compute_otia",
    "run_replications",
    "__version__",
]
