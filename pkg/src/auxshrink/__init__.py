"""Adaptive sparse mean estimation with auxiliary side information.

The package estimates a sparse high-dimensional mean from noisy primary
statistics by partitioning coordinates on an auxiliary sequence and
soft-thresholding each group at its own SURE-tuned level. It ships the
single-group and screening baselines, loss and side-information oracles,
scenario generators with a seeded Monte Carlo harness, and closed-form
evaluators for the asymptotic risk quantities.
"""

from .core import (
    DataBatch,
    FitResult,
    Grouping,
    HyperParams,
    apply_estimator,
    loss,
    partition,
    soft_estimate,
    sure,
    universal_threshold,
)
from .estimators import fit_auxscr, fit_ejs, fit_oracle_loss, fit_oracle_side
from .sim import (
    FAMILIES,
    RiskReport,
    ScenarioSpec,
    gen_asymptotic,
    gen_one_sample,
    gen_toy,
    gen_two_sample,
    generate,
    run_risk_experiment,
)
from .theory import (
    EfficiencyDiagnostics,
    MisclassRates,
    RegimeParams,
    efficiency_diagnostics,
    misclass_rates,
    opt_threshold_f,
    risk_factor_h,
    risk_gap_first_order,
)
from .tuner import (
    KSelection,
    SearchConfig,
    SweepCurve,
    fit_asus,
    fit_group_threshold,
    fit_sureshrink,
    select_k,
    sweep_tau,
    tau_grid,
    threshold_candidates,
)

__version__ = "0.1.0"

__all__ = [
    "DataBatch",
    "HyperParams",
    "Grouping",
    "FitResult",
    "universal_threshold",
    "soft_estimate",
    "partition",
    "sure",
    "loss",
    "apply_estimator",
    "SearchConfig",
    "SweepCurve",
    "KSelection",
    "tau_grid",
    "threshold_candidates",
    "fit_group_threshold",
    "fit_asus",
    "fit_sureshrink",
    "sweep_tau",
    "select_k",
    "fit_auxscr",
    "fit_oracle_loss",
    "fit_oracle_side",
    "fit_ejs",
    "FAMILIES",
    "ScenarioSpec",
    "RiskReport",
    "generate",
    "gen_one_sample",
    "gen_two_sample",
    "gen_asymptotic",
    "gen_toy",
    "run_risk_experiment",
    "RegimeParams",
    "EfficiencyDiagnostics",
    "MisclassRates",
    "opt_threshold_f",
    "risk_factor_h",
    "risk_gap_first_order",
    "efficiency_diagnostics",
    "misclass_rates",
]
