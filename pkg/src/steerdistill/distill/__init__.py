"""N-copy distillation protocol (analytic and Monte Carlo)."""

from .kernel import BACKEND
from .protocol import (
    BLOCK_TRIALS,
    AnalyticProbabilities,
    DistillationReport,
    EmpiricalStatistics,
    ProtocolConfig,
    analytic_probabilities,
    average_output_assemblage,
    filter_plan,
    initial_assemblage,
    initial_state,
    p_nd_formula,
    run_monte_carlo,
    simulate_counts,
    target_assemblage,
    target_state,
    violation_domain,
)

__all__ = [
    "BACKEND",
    "BLOCK_TRIALS",
    "AnalyticProbabilities",
    "DistillationReport",
    "EmpiricalStatistics",
    "ProtocolConfig",
    "analytic_probabilities",
    "average_output_assemblage",
    "filter_plan",
    "initial_assemblage",
    "initial_state",
    "p_nd_formula",
    "run_monte_carlo",
    "simulate_counts",
    "target_assemblage",
    "target_state",
    "violation_domain",
]
