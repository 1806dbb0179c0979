"""mpop: multi-period orienteering solver and benchmark harness.

Selects and routes customer visits over a multi-day horizon, one tour per day,
maximizing summed customer scores under a daily working-time limit. Ships six
customer-scoring model variants, a two-phase multi-start ALNS heuristic, an
exact oracle for small instances, synthetic instance generation and a
prediction-error sensitivity lab.
"""

__version__ = "0.1.0"

from .core import (Customer, FeasibilityReport, Instance, SizeLimitError,
                   Solution, Tour, TravelMatrix, UnknownCustomerError,
                   Violation, check_feasible, duration, metrics,
                   objective_value, total_travel)
from .exact import ExactSolver, OracleResult, export_lp, min_tour_duration, solve_exact
from .scoring import (ScoreModel, build_mns, build_mws, build_ns, build_sabc,
                      build_wabc, build_wabc_class_means, build_ws,
                      relax_mandatory)
from .sensitivity import Scenario, evaluate_under_scenario, scenario_grid, simulate_scores
from .solver import RunStats, SolverConfig, multistart, run, solve_best_of

__all__ = [
    "Customer", "TravelMatrix", "Instance", "Tour", "Solution",
    "FeasibilityReport", "Violation", "UnknownCustomerError", "SizeLimitError",
    "check_feasible", "duration", "metrics", "objective_value", "total_travel",
    "ScoreModel", "build_ns", "build_mns", "build_sabc", "build_wabc",
    "build_wabc_class_means", "build_ws", "build_mws", "relax_mandatory",
    "ExactSolver", "OracleResult", "solve_exact", "min_tour_duration", "export_lp",
    "Scenario", "simulate_scores", "scenario_grid", "evaluate_under_scenario",
    "SolverConfig", "RunStats", "run", "multistart", "solve_best_of",
]
