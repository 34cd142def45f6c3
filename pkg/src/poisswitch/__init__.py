"""Two-regime optimal switching where switches happen only at Poisson
arrival times, for a geometric Brownian motion state.

Finite-difference values, an independent quadrature oracle, switching-region
classification and Monte Carlo policy checks.
"""
from .model import (ModelSpec, ProfitSpec, ValidatedModel, ValidationError, Violation,
                    check, f_limit, normalize, validate)
from .odesolver import (BoundCheck, Grid, GridError, NonConvergenceError, SolverError,
                        ValueSolution, build_grid, check_bounds, interpolate, residual,
                        solve_penalized_system, zero_state_values)
from .oracle import Comparison, OracleError, compare, quadrature_scheme, resolvent, value_iteration
from .regions import (ClassificationError, RegionReport, classify, detect_regions,
                      g_at_zero, g_functions, verify)
from .simulate import (BudgetError, PathConfig, PolicySpec, SimulationReport,
                       first_arrival_discount, policy_tournament, simulate_policies,
                       simulate_policy)
from .config import ConfigError, RunConfig, load_config, load_preset

__version__ = "0.1.0"

__all__ = [
    "ModelSpec", "ProfitSpec", "ValidatedModel", "ValidationError", "Violation", "check",
    "f_limit", "normalize", "validate", "BoundCheck", "Grid", "GridError",
    "NonConvergenceError", "SolverError", "ValueSolution", "build_grid", "check_bounds",
    "interpolate", "residual", "solve_penalized_system", "zero_state_values", "Comparison",
    "OracleError", "compare", "quadrature_scheme", "resolvent", "value_iteration",
    "ClassificationError", "RegionReport", "classify", "detect_regions", "g_at_zero",
    "g_functions", "verify", "BudgetError", "PathConfig", "PolicySpec", "SimulationReport",
    "first_arrival_discount", "policy_tournament", "simulate_policies", "simulate_policy",
    "ConfigError", "RunConfig", "load_config", "load_preset",
]
