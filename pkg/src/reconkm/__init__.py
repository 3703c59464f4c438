"""Reconciliation k-median: choose k representatives that serve their
clients well and also sit close to each other."""

from .bounds import BoundsReport, OracleResult, brute_force, mpd_oracle, spectral_bounds
from .experiments import SweepRecord, SweepSpec, frequency_table, generate_synthetic, polarity_l2, polarity_stddev, run_sweep
from .instance import Instance, MetricReport, load_instance, validate_metric
from .objective import Assignment, CostBreakdown, assign_clients, cost, swap_delta
from .solver import RunStats, Solution, SolverConfig, local_search, solve

__all__ = [
    "Assignment",
    "BoundsReport",
    "CostBreakdown",
    "Instance",
    "MetricReport",
    "OracleResult",
    "RunStats",
    "Solution",
    "SolverConfig",
    "SweepRecord",
    "SweepSpec",
    "assign_clients",
    "brute_force",
    "cost",
    "frequency_table",
    "generate_synthetic",
    "load_instance",
    "local_search",
    "mpd_oracle",
    "polarity_l2",
    "polarity_stddev",
    "run_sweep",
    "solve",
    "spectral_bounds",
    "swap_delta",
    "validate_metric",
]
