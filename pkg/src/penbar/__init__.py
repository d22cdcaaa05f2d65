"""Penalty-barrier solver for constrained composite optimization.

Problems of the form ``minimize f(x) + g(x)  s.t.  l <= c(x) <= u`` are
solved by a sequence of smooth penalty-barrier subproblems, each handled by
a proximal-gradient inner solver.
"""

from .barriers import ExpBarrier, InverseBarrier, LogLikeBarrier, barrier_from_id, behavior_profile
from .inner import InnerConfig, InnerResult, solve_inner, stationarity_residual
from .model import EvaluationError, ProblemSpec, Subproblem, split_equalities
from .outer import OuterConfig, RunRecord, kkt_report, run, trajectory_violations
from .penalty import SmoothPenalty

__all__ = [
    "ExpBarrier",
    "InverseBarrier",
    "LogLikeBarrier",
    "barrier_from_id",
    "behavior_profile",
    "SmoothPenalty",
    "ProblemSpec",
    "Subproblem",
    "EvaluationError",
    "split_equalities",
    "InnerConfig",
    "InnerResult",
    "solve_inner",
    "stationarity_residual",
    "OuterConfig",
    "RunRecord",
    "run",
    "kkt_report",
    "trajectory_violations",
]

__version__ = "0.1.0"
