"""Sampling-based planning for factored transition systems."""
from .core import (Clause, Constraint, Element, Param, Plan, Problem, Relation, TransitionSystem, Trajectory,
                   equal, free_parameters, same, validate_plan)
from .planners import PlannerConfig, RunResult, solve

__version__ = "0.1.0"
