"""Geometric domains and scenario generators."""
from __future__ import annotations

from .benchmarks import EXPERIMENTS, generate_benchmark, obstructed_scenario, trace_scenario, two_object_scenario
from .manipulation import build_manipulation_problem
from .motion import build_motion_problem
from .pickplace import build_pickplace_problem
from .world import Goal, ObjectSpec, Scenario, World

KINDS = ("motion", "pickplace", "manipulation")


def build_problem(scenario: Scenario):
    """``(problem, samplers)`` for a scenario, dispatching on its kind."""
    if scenario.kind == "motion":
        if scenario.goal.conf is None:
            raise ValueError("motion scenarios need a goal configuration")
        return build_motion_problem(scenario.world, scenario.world.home, scenario.goal.conf, scenario.name)
    if scenario.kind == "pickplace":
        return build_pickplace_problem(scenario.world, scenario.goal, scenario.name)
    if scenario.kind == "manipulation":
        return build_manipulation_problem(scenario.world, scenario.goal, scenario.name,
                                          detours=int(scenario.options.get("detours", 0)))
    raise ValueError(f"unknown scenario kind {scenario.kind!r}")


__all__ = ["EXPERIMENTS", "KINDS", "Goal", "ObjectSpec", "Scenario", "World", "build_problem",
           "generate_benchmark", "obstructed_scenario", "trace_scenario", "two_object_scenario", "build_motion_problem",
           "build_pickplace_problem", "build_manipulation_problem"]
