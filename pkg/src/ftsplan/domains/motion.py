"""Single-clause motion planning: move the robot along straight segments."""
from __future__ import annotations

from ..core import (Clause, Element, Problem, Relation, TransitionSystem, Trajectory, Variables, equal,
                    initial_clause)
from ..samplers import ConditionalSampler
from .common import is_vector, trajectory_clear
from .world import World, vec

CONF = "Conf"


def motion_relation(world: World) -> Relation:
    """Motion(q, t, q'): ``t`` is the straight segment from ``q`` to ``q'``."""
    def test(q, t, q2):
        return isinstance(t, Trajectory) and t.attachment is None and t.waypoints == (q, q2)
    return Relation("Motion", test)


def cfree_relation(world: World) -> Relation:
    obstacles = list(world.obstacles)
    return Relation("CFree", lambda t: trajectory_clear(world, t, obstacles), domains=[{("Motion", 1)}])


def conf_sampler(world: World) -> ConditionalSampler:
    """Uniform robot configurations clear of static obstacles."""
    def generate(inputs, ctx):
        rng = ctx.rng
        while True:
            for _ in range(ctx.attempts):
                q = world.bounds.sample(rng)
                if world.robot_free(q):
                    yield (q,)
                    break
            else:
                yield None
    return ConditionalSampler("conf", [], ["q"], [CONF], generate)


def motion_sampler(world: World) -> ConditionalSampler:
    """The single straight-line trajectory between two configurations."""
    def generate(inputs, ctx):
        q, q2 = inputs
        yield (Trajectory((q, q2)),)
    return ConditionalSampler("motion", [{(CONF, 0)}, {(CONF, 0)}], ["t"], [("Motion", (0, 2, 1))], generate,
                              input_test=lambda q, q2: q != q2)


def build_motion_problem(world: World, q0, q_goal, name: str = "motion"):
    """Problem and samplers for moving the robot from ``q0`` to ``q_goal``."""
    q0, q_goal = vec(q0), vec(q_goal)
    if not (is_vector(q0, world.dim) and is_vector(q_goal, world.dim)):
        raise ValueError("configurations must match the world dimension")
    state_vars, control_vars = ("q",), ("t",)
    motion, cfree = motion_relation(world), cfree_relation(world)
    v = Variables(state_vars, control_vars)
    x, u, nx = v.x, v.u, v.nx
    move = Clause("Move", [motion(x("q"), u("t"), nx("q")), cfree(u("t"))])
    system = TransitionSystem(state_vars, control_vars, [move], {"q": world.bounds})
    goal = Clause("goal", [equal(system.x("q"), q_goal)])
    problem = Problem(system, initial_clause(system, {"q": q0}), goal,
                      [Element(CONF, (q0,)), Element(CONF, (q_goal,))], name)
    return problem, [conf_sampler(world), motion_sampler(world)]
