"""Pick-and-place with a translating robot that moves, picks and places discs.

State is ``(q, o_1, ..., o_k, h)``: the robot configuration, one variable per
object holding its pose (or its grasp offset while held), and the held object
(``None`` when the gripper is empty).  The only control is the trajectory
``t``, which Pick and Place leave unconstrained.
"""
from __future__ import annotations

from ..core import Clause, Element, Problem, Relation, TransitionSystem, Variables, equal, initial_clause, same
from ..samplers import ConditionalSampler
from .common import (disc_at, grasp, grasp_sampler, is_vector, kinematics, pose_sampler, region, stable,
                     trajectory_clear)
from .motion import CONF, cfree_relation, conf_sampler, motion_relation, motion_sampler
from .world import HOLDING_NOTHING, Goal, World, vec

MOTION_SOURCE = {("Motion", 1)}


def _grasp_source(o):
    return {(f"Grasp:{o}", 0)}


def _pose_source(o):
    return {(f"Stable:{o}", 0)}


def kin_relation(obj) -> Relation:
    """Kin(g, p, q): holding the object with grasp ``g`` at configuration
    ``q`` puts it at pose ``p``."""
    def test(g, p, q):
        return isinstance(g, tuple) and isinstance(p, tuple) and q == kinematics(p, g)
    return Relation(f"Kin:{obj.name}", test)


def ik_sampler(world: World, obj) -> ConditionalSampler:
    """The unique configuration ``q = p - g``, if the robot fits there."""
    def generate(inputs, ctx):
        p, g = inputs
        q = kinematics(p, g)
        if world.robot_free(q):
            yield (q,)
    return ConditionalSampler(f"ik:{obj.name}", [_pose_source(obj.name), _grasp_source(obj.name)], ["q"],
                              [(f"Kin:{obj.name}", (1, 0, 2)), (CONF, (2,))], generate)


def collision_relations(world: World) -> dict:
    out = {}
    static = list(world.obstacles)
    for o in world.objects:
        name = o.name
        out[("CFree", name)] = Relation(
            f"CFree:{name}", lambda t, p, name=name: trajectory_clear(world, t, [disc_at(world, name, p)]),
            domains=[MOTION_SOURCE, _pose_source(name)])
        out[("CFreeH", name)] = Relation(
            f"CFreeH:{name}", lambda t, g, o=o: trajectory_clear(world, t, static, held=(o.shape, g)),
            domains=[MOTION_SOURCE, _grasp_source(name)])
        for other in world.objects:
            if other.name == name:
                continue
            out[("CFreeH", name, other.name)] = Relation(
                f"CFreeH:{name}:{other.name}",
                lambda t, g, p, o=o, other=other.name: trajectory_clear(
                    world, t, [disc_at(world, other, p)], held=(o.shape, g)),
                domains=[MOTION_SOURCE, _grasp_source(name), _pose_source(other.name)])
    return out


def goal_clause(v: Variables, world: World, goal: Goal, relations: dict, robot: bool = True) -> Clause:
    constraints = []
    for name, area in goal.regions.items():
        constraints.append(region(world, world.object(name), area)(v.x(name)))
    for name, pose in goal.poses.items():
        constraints.append(equal(v.x(name), vec(pose)))
    if goal.regions or goal.poses:
        constraints.append(equal(v.x("h"), HOLDING_NOTHING))
    if robot and goal.conf is not None:
        constraints.append(equal(v.x("q"), vec(goal.conf)))
    return Clause("goal", constraints)


def build_pickplace_problem(world: World, goal: Goal, name: str = "pickplace"):
    """Problem and samplers ``conf, motion, grasp:o, pose:o, ik:o``."""
    names = world.object_names
    if "q" in names or "h" in names:
        raise ValueError("object names 'q' and 'h' are reserved")
    state_vars = ("q",) + names + ("h",)
    v = Variables(state_vars, ("t",))
    x, u, nx = v.x, v.u, v.nx
    motion, cfree = motion_relation(world), cfree_relation(world)
    col = collision_relations(world)
    objs = {o.name: o for o in world.objects}
    stab = {o: stable(world, objs[o]) for o in names}
    gr = {o: grasp(objs[o]) for o in names}
    kin = {o: kin_relation(objs[o]) for o in names}

    clauses = []
    move = [motion(x("q"), u("t"), nx("q")), cfree(u("t")), equal(x("h"), HOLDING_NOTHING), v.frame("h")]
    for o in names:
        move += [v.frame(o), col[("CFree", o)](u("t"), x(o))]
    clauses.append(Clause("Move", move))
    for o in names:
        others = [p for p in names if p != o]
        moveh = [motion(x("q"), u("t"), nx("q")), col[("CFreeH", o)](u("t"), x(o)), equal(x("h"), o),
                 v.frame("h"), v.frame(o)]
        for p in others:
            moveh += [v.frame(p), col[("CFreeH", o, p)](u("t"), x(o), x(p))]
        clauses.append(Clause(f"MoveH:{o}", moveh))
        frames = [v.frame(p) for p in others]
        clauses.append(Clause(f"Pick:{o}", [
            stab[o](x(o)), gr[o](nx(o)), kin[o](nx(o), x(o), x("q")), same(x("q"), nx("q")),
            equal(x("h"), HOLDING_NOTHING), equal(nx("h"), o)] + frames))
        clauses.append(Clause(f"Place:{o}", [
            gr[o](x(o)), stab[o](nx(o)), kin[o](x(o), nx(o), x("q")), same(x("q"), nx("q")),
            equal(x("h"), o), equal(nx("h"), HOLDING_NOTHING)] + frames))

    domains = {"q": world.bounds, "h": (HOLDING_NOTHING,) + names}
    domains.update({o: "pose-or-grasp" for o in names})
    system = TransitionSystem(state_vars, ("t",), clauses, domains)
    q0 = vec(world.home)
    init = {"q": q0, "h": HOLDING_NOTHING}
    init.update({o.name: vec(o.pose) for o in world.objects})
    elements = [Element(CONF, (q0,))]
    for o in world.objects:
        p0 = vec(o.pose)
        if not is_vector(p0, world.dim) or not stab[o.name].test(p0):
            raise ValueError(f"initial pose of {o.name} is not on one of its surfaces")
        elements.append(Element(f"Stable:{o.name}", (p0,)))
    for o, pose in goal.poses.items():
        elements.append(Element(f"Stable:{o}", (vec(pose),)))
    if goal.conf is not None:
        elements.append(Element(CONF, (vec(goal.conf),)))
    problem = Problem(system, initial_clause(system, init), goal_clause(v, world, goal, col), elements, name)
    samplers = [conf_sampler(world), motion_sampler(world)]
    for o in world.objects:
        samplers += [grasp_sampler(o), pose_sampler(world, o), ik_sampler(world, o)]
    return problem, samplers
