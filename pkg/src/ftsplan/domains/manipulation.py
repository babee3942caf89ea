"""Mobile manipulation from a fixed home configuration.

The robot state is not tracked.  Each pick or place is one manipulation
``m``: a path from ``home`` to the grasping configuration ``p - g`` and back,
carrying the object rigidly along the whole path.  State is
``(o_1, ..., o_k, h)`` and the only control is ``m``.
"""
from __future__ import annotations

from ..core import Clause, Element, Problem, Relation, TransitionSystem, Trajectory, Variables, equal, initial_clause
from ..geometry import path_clear
from ..samplers import ConditionalSampler
from .common import disc_at, grasp, grasp_sampler, is_vector, kinematics, pose_sampler, region, stable
from .pickplace import goal_clause
from .world import HOLDING_NOTHING, Goal, World, vec


def manipulation_path(world: World, p, g, via=None) -> tuple:
    q = kinematics(p, g)
    out = [tuple(world.home)] + ([via] if via is not None else []) + [q]
    return tuple(out + out[-2::-1])


def manip_relation(world: World, obj) -> Relation:
    """Manip(p, g, m): ``m`` goes home -> ``p - g`` -> home symmetrically while
    holding the object at offset ``g``, avoiding static obstacles."""
    home = tuple(world.home)

    def test(p, g, m):
        if not (isinstance(m, Trajectory) and is_vector(p, world.dim) and is_vector(g, world.dim)):
            return False
        w = m.waypoints
        if m.attachment != (obj.name, g) or len(w) % 2 == 0 or len(w) < 3:
            return False
        if w != w[::-1] or w[0] != home or w[len(w) // 2] != kinematics(p, g):
            return False
        if not all(is_vector(x, world.dim) and world.bounds.contains(x) for x in w):
            return False
        return path_clear(w, world.robot, world.obstacles, world.resolution, held=(obj.shape, g))

    return Relation(f"Manip:{obj.name}", test)


def cfree_relation(world: World, obj) -> Relation:
    """CFree_o(m, p): no part of manipulation ``m`` (robot plus carried
    object) touches object ``o`` resting at ``p``."""
    def test(m, p):
        if not isinstance(m, Trajectory) or m.attachment is None:
            return False
        held_name, g = m.attachment
        if held_name == obj.name:
            return False
        held = (world.object(held_name).shape, g)
        return path_clear(m.waypoints, world.robot, [disc_at(world, obj.name, p)], world.resolution, held)

    sources = {(f"Manip:{o.name}", 2) for o in world.objects if o.name != obj.name}
    return Relation(f"CFree:{obj.name}", test, domains=[sources, {(f"Stable:{obj.name}", 0)}])


def manip_sampler(world: World, obj, detours: int = 0) -> ConditionalSampler:
    """Direct manipulation first, then up to ``detours`` paths through a
    random intermediate waypoint."""
    def generate(inputs, ctx):
        p, g = inputs
        q = kinematics(p, g)
        if not world.robot_free(q):
            return
        held = (obj.shape, g)
        path = manipulation_path(world, p, g)
        if path_clear(path, world.robot, world.obstacles, world.resolution, held):
            yield (Trajectory(path, (obj.name, g)),)
        for _ in range(detours):
            for _ in range(ctx.attempts):
                via = world.bounds.sample(ctx.rng)
                path = manipulation_path(world, p, g, via)
                if path_clear(path, world.robot, world.obstacles, world.resolution, held):
                    yield (Trajectory(path, (obj.name, g)),)
                    break
            else:
                yield None

    name = obj.name
    return ConditionalSampler(f"manip:{name}", [{(f"Stable:{name}", 0)}, {(f"Grasp:{name}", 0)}], ["m"],
                              [f"Manip:{name}"], generate)


def build_manipulation_problem(world: World, goal: Goal, name: str = "manipulation", detours: int = 0):
    """Problem and samplers ``grasp:o, pose:o, manip:o`` for each object."""
    names = world.object_names
    if "h" in names:
        raise ValueError("object name 'h' is reserved")
    if goal.conf is not None:
        raise ValueError("this formulation has no robot configuration variable")
    state_vars = names + ("h",)
    v = Variables(state_vars, ("m",))
    x, u, nx = v.x, v.u, v.nx
    objs = {o.name: o for o in world.objects}
    stab = {o: stable(world, objs[o]) for o in names}
    gr = {o: grasp(objs[o]) for o in names}
    manip = {o: manip_relation(world, objs[o]) for o in names}
    cfree = {o: cfree_relation(world, objs[o]) for o in names}

    clauses = []
    for o in names:
        others = [p for p in names if p != o]
        rest = []
        for p in others:
            rest += [v.frame(p), cfree[p](u("m"), x(p))]
        clauses.append(Clause(f"MPick:{o}", [
            stab[o](x(o)), gr[o](nx(o)), manip[o](x(o), nx(o), u("m")),
            equal(x("h"), HOLDING_NOTHING), equal(nx("h"), o)] + rest))
        clauses.append(Clause(f"MPlace:{o}", [
            gr[o](x(o)), stab[o](nx(o)), manip[o](nx(o), x(o), u("m")),
            equal(x("h"), o), equal(nx("h"), HOLDING_NOTHING)] + rest))

    domains = {"h": (HOLDING_NOTHING,) + names}
    domains.update({o: "pose-or-grasp" for o in names})
    system = TransitionSystem(state_vars, ("m",), clauses, domains)
    init = {"h": HOLDING_NOTHING}
    init.update({o.name: vec(o.pose) for o in world.objects})
    elements = []
    for o in world.objects:
        p0 = vec(o.pose)
        if not is_vector(p0, world.dim) or not stab[o.name].test(p0):
            raise ValueError(f"initial pose of {o.name} is not on one of its surfaces")
        elements.append(Element(f"Stable:{o.name}", (p0,)))
    for o, pose in goal.poses.items():
        elements.append(Element(f"Stable:{o}", (vec(pose),)))
    problem = Problem(system, initial_clause(system, init), goal_clause(v, world, goal, {}, robot=False),
                      elements, name)
    samplers = []
    for o in world.objects:
        samplers += [grasp_sampler(o), pose_sampler(world, o), manip_sampler(world, o, detours)]
    return problem, samplers
