"""Relations and samplers shared by the geometric domains."""
from __future__ import annotations

from ..core import Relation, Trajectory
from ..geometry import Placed, path_clear
from ..samplers import ConditionalSampler
from .world import ObjectSpec, World


def is_vector(value, dim: int) -> bool:
    return isinstance(value, tuple) and len(value) == dim and all(isinstance(v, float) for v in value)


def kinematics(p: tuple, g: tuple) -> tuple:
    """Robot configuration holding an object at pose ``p`` with grasp offset ``g``."""
    return tuple(a - b for a, b in zip(p, g))


def stable(world: World, obj: ObjectSpec) -> Relation:
    def test(p):
        return is_vector(p, world.dim) and world.on_surface(obj, p) and world.object_free(obj, p)
    return Relation(f"Stable:{obj.name}", test)


def grasp(obj: ObjectSpec) -> Relation:
    grasps = set(obj.grasps)
    return Relation(f"Grasp:{obj.name}", lambda g: g in grasps)


def region(world: World, obj: ObjectSpec, area) -> Relation:
    """Region(p): the object at ``p`` lies entirely inside ``area``.  A lazy
    pose passes only if some placement surface of the object reaches it."""
    inner = area.shrink(obj.radius)
    reachable = inner is not None and any(
        a is not None and a.intersects(inner) for a in (world.placement_area(obj, s) for s in obj.surfaces))

    def test(p):
        return is_vector(p, world.dim) and inner is not None and inner.contains(p)
    return Relation(f"Region:{obj.name}", test, domains=[{(f"Stable:{obj.name}", 0)}],
                    lazy_test=lambda p: reachable)


def trajectory_clear(world: World, t, obstacles, held=None) -> bool:
    if not isinstance(t, Trajectory):
        return False
    if not all(is_vector(w, world.dim) and world.bounds.contains(w) for w in t.waypoints):
        return False
    return path_clear(t.waypoints, world.robot, obstacles, world.resolution, held)


def disc_at(world: World, name: str, p) -> Placed:
    return Placed(world.object(name).shape, p)


def grasp_sampler(obj: ObjectSpec) -> ConditionalSampler:
    def generate(inputs, ctx):
        yield from ((g,) for g in obj.grasps)
    return ConditionalSampler(f"grasp:{obj.name}", [], ["g"], [f"Grasp:{obj.name}"], generate)


def pose_sampler(world: World, obj: ObjectSpec) -> ConditionalSampler:
    """Placements on the object's surfaces, visited round-robin.

    Each draw is uniform on the surface with probability ``pose_mixture``;
    otherwise it is rejection-sampled to also avoid the other objects'
    initial poses.  Either way it must clear static obstacles, and a draw
    fails after the instance's attempt budget.
    """
    others = {o.name: o.pose for o in world.objects if o.name != obj.name}
    areas = [a for a in (world.placement_area(obj, s) for s in obj.surfaces) if a is not None]

    def generate(inputs, ctx):
        if not areas:
            return
        rng = ctx.rng
        k = 0
        while True:
            area = areas[k % len(areas)]
            k += 1
            uniform = rng.random() < world.pose_mixture
            for _ in range(ctx.attempts):
                p = area.sample(rng)
                if world.object_free(obj, p) and (uniform or not world.object_overlaps(obj.name, p, others)):
                    yield (p,)
                    break
            else:
                yield None

    return ConditionalSampler(f"pose:{obj.name}", [], ["p"], [f"Stable:{obj.name}"], generate)
