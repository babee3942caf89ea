"""Seeded scenario generators for the 2D rearrangement experiments, plus the
small fixed worlds used for trace reproduction and tests.

Every generator is a pure function of ``(size, seed)``.  By default the
scenarios use the fixed-home manipulation formulation; ``formulation`` can
switch them to the move/pick/place one.  Objects are placed by
rejection sampling with a minimum center spacing, so starts never overlap and
all grasp configurations of an unobstructed object are collision free.
"""
from __future__ import annotations

import dataclasses
import math

import numpy as np

from ..geometry import AABB, Box, Placed
from .world import Goal, ObjectSpec, Scenario, World

EXPERIMENTS = ("tabletop-grid", "distractors", "clear-table")
SIZE_RANGE = {"tabletop-grid": (1, 16), "distractors": (0, 40), "clear-table": (0, 12)}

ROBOT_HALF = 0.3
OBJECT_RADIUS = 0.25
GRASP_OFFSET = 0.6
TOP_GRASP = ((0.0, 0.0),)


def side_grasps(d: float = GRASP_OFFSET) -> tuple:
    """Offsets from the gripper to the object center, approaching from each side."""
    return ((d, 0.0), (-d, 0.0), (0.0, d), (0.0, -d))


def scatter(rng, area: AABB, count: int, spacing: float, taken=(), max_tries: int = 20000) -> list:
    """``count`` points in ``area`` at least ``spacing`` apart from each other and from ``taken``."""
    points = [tuple(p) for p in taken]
    out = []
    for _ in range(max_tries):
        if len(out) == count:
            break
        p = area.sample(rng)
        if all(math.dist(p, t) >= spacing for t in points):
            points.append(p)
            out.append(p)
    if len(out) < count:
        raise ValueError(f"could not place {count} objects with spacing {spacing}")
    return out


def _check_size(experiment, size):
    lo, hi = SIZE_RANGE[experiment]
    if not lo <= size <= hi:
        raise ValueError(f"{experiment} size must be in [{lo}, {hi}], got {size}")


def _world(surfaces, objects, bounds=((-10.0, -6.0), (10.0, 6.0))) -> World:
    return World(bounds=AABB(*bounds), robot=Box((ROBOT_HALF, ROBOT_HALF)), home=(0.0, 0.0),
                 surfaces=surfaces, objects=tuple(objects))


def distractors(size: int, seed: int, formulation: str = "manipulation") -> Scenario:
    """One green object on the left table must reach the table's far half;
    ``size`` red objects sit on the right table and never block it."""
    rng = np.random.default_rng([seed, 2])
    left = AABB((-8.0, -4.0), (-3.0, 4.0))
    right = AABB((3.0, -5.0), (9.0, 5.0))
    start = scatter(rng, AABB((-7.0, -3.0), (-4.0, -1.0)), 1, 0.0)[0]
    objects = [ObjectSpec("green", OBJECT_RADIUS, start, ("left",), side_grasps())]
    spots = scatter(rng, right.shrink(OBJECT_RADIUS), size, 0.8)
    objects += [ObjectSpec(f"red{i}", OBJECT_RADIUS, p, ("right",), side_grasps()) for i, p in enumerate(spots)]
    goal = Goal(regions={"green": AABB((-8.0, 0.0), (-3.0, 4.0))})
    return Scenario(formulation, _world({"left": left, "right": right}, objects), goal,
                    f"distractors-{size}-{seed}")


def tabletop_grid(size: int, seed: int, formulation: str = "manipulation") -> Scenario:
    """``size`` objects start scattered on one table and must each reach an
    assigned cell of a grid on the other table.

    With the manipulation formulation objects have a single top grasp.  The
    move/pick/place robot is a footprint that cannot overlap the object it
    approaches, so there it gets side grasps and a wider grid pitch.
    """
    rng = np.random.default_rng([seed, 1])
    cols = math.ceil(math.sqrt(size))
    rows = math.ceil(size / cols)
    top = formulation == "manipulation"
    grasps = TOP_GRASP if top else side_grasps()
    pitch = 1.0 if top else 1.5
    half_w, half_h = max(2.0, cols * pitch / 2 + 0.5), max(2.0, rows * pitch / 2 + 0.5)
    side = math.sqrt(size) + 1.5
    source = AABB((-3.0 - 2 * side, -side), (-3.0, side))
    target = AABB((3.0, -half_h), (3.0 + 2 * half_w, half_h))
    reach = max(side, half_h) + 2.0
    bounds = ((-5.0 - 2 * side, -reach), (5.0 + 2 * half_w, reach))
    starts = scatter(rng, source.shrink(OBJECT_RADIUS + 0.1), size, 1.2)
    cx, cy = target.center
    cells = [(cx + (c - (cols - 1) / 2) * pitch, cy + (r - (rows - 1) / 2) * pitch)
             for r in range(rows) for c in range(cols)][:size]
    objects = [ObjectSpec(f"block{i}", OBJECT_RADIUS, p, ("source", "target"), grasps)
               for i, p in enumerate(starts)]
    goal = Goal(poses={f"block{i}": cell for i, cell in enumerate(cells)})
    return Scenario(formulation, _world({"source": source, "target": target}, objects, bounds), goal,
                    f"tabletop-grid-{size}-{seed}")


def clear_table(size: int, seed: int, formulation: str = "manipulation") -> Scenario:
    """A blue object at the center of a table surrounded by ``size`` red
    objects must be moved to a second table; reds may have to be moved first."""
    rng = np.random.default_rng([seed, 3])
    left = AABB((-8.0, -3.0), (-2.0, 3.0))
    right = AABB((2.0, -4.0), (9.0, 4.0))
    blue = left.center
    reds = scatter(rng, left.shrink(OBJECT_RADIUS + 0.1), size, 0.8, taken=[blue])
    objects = [ObjectSpec("blue", OBJECT_RADIUS, blue, ("left", "right"), side_grasps())]
    objects += [ObjectSpec(f"red{i}", OBJECT_RADIUS, p, ("left", "right"), side_grasps())
                for i, p in enumerate(reds)]
    goal = Goal(regions={"blue": right})
    return Scenario(formulation, _world({"left": left, "right": right}, objects), goal,
                    f"clear-table-{size}-{seed}")


GENERATORS = {"tabletop-grid": tabletop_grid, "distractors": distractors, "clear-table": clear_table}


def generate_benchmark(experiment: str, size: int, seed: int, formulation: str = "manipulation") -> Scenario:
    if formulation not in ("manipulation", "pickplace"):
        raise ValueError(f"unknown formulation {formulation!r}")
    if experiment not in GENERATORS:
        raise ValueError(f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    _check_size(experiment, size)
    return GENERATORS[experiment](size, seed, formulation)


# 1D worlds

def line_world(objects, surfaces=None, home=0.0, bounds=(-12.0, 12.0), robot_half=0.5) -> World:
    surfaces = surfaces or {"T1": AABB((-10.0,), (-4.0,)), "T2": AABB((4.0,), (10.0,))}
    return World(bounds=AABB((bounds[0],), (bounds[1],)), robot=Box((robot_half,)), home=(float(home),),
                 surfaces=surfaces, objects=tuple(objects))


def line_object(name, pose, radius=0.5, surfaces=("T1", "T2"), grasps=((1.05,),)) -> ObjectSpec:
    return ObjectSpec(name, radius, (float(pose),), tuple(surfaces), tuple(grasps))


def trace_scenario(kind: str = "manipulation") -> Scenario:
    """Two objects on the right table; A must reach the left table."""
    world = line_world([line_object("A", 5.0), line_object("B", 8.0)])
    return Scenario(kind, world, Goal(regions={"A": world.surfaces["T1"]}), f"line-{kind}")


def two_object_scenario(kind: str = "pickplace") -> Scenario:
    """2D version of the two-object problem: A and B on the right table, A must
    reach the left table and the robot must end at home."""
    objects = [ObjectSpec("A", OBJECT_RADIUS, (5.0, 0.0), ("left", "right"), side_grasps()),
               ObjectSpec("B", OBJECT_RADIUS, (6.5, 1.0), ("left", "right"), side_grasps())]
    world = _world({"left": AABB((-8.0, -3.0), (-3.0, 3.0)), "right": AABB((3.0, -3.0), (8.0, 3.0))}, objects)
    conf = world.home if kind == "pickplace" else None
    return Scenario(kind, world, Goal(regions={"A": world.surfaces["left"]}, conf=conf), f"two-object-{kind}")


def obstructed_scenario(kind: str = "pickplace") -> Scenario:
    """A sits in a pocket walled on three sides; B fills the open side, so B
    has to move before any grasp of A is reachable."""
    walls = (Placed(Box((1.0, 0.5)), (6.5, 1.0)), Placed(Box((1.0, 0.5)), (6.5, -1.0)),
             Placed(Box((0.5, 0.5)), (7.0, 0.0)))
    objects = [ObjectSpec("A", OBJECT_RADIUS, (6.0, 0.0), ("left", "right"), side_grasps()),
               ObjectSpec("B", OBJECT_RADIUS, (5.4, 0.0), ("left", "right"), side_grasps())]
    world = dataclasses.replace(_world({"left": AABB((-8.0, -3.0), (-3.0, 3.0)),
                                        "right": AABB((3.0, -3.0), (9.0, 3.0))}, objects), obstacles=walls)
    return Scenario(kind, world, Goal(regions={"A": world.surfaces["left"]}), f"obstructed-{kind}")
