"""Shared description of a geometric world: robot, static obstacles, surfaces
and movable disc objects, plus the goal of a problem built over it."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..geometry import AABB, Box, Disc, Placed, overlap

HOLDING_NOTHING = None


@dataclass(frozen=True)
class ObjectSpec:
    name: str
    radius: float
    pose: tuple
    surfaces: tuple
    grasps: tuple

    @property
    def shape(self) -> Disc:
        return Disc(self.radius)


@dataclass(frozen=True)
class World:
    """Translate-only robot (configuration = position) among boxes and discs."""

    bounds: AABB
    robot: Box
    home: tuple
    obstacles: tuple = ()
    surfaces: dict = field(default_factory=dict)
    objects: tuple = ()
    resolution: float = 0.01
    pose_mixture: float = 0.5

    def __post_init__(self):
        dim = self.bounds.dim
        if dim not in (1, 2):
            raise ValueError("worlds are 1D or 2D")
        if self.robot.dim != dim or len(self.home) != dim:
            raise ValueError("robot and home must match the world dimension")
        for ob in self.obstacles:
            if not self.bounds.contains(ob.position):
                raise ValueError("obstacle outside the workspace bounds")
        names = [o.name for o in self.objects]
        if len(set(names)) != len(names):
            raise ValueError("object names must be unique")
        for o in self.objects:
            if not o.grasps:
                raise ValueError(f"object {o.name} needs at least one grasp")
            for s in o.surfaces:
                if s not in self.surfaces:
                    raise ValueError(f"object {o.name} refers to unknown surface {s}")

    @property
    def dim(self) -> int:
        return self.bounds.dim

    def object(self, name: str) -> ObjectSpec:
        for o in self.objects:
            if o.name == name:
                return o
        raise KeyError(name)

    @property
    def object_names(self) -> tuple:
        return tuple(o.name for o in self.objects)

    def placement_area(self, obj: ObjectSpec, surface: str) -> Optional[AABB]:
        """Positions of the object's center that keep it fully on ``surface``."""
        return self.surfaces[surface].shrink(obj.radius)

    def on_surface(self, obj: ObjectSpec, p, surfaces=None) -> bool:
        for s in surfaces if surfaces is not None else obj.surfaces:
            area = self.placement_area(obj, s)
            if area is not None and area.contains(p):
                return True
        return False

    def robot_free(self, q) -> bool:
        """Robot at ``q`` inside the bounds and clear of static obstacles."""
        if not self.bounds.contains(q):
            return False
        return not any(overlap(self.robot, q, ob.shape, ob.position)[0] for ob in self.obstacles)

    def object_free(self, obj: ObjectSpec, p) -> bool:
        """Object at ``p`` clear of static obstacles."""
        return not any(overlap(obj.shape, p, ob.shape, ob.position)[0] for ob in self.obstacles)

    def object_overlaps(self, name: str, p, others: dict) -> bool:
        obj = self.object(name)
        for other, pose in others.items():
            if other == name:
                continue
            if overlap(obj.shape, p, self.object(other).shape, pose)[0]:
                return True
        return False

    def initial_poses(self) -> dict:
        return {o.name: o.pose for o in self.objects}


@dataclass(frozen=True)
class Goal:
    """Goal conditions: regions or exact poses per object, optional robot configuration."""

    regions: dict = field(default_factory=dict)
    poses: dict = field(default_factory=dict)
    conf: Optional[tuple] = None


@dataclass(frozen=True)
class Scenario:
    """Everything needed to build a problem: formulation kind, world and goal."""

    kind: str
    world: World
    goal: Goal
    name: str = "scenario"
    options: dict = field(default_factory=dict)


def vec(values) -> tuple:
    return tuple(float(v) for v in np.atleast_1d(values))
