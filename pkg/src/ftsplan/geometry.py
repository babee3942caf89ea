"""Axis-aligned boxes, discs and straight-line swept collision checks in 1D or 2D.

Bodies are positioned by the configuration of whatever carries them.  In 1D a
box and a disc are both intervals.  Touching surfaces do not count as
overlap, so a grasp can place the robot flush against an object.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

DEFAULT_RESOLUTION = 0.01


@dataclass(frozen=True)
class Box:
    half_extents: tuple

    def __post_init__(self):
        object.__setattr__(self, "half_extents", tuple(float(h) for h in self.half_extents))
        if any(h <= 0 for h in self.half_extents):
            raise ValueError("box half extents must be positive")

    @property
    def dim(self):
        return len(self.half_extents)


@dataclass(frozen=True)
class Disc:
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("disc radius must be positive")


@dataclass(frozen=True)
class Placed:
    """A body fixed at a world position."""

    shape: object
    position: tuple


@dataclass(frozen=True)
class AABB:
    """Axis-aligned bounded region, used for workspace bounds and surfaces."""

    lo: tuple
    hi: tuple

    def __post_init__(self):
        object.__setattr__(self, "lo", tuple(float(v) for v in self.lo))
        object.__setattr__(self, "hi", tuple(float(v) for v in self.hi))
        if len(self.lo) != len(self.hi) or any(a > b for a, b in zip(self.lo, self.hi)):
            raise ValueError("malformed box bounds")

    @property
    def dim(self):
        return len(self.lo)

    def contains(self, point, margin: float = 0.0) -> bool:
        return all(a + margin <= v <= b - margin for v, a, b in zip(point, self.lo, self.hi))

    def shrink(self, margin: float) -> Optional["AABB"]:
        lo = tuple(a + margin for a in self.lo)
        hi = tuple(b - margin for b in self.hi)
        if any(a > b for a, b in zip(lo, hi)):
            return None
        return AABB(lo, hi)

    def intersects(self, other: "AABB") -> bool:
        return all(a <= d and c <= b for a, b, c, d in zip(self.lo, self.hi, other.lo, other.hi))

    def sample(self, rng) -> tuple:
        return tuple(float(rng.uniform(a, b)) for a, b in zip(self.lo, self.hi))

    @property
    def center(self):
        return tuple((a + b) / 2 for a, b in zip(self.lo, self.hi))


def _as_half(shape, dim):
    if isinstance(shape, Box):
        return np.asarray(shape.half_extents[:dim], dtype=float)
    return np.full(dim, float(shape.radius))


def overlap(shape_a, centers_a, shape_b, centers_b) -> np.ndarray:
    """Vectorized strict-overlap test between two bodies at rows of centers.

    ``centers_a`` and ``centers_b`` broadcast against each other (shape
    ``(k, d)`` or ``(d,)``).
    """
    ca = np.atleast_2d(np.asarray(centers_a, dtype=float))
    cb = np.atleast_2d(np.asarray(centers_b, dtype=float))
    delta = np.abs(ca - cb)
    dim = delta.shape[1]
    if dim == 1 or (isinstance(shape_a, Box) and isinstance(shape_b, Box)):
        reach = _as_half(shape_a, dim) + _as_half(shape_b, dim)
        return np.all(delta < reach, axis=1)
    if isinstance(shape_a, Disc) and isinstance(shape_b, Disc):
        return np.sum(delta * delta, axis=1) < (shape_a.radius + shape_b.radius) ** 2
    if isinstance(shape_a, Disc):
        shape_a, shape_b = shape_b, shape_a
    # box against disc: distance from disc center to the box
    gap = np.maximum(delta - _as_half(shape_a, dim), 0.0)
    return np.sum(gap * gap, axis=1) < shape_b.radius ** 2


def interpolation_weights(resolution: float = DEFAULT_RESOLUTION):
    """Grid of path fractions ``0, eps, ..., 1`` as paired weights.

    Returned as ``(start_weight, end_weight)`` so a reversed segment reuses
    the same products and gives bit-identical sample points.
    """
    if resolution <= 0:
        raise ValueError("resolution must be positive")
    steps = max(1, math.ceil(1.0 / resolution - 1e-9))
    idx = np.arange(steps + 1)
    return (steps - idx) / steps, idx / steps


def interpolate(start, end, resolution: float = DEFAULT_RESOLUTION) -> np.ndarray:
    a, b = interpolation_weights(resolution)
    start = np.asarray(start, dtype=float)
    end = np.asarray(end, dtype=float)
    return a[:, None] * start[None, :] + b[:, None] * end[None, :]


def segment_clear(start, end, robot, obstacles: Sequence[Placed] = (),
                  resolution: float = DEFAULT_RESOLUTION, held=None) -> bool:
    """True iff the robot (and an optional held ``(shape, offset)``) moving along
    the straight segment avoids every obstacle at each sampled fraction."""
    if not obstacles:
        return True
    points = interpolate(start, end, resolution)
    for ob in obstacles:
        if overlap(robot, points, ob.shape, ob.position).any():
            return False
        if held is not None:
            shape, offset = held
            if overlap(shape, points + np.asarray(offset, dtype=float), ob.shape, ob.position).any():
                return False
    return True


def swept_pair_clear(start, end, robot, held, movable: Placed,
                     resolution: float = DEFAULT_RESOLUTION) -> bool:
    """True iff neither the robot nor the held body overlaps ``movable``."""
    return segment_clear(start, end, robot, [movable], resolution, held=held)


def path_clear(waypoints, robot, obstacles, resolution: float = DEFAULT_RESOLUTION, held=None) -> bool:
    if len(waypoints) == 1:
        return segment_clear(waypoints[0], waypoints[0], robot, obstacles, resolution, held)
    return all(segment_clear(a, b, robot, obstacles, resolution, held)
               for a, b in zip(waypoints[:-1], waypoints[1:]))


def config_in_bounds(q, bounds: AABB) -> bool:
    return bounds.contains(q)
