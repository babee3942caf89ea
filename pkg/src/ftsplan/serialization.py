"""JSON problem files, plan documents and run reports.

Numbers are written with Python's shortest round-trip float repr, so a
problem or plan read back compares bit-for-bit equal to what was written.

State and control values are encoded as:

* configuration, pose or grasp (tuple of floats): a JSON array
* empty gripper: ``null``; held object: its name
* trajectory: ``{"waypoints": [[...], ...], "attachment": null | {"object": name, "offset": [...]}}``
"""
from __future__ import annotations

import json
from typing import Any, Optional

import jsonschema

from .core import Plan, Trajectory
from .domains.world import Goal, ObjectSpec, Scenario, World
from .geometry import AABB, Box, Disc, Placed

FORMAT_VERSION = 1

_NUMBERS = {"type": "array", "items": {"type": "number"}, "minItems": 1, "maxItems": 2}
_BOX = {"type": "object", "additionalProperties": False, "required": ["lo", "hi"],
        "properties": {"lo": _NUMBERS, "hi": _NUMBERS}}

PROBLEM_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "ftsplan problem",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "kind", "world", "goal"],
    "properties": {
        "version": {"const": FORMAT_VERSION},
        "kind": {"enum": ["motion", "pickplace", "manipulation"]},
        "name": {"type": "string"},
        "world": {
            "type": "object",
            "additionalProperties": False,
            "required": ["bounds", "robot", "home"],
            "properties": {
                "bounds": _BOX,
                "robot": {"type": "object", "additionalProperties": False, "required": ["half_extents"],
                          "properties": {"half_extents": _NUMBERS}},
                "home": _NUMBERS,
                "obstacles": {"type": "array", "items": {
                    "type": "object", "additionalProperties": False, "required": ["position"],
                    "properties": {"position": _NUMBERS, "box": _NUMBERS,
                                   "disc": {"type": "number", "exclusiveMinimum": 0}},
                    "oneOf": [{"required": ["box"]}, {"required": ["disc"]}]}},
                "surfaces": {"type": "object", "additionalProperties": _BOX},
                "objects": {"type": "array", "items": {
                    "type": "object", "additionalProperties": False,
                    "required": ["name", "radius", "pose", "surfaces", "grasps"],
                    "properties": {
                        "name": {"type": "string", "minLength": 1},
                        "radius": {"type": "number", "exclusiveMinimum": 0},
                        "pose": _NUMBERS,
                        "surfaces": {"type": "array", "items": {"type": "string"}},
                        "grasps": {"type": "array", "items": _NUMBERS, "minItems": 1}}}},
                "resolution": {"type": "number", "exclusiveMinimum": 0},
                "pose_mixture": {"type": "number", "minimum": 0, "maximum": 1},
            },
        },
        "goal": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "regions": {"type": "object", "additionalProperties": _BOX},
                "poses": {"type": "object", "additionalProperties": _NUMBERS},
                "conf": _NUMBERS,
            },
        },
        "options": {"type": "object", "additionalProperties": False,
                    "properties": {"detours": {"type": "integer", "minimum": 0}}},
    },
}

_VALUE = {}  # any encoded value; checked when decoded
PLAN_SCHEMA = {
    "type": "object",
    "required": ["skeleton", "states", "controls"],
    "additionalProperties": False,
    "properties": {
        "skeleton": {"type": "array", "items": {"type": "string"}},
        "states": {"type": "array", "items": {"type": "array", "items": _VALUE}, "minItems": 1},
        "controls": {"type": "array", "items": {"type": "array", "items": _VALUE}},
    },
}


class FormatError(ValueError):
    """A document that is not valid JSON or does not match its schema."""


def _floats(values) -> tuple:
    return tuple(float(v) for v in values)


def _box(box: AABB) -> dict:
    return {"lo": list(box.lo), "hi": list(box.hi)}


def _unbox(doc) -> AABB:
    return AABB(_floats(doc["lo"]), _floats(doc["hi"]))


def scenario_to_dict(scenario: Scenario) -> dict:
    w = scenario.world
    obstacles = []
    for ob in w.obstacles:
        entry = {"position": list(ob.position)}
        if isinstance(ob.shape, Box):
            entry["box"] = list(ob.shape.half_extents)
        else:
            entry["disc"] = ob.shape.radius
        obstacles.append(entry)
    goal = {}
    if scenario.goal.regions:
        goal["regions"] = {k: _box(v) for k, v in scenario.goal.regions.items()}
    if scenario.goal.poses:
        goal["poses"] = {k: list(v) for k, v in scenario.goal.poses.items()}
    if scenario.goal.conf is not None:
        goal["conf"] = list(scenario.goal.conf)
    doc = {
        "version": FORMAT_VERSION,
        "kind": scenario.kind,
        "name": scenario.name,
        "world": {
            "bounds": _box(w.bounds),
            "robot": {"half_extents": list(w.robot.half_extents)},
            "home": list(w.home),
            "obstacles": obstacles,
            "surfaces": {k: _box(v) for k, v in w.surfaces.items()},
            "objects": [{"name": o.name, "radius": o.radius, "pose": list(o.pose), "surfaces": list(o.surfaces),
                         "grasps": [list(g) for g in o.grasps]} for o in w.objects],
            "resolution": w.resolution,
            "pose_mixture": w.pose_mixture,
        },
        "goal": goal,
    }
    if scenario.options:
        doc["options"] = dict(scenario.options)
    return doc


def scenario_from_dict(doc: Any) -> Scenario:
    try:
        jsonschema.validate(doc, PROBLEM_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "(root)"
        raise FormatError(f"problem file: {where}: {exc.message}") from None
    wd = doc["world"]
    obstacles = []
    for ob in wd.get("obstacles", []):
        shape = Box(_floats(ob["box"])) if "box" in ob else Disc(float(ob["disc"]))
        obstacles.append(Placed(shape, _floats(ob["position"])))
    objects = tuple(ObjectSpec(o["name"], float(o["radius"]), _floats(o["pose"]), tuple(o["surfaces"]),
                               tuple(_floats(g) for g in o["grasps"])) for o in wd.get("objects", []))
    try:
        world = World(bounds=_unbox(wd["bounds"]), robot=Box(_floats(wd["robot"]["half_extents"])),
                      home=_floats(wd["home"]), obstacles=tuple(obstacles),
                      surfaces={k: _unbox(v) for k, v in wd.get("surfaces", {}).items()}, objects=objects,
                      resolution=float(wd.get("resolution", 0.01)),
                      pose_mixture=float(wd.get("pose_mixture", 0.5)))
        gd = doc["goal"]
        goal = Goal(regions={k: _unbox(v) for k, v in gd.get("regions", {}).items()},
                    poses={k: _floats(v) for k, v in gd.get("poses", {}).items()},
                    conf=_floats(gd["conf"]) if "conf" in gd else None)
        for name in list(goal.regions) + list(goal.poses):
            world.object(name)
    except KeyError as exc:
        raise FormatError(f"problem file: goal mentions unknown object {exc.args[0]!r}") from None
    except ValueError as exc:
        raise FormatError(f"problem file: {exc}") from None
    return Scenario(doc["kind"], world, goal, doc.get("name", "problem"), dict(doc.get("options", {})))


def encode_value(value) -> Any:
    if value is None or isinstance(value, (str, bool)):
        return value
    if isinstance(value, Trajectory):
        attachment = None
        if value.attachment is not None:
            name, offset = value.attachment
            attachment = {"object": name, "offset": list(offset)}
        return {"waypoints": [list(w) for w in value.waypoints], "attachment": attachment}
    if isinstance(value, tuple):
        return [encode_value(v) if not isinstance(v, float) else v for v in value]
    if isinstance(value, float):
        return value
    raise TypeError(f"cannot encode {value!r}")


def decode_value(doc) -> Any:
    if doc is None or isinstance(doc, str):
        return doc
    if isinstance(doc, list):
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in doc):
            raise FormatError(f"expected a list of numbers, got {doc!r}")
        return _floats(doc)
    if isinstance(doc, dict) and set(doc) == {"waypoints", "attachment"}:
        waypoints = tuple(decode_value(w) for w in doc["waypoints"])
        if not waypoints or not all(isinstance(w, tuple) for w in waypoints):
            raise FormatError("trajectory needs at least one waypoint")
        att = doc["attachment"]
        if att is not None:
            if not (isinstance(att, dict) and set(att) == {"object", "offset"}):
                raise FormatError(f"malformed attachment {att!r}")
            att = (att["object"], decode_value(att["offset"]))
        return Trajectory(waypoints, att)
    raise FormatError(f"cannot decode value {doc!r}")


def plan_to_dict(plan: Plan) -> dict:
    return {"skeleton": list(plan.skeleton),
            "states": [[encode_value(v) for v in x] for x in plan.states],
            "controls": [[encode_value(v) for v in u] for u in plan.controls]}


def plan_from_dict(doc) -> Plan:
    try:
        jsonschema.validate(doc, PLAN_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise FormatError(f"plan: {exc.message}") from None
    states = tuple(tuple(decode_value(v) for v in x) for x in doc["states"])
    controls = tuple(tuple(decode_value(v) for v in u) for u in doc["controls"])
    try:
        return Plan(tuple(doc["skeleton"]), states, controls)
    except ValueError as exc:
        raise FormatError(f"plan: {exc}") from None


def dumps(doc) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def load_json(path: str) -> Any:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON: {exc}") from None


def load_scenario(path: str) -> Scenario:
    return scenario_from_dict(load_json(path))


def load_plan(path: str) -> Optional[Plan]:
    """Plan from a plan document or from the ``plan`` field of a run report."""
    doc = load_json(path)
    if isinstance(doc, dict) and "outcome" in doc:
        doc = doc.get("plan")
        if doc is None:
            return None
    return plan_from_dict(doc)
