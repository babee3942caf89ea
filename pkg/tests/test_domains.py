import itertools

import numpy as np
import pytest

from ftsplan.core import Trajectory, validate_plan
from ftsplan.domains import Goal, ObjectSpec, Scenario, World, build_problem, generate_benchmark, obstructed_scenario
from ftsplan.domains.benchmarks import EXPERIMENTS, SIZE_RANGE, line_object, line_world
from ftsplan.domains.common import kinematics, pose_sampler
from ftsplan.domains.manipulation import manip_relation, manipulation_path
from ftsplan.domains.pickplace import ik_sampler, kin_relation
from ftsplan.geometry import AABB, Box, Placed, segment_clear
from ftsplan.planners import SOLVED, PlannerConfig, solve
from ftsplan.samplers import SamplerInstance, sample
from ftsplan.serialization import scenario_to_dict


@pytest.mark.parametrize("experiment", EXPERIMENTS)
def test_benchmarks_are_deterministic(experiment):
    lo, hi = SIZE_RANGE[experiment]
    size = min(hi, max(lo, 4))
    a = scenario_to_dict(generate_benchmark(experiment, size, 7))
    b = scenario_to_dict(generate_benchmark(experiment, size, 7))
    c = scenario_to_dict(generate_benchmark(experiment, size, 8))
    assert a == b and a != c


@pytest.mark.parametrize("experiment", EXPERIMENTS)
def test_benchmark_starts_are_valid(experiment):
    lo, hi = SIZE_RANGE[experiment]
    for size in (lo, hi):
        scenario = generate_benchmark(experiment, size, 0)
        world = scenario.world
        for o in world.objects:
            assert world.on_surface(o, o.pose)
            assert not world.object_overlaps(o.name, o.pose, world.initial_poses())
        build_problem(scenario)


def test_benchmark_size_limits():
    with pytest.raises(ValueError):
        generate_benchmark("distractors", 41, 0)
    with pytest.raises(ValueError):
        generate_benchmark("tabletop-grid", 0, 0)
    with pytest.raises(ValueError):
        generate_benchmark("stacking", 1, 0)
    with pytest.raises(ValueError):
        generate_benchmark("distractors", 1, 0, formulation="teleport")


def test_distractors_layout():
    scenario = generate_benchmark("distractors", 40, 3)
    names = scenario.world.object_names
    assert len(names) == 41 and names[0] == "green"
    assert list(scenario.goal.regions) == ["green"] and not scenario.goal.poses
    right = scenario.world.surfaces["right"]
    assert all(right.contains(o.pose) for o in scenario.world.objects[1:])
    empty = generate_benchmark("distractors", 0, 3)
    assert empty.world.object_names == ("green",)
    # the goal object does not depend on how many distractors there are
    assert empty.world.objects[0] == scenario.world.objects[0]


def test_tabletop_grid_goals_are_distinct_cells():
    scenario = generate_benchmark("tabletop-grid", 9, 1)
    cells = list(scenario.goal.poses.values())
    assert len(set(cells)) == 9
    assert all(scenario.world.surfaces["target"].contains(c) for c in cells)
    assert min(np.linalg.norm(np.subtract(a, b)) for a, b in itertools.combinations(cells, 2)) >= 1.0


def test_tabletop_grid_eight_solves():
    problem, samplers = build_problem(generate_benchmark("tabletop-grid", 8, 0))
    result = solve(problem, samplers, "focused", PlannerConfig(timeout=120))
    assert result.outcome == SOLVED and validate_plan(problem, result.plan)
    # every block is picked and placed at least once
    assert len(result.plan) >= 16 and len(result.plan) % 2 == 0


def test_clear_table_center():
    scenario = generate_benchmark("clear-table", 6, 2)
    blue = scenario.world.object("blue")
    assert blue.pose == scenario.world.surfaces["left"].center
    problem, samplers = build_problem(scenario)
    result = solve(problem, samplers, "focused", PlannerConfig(timeout=60))
    assert result.outcome == SOLVED and validate_plan(problem, result.plan)


def test_ik_is_exact():
    world = line_world([line_object("A", 5.0)])
    obj = world.object("A")
    kin = kin_relation(obj)
    rng = np.random.default_rng(1)
    for _ in range(50):
        p, g = (float(rng.uniform(-9, 9)),), (float(rng.choice([-1.05, 1.05])),)
        inst = SamplerInstance(ik_sampler(world, obj), (p, g))
        out = sample(inst)
        if out:
            q = out[0].values[2]
            assert q == kinematics(p, g) and kin.test(g, p, q)
            assert world.robot_free(q)
        else:
            assert not world.robot_free(kinematics(p, g))
    assert not kin.test((1.05,), (5.0,), (3.9,))


def test_pose_samples_cover_the_surface():
    world = World(bounds=AABB((-5.0, -5.0), (5.0, 5.0)), robot=Box((0.3, 0.3)), home=(0.0, 0.0),
                  surfaces={"table": AABB((0.0, 0.0), (4.0, 4.0))},
                  objects=(ObjectSpec("A", 0.25, (1.0, 1.0), ("table",), ((0.6, 0.0),)),))
    obj = world.object("A")
    inst = SamplerInstance(pose_sampler(world, obj), (), seed=2)
    poses = [e.values[0] for _ in range(600) for e in sample(inst)]
    assert len(poses) >= 500
    assert all(world.on_surface(obj, p) for p in poses)
    quadrants = np.histogram2d([p[0] for p in poses], [p[1] for p in poses], bins=2, range=[[0, 4], [0, 4]])[0]
    assert quadrants.min() > 0.15 * len(poses)


def test_poses_avoid_static_obstacles():
    world = obstructed_scenario().world
    obj = world.object("B")
    inst = SamplerInstance(pose_sampler(world, obj), (), seed=0)
    poses = [e.values[0] for _ in range(300) for e in sample(inst)]
    assert poses and all(world.object_free(obj, p) for p in poses)


def test_manipulation_paths_are_symmetric():
    world = line_world([line_object("A", 5.0)])
    path = manipulation_path(world, (5.0,), (1.05,), via=(2.0,))
    assert path == ((0.0,), (2.0,), (3.95,), (2.0,), (0.0,))
    manip = manip_relation(world, world.object("A"))
    assert manip.test((5.0,), (1.05,), Trajectory(path, ("A", (1.05,))))
    assert not manip.test((5.0,), (1.05,), Trajectory(path, None))
    assert not manip.test((5.0,), (1.05,), Trajectory(path[:4] + ((0.5,),), ("A", (1.05,))))


def _motion_world(obstacles=()):
    return World(bounds=AABB((-5.0, -6.0), (5.0, 5.0)), robot=Box((0.3, 0.3)), home=(0.0, 0.0),
                 obstacles=tuple(obstacles))


@pytest.mark.parametrize("algo", ["incremental", "focused"])
def test_motion_in_empty_workspace(algo):
    scenario = Scenario("motion", _motion_world(), Goal(conf=(3.0, -2.0)))
    problem, samplers = build_problem(scenario)
    result = solve(problem, samplers, algo, PlannerConfig(timeout=30))
    assert result.outcome == SOLVED and validate_plan(problem, result.plan)
    assert len(result.plan) in (1, 2)


def test_motion_around_u_shape():
    cup = [Placed(Box((0.25, 1.75)), (-1.75, 0.0)), Placed(Box((0.25, 1.75)), (1.75, 0.0)),
           Placed(Box((2.0, 0.25)), (0.0, -1.75))]
    world = _motion_world(cup)
    start, goal = (0.0, 0.0), (0.0, -4.0)
    # no straight line and no single bend over a fine grid of via points
    assert not segment_clear(start, goal, world.robot, cup)
    grid = [(float(x), float(y)) for x in np.linspace(-4.9, 4.9, 50) for y in np.linspace(-5.9, 4.9, 55)]
    assert not any(world.robot_free(w) and segment_clear(start, w, world.robot, cup)
                   and segment_clear(w, goal, world.robot, cup) for w in grid)
    problem, samplers = build_problem(Scenario("motion", world, Goal(conf=goal)))
    result = solve(problem, samplers, "focused", PlannerConfig(timeout=60))
    assert result.outcome == SOLVED and validate_plan(problem, result.plan)
    assert len(result.plan) >= 3
