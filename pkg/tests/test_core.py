import random
import time

import pytest

from ftsplan.core import (CONTROL, NEXT, STATE, Clause, Element, InconsistentClause, MalformedPlan, Param, Plan,
                          PlanParam, Problem, Relation, SamplerNode, TransitionSystem, Trajectory, equal,
                          free_parameters, initial_clause, same, skeleton_constraint_network,
                          skeleton_free_parameters, validate_plan, validate_sampling_network)
from ftsplan.domains import build_motion_problem
from ftsplan.domains.benchmarks import line_world
from ftsplan.planners import PlannerConfig, solve

from oracles import RUNNING_FREE, RUNNING_PARAMS, RUNNING_SKELETON, brute_force_violation


def test_running_skeleton_counts(running_problem):
    problem, _ = running_problem
    start = time.monotonic()
    fp = skeleton_free_parameters(problem, RUNNING_SKELETON)
    assert time.monotonic() - start < 1.0
    assert len(fp.all_params) == RUNNING_PARAMS
    assert len(fp.free) == RUNNING_FREE


def test_running_skeleton_free_set(running_problem):
    problem, _ = running_problem
    q, a, b = 0, 1, 2
    fp = skeleton_free_parameters(problem, RUNNING_SKELETON)
    # trajectories of the three moves, plus where A is held and placed
    assert set(fp.free) == {PlanParam(1, CONTROL, 0), PlanParam(3, CONTROL, 0), PlanParam(5, CONTROL, 0),
                            PlanParam(1, STATE, q), PlanParam(2, STATE, a), PlanParam(3, STATE, q),
                            PlanParam(4, STATE, a)}
    # B never moves and the goal fixes the final configuration
    assert PlanParam(0, STATE, b) in fp.component_of and fp.fixed[fp.component_of[PlanParam(5, STATE, b)]] == (8.0,)
    assert fp.fixed[fp.component_of[PlanParam(5, STATE, q)]] == (0.0,)


def test_pick_clause_free_parameters(running_problem):
    problem, _ = running_problem
    pick = problem.system.clause("Pick:A")
    fp = free_parameters(pick)
    assert set(fp.free) == {Param(STATE, 1), Param(NEXT, 1), Param(STATE, 0)}
    assert fp.representative[Param(NEXT, 0)] == Param(STATE, 0)


def test_fully_constrained_clause_has_no_free_parameters():
    x, nx = Param(STATE, 0), Param(NEXT, 0)
    fp = free_parameters([equal(x, 1), same(x, nx), Relation("R")(x)])
    assert fp.free == []
    assert fp.fixed[fp.component_of[nx]] == 1


def test_inconsistent_constants():
    x, nx = Param(STATE, 0), Param(NEXT, 0)
    with pytest.raises(InconsistentClause):
        free_parameters([equal(x, 1), equal(nx, 2), same(x, nx)])
    with pytest.raises(InconsistentClause):
        TransitionSystem(("s",), (), [Clause("bad", [equal(x, 1), equal(x, 2)])])


def test_constraint_construction_errors():
    x = Param(STATE, 0)
    with pytest.raises(ValueError):
        Relation("R")(x, x)
    with pytest.raises(ValueError):
        Relation("R")()
    with pytest.raises(ValueError):
        TransitionSystem(("s",), (), [Clause("c", [Relation("R")(Param(STATE, 3))])])
    with pytest.raises(ValueError):
        TransitionSystem(("s",), (), [Clause("c", [equal(x, 1)]), Clause("c", [equal(x, 2)])])


@pytest.mark.parametrize("k", [1, 2, 4])
def test_motion_skeleton_network(k):
    world = line_world([])
    problem, _ = build_motion_problem(world, (0.0,), (3.0,))
    net = skeleton_constraint_network(problem, ["Move"] * k)
    names = [c.name for c in net.constraints if not c.is_equality]
    assert names.count("Motion") == k and names.count("CFree") == k
    assert len(net.params) == 1 + 2 * k
    # every edge connects a listed parameter
    assert all(p in net.params for _, p in net.edges)
    with pytest.raises(MalformedPlan):
        skeleton_constraint_network(problem, [])


def test_sampling_network_checks():
    q1, t1, q2 = PlanParam(1, STATE, 0), PlanParam(1, CONTROL, 0), PlanParam(2, STATE, 0)
    conf1 = SamplerNode("conf", (), (q1,))
    conf2 = SamplerNode("conf", (), (q2,))
    motion = SamplerNode("motion", (q1, q2), (t1,))
    ok = validate_sampling_network([motion, conf1, conf2], [q1, t1, q2])
    assert ok and ok.order.index("motion") == 2
    twice = validate_sampling_network([conf1, SamplerNode("conf", (), (q1,)), conf2, motion], [q1, t1, q2])
    assert not twice and twice.param == q1
    missing = validate_sampling_network([conf1, motion], [q1, t1, q2])
    assert not missing and missing.param == q2
    loop = validate_sampling_network([SamplerNode("loop", (q1,), (q1,)), conf2, motion], [q1, t1, q2])
    assert not loop and "no order" in loop.problem


def _toy_problem():
    """Counter that steps by one, with an explicit element table check."""
    x, u, nx = Param(STATE, 0), Param(CONTROL, 0), Param(NEXT, 0)
    step = Relation("Step", lambda a, d, b: b == a + d and d in (1, -1))
    system = TransitionSystem(("n",), ("d",), [Clause("step", [step(x, u, nx)])])
    goal = Clause("goal", [equal(x, 3)])
    return Problem(system, initial_clause(system, {"n": 0}), goal, [], "counter")


def test_validate_plan():
    problem = _toy_problem()
    good = Plan(["step"] * 3, [(0,), (1,), (2,), (3,)], [(1,)] * 3)
    assert validate_plan(problem, good)
    short = Plan(["step"] * 2, [(0,), (1,), (2,)], [(1,)] * 2)
    bad = validate_plan(problem, short)
    assert not bad and bad.violation.clause == "goal" and bad.violation.step == 2
    jump = Plan(["step"], [(0,), (3,)], [(3,)])
    assert validate_plan(problem, jump).violation.step == 1
    wrong_start = Plan(["step"] * 4, [(-1,), (0,), (1,), (2,), (3,)], [(1,)] * 4)
    assert validate_plan(problem, wrong_start).violation.step == 0
    with pytest.raises(MalformedPlan):
        validate_plan(problem, Plan(["jump"], [(0,), (1,)], [(1,)]))
    with pytest.raises(MalformedPlan):
        Plan(["step"], [(0,)], [(1,)])


def test_empty_plan_when_goal_holds():
    problem = _toy_problem()
    assert not validate_plan(problem, Plan([], [(0,)], []))
    trivial = Problem(problem.system, problem.initial_clause, Clause("goal", [equal(Param(STATE, 0), 0)]))
    assert validate_plan(trivial, Plan([], [(0,)], []))


def test_collision_violation_is_reported(pickplace_problem):
    problem, samplers = pickplace_problem
    plan = solve(problem, samplers, "focused", PlannerConfig(timeout=60)).plan
    assert plan is not None and validate_plan(problem, plan)
    # drive the first move straight through B at 8.0
    i = plan.skeleton.index("Move")
    x = list(plan.states[i])
    x2 = list(plan.states[i + 1])
    x2[0] = (9.0,)
    states = list(plan.states)
    states[i + 1] = tuple(x2)
    controls = list(plan.controls)
    controls[i] = (Trajectory((x[0], (9.0,))),)
    broken = Plan(plan.skeleton, states, controls)
    result = validate_plan(problem, broken)
    assert not result and result.violation.step == i + 1
    assert result.violation.constraint in ("CFree:B", "CFree:A", "CFree")


def test_perturbed_plans_match_brute_force(pickplace_problem):
    problem, samplers = pickplace_problem
    plan = solve(problem, samplers, "focused", PlannerConfig(timeout=60)).plan
    rng = random.Random(3)
    for _ in range(100):
        states = [list(s) for s in plan.states]
        controls = [list(u) for u in plan.controls]
        if rng.random() < 0.5:
            s = rng.randrange(len(states))
            v = rng.randrange(len(states[s]))
            states[s][v] = rng.choice([(rng.uniform(-11, 11),), None, "A", "B", (1.05,)])
        else:
            s = rng.randrange(len(controls))
            controls[s][0] = Trajectory(((rng.uniform(-11, 11),), (rng.uniform(-11, 11),)))
        perturbed = Plan(plan.skeleton, states, controls)
        got = validate_plan(problem, perturbed)
        expected = brute_force_violation(problem, perturbed)
        if expected is None:
            assert got
        else:
            assert not got and (got.violation.step, got.violation.clause) == expected


def test_elements_compare_by_value():
    a = Element("R", ((1.0,),), producer="x")
    b = Element("R", ((1.0,),), producer="y")
    assert a == b and hash(a) == hash(b)
    assert Trajectory(((0.0,), (1.0,))) == Trajectory(((0.0,), (1.0,)))
    assert Trajectory(((0.0,), (1.0,))) != Trajectory(((0.0,), (1.0,)), ("A", (1.0,)))
