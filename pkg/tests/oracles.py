"""Independent reference implementations used to check the package.

Each oracle recomputes a quantity from first principles without calling
the code under test beyond reading its plain data structures.
"""
from __future__ import annotations

import itertools
import random
import re

import numpy as np

from ftsplan.core import (CONTROL, NEXT, STATE, Clause, Element, Param, Problem, Relation, TransitionSystem,
                          equal, initial_clause, same)
from ftsplan.grounding import Axiom, DerivedVar, GroundedAction, GroundedTask
from ftsplan.planners import PlannerConfig

# Frozen expected values.
RUNNING_SKELETON = ("Move", "Pick:A", "MoveH:A", "Place:A", "Move")
RUNNING_PARAMS = 29
RUNNING_FREE = 7
FACTORED_STATES = 160
FACTORED_MOVES = 208
INCREMENTAL_TRACE_ROWS = (
    {"grasp:A()", "grasp:B()", "pose:A()", "pose:B()"},
    {"manip:A(a0, ag)", "manip:A(a1, ag)", "manip:B(b0, bg)", "manip:B(b1, bg)", "pose:A()", "pose:B()"},
)
FOCUSED_TRACE_ROWS = (
    {"grasp:A()", "pose:A()"},
    {"manip:A(a0, ag)", "manip:A(a1, ag)"},
)

# focused settings whose sampler calls match FOCUSED_TRACE_ROWS
TRACE_FOCUSED = PlannerConfig(search="bfs", lazy_tokens="sampler", direct_add=True)

_CALL = re.compile(r"^(\w+):(\w)\((.*)\)$")


def label(call: str, initial: dict) -> str:
    """Rename concrete values in a sampler call: initial pose o0, sampled pose o1, grasp og."""
    name, obj, args = _CALL.match(call).groups()
    if not args:
        return call
    o = obj.lower()
    pose, grasp = args.split(", ")
    pose = f"{o}0" if pose == initial[obj] else f"{o}1"
    return f"{name}:{obj}({pose}, {o}g)"


def trace_rows(result):
    initial = {"A": "(5)", "B": "(8)"}
    return [{label(c, initial) for c in rec.sampled_instances()} for rec in result.trace]


# plan checking

def param_value(p: Param, x, u, x2):
    return {STATE: x, CONTROL: u, NEXT: x2}[p.kind][p.slot]


def constraint_holds(c, x, u, x2) -> bool:
    values = [param_value(p, x, u, x2) for p in c.params]
    if c.is_equality:
        return values[0] == c.value if len(values) == 1 else values[0] == values[1]
    return c.test is None or bool(c.test(*values))


def brute_force_violation(problem: Problem, plan):
    """First ``(step, clause name)`` whose constraints fail, or None."""
    if not all(constraint_holds(c, plan.states[0], (), ()) for c in problem.initial_clause.constraints):
        return (0, problem.initial_clause.name)
    for i, name in enumerate(plan.skeleton):
        clause = next(c for c in problem.system.clauses if c.name == name)
        x, u, x2 = plan.states[i], plan.controls[i], plan.states[i + 1]
        if not all(constraint_holds(c, x, u, x2) for c in clause.constraints):
            return (i + 1, name)
    if not all(constraint_holds(c, plan.states[-1], (), ()) for c in problem.goal_clause.constraints):
        return (len(plan.skeleton), "goal")
    return None


# random finite factored systems

def random_system(rng: random.Random, values=4):
    """A small factored system whose relations are given purely by element
    tables, plus its initial state, goal clause and elements."""
    m = rng.randint(2, 3)
    state_vars = tuple(f"s{i}" for i in range(m))
    x = [Param(STATE, i) for i in range(m)]
    nx = [Param(NEXT, i) for i in range(m)]
    u = Param(CONTROL, 0)
    clauses, elements = [], []
    for k in range(rng.randint(2, 4)):
        rel_params = []
        changed = rng.sample(range(m), rng.randint(1, m))
        constraints = []
        for i in range(m):
            if i not in changed:
                constraints.append(same(x[i], nx[i]))
        # one relation per changed variable linking its next value to something
        for i in changed:
            pool = [p for p in x + [u] if p != nx[i]]
            extra = rng.sample(pool, rng.randint(1, 2))
            rel_params.append(tuple([nx[i]] + extra))
        if rng.random() < 0.5:
            rel_params.append(tuple(rng.sample(x, rng.randint(1, min(2, m)))))
        for j, params in enumerate(rel_params):
            name = f"R{k}_{j}"
            constraints.append(Relation(name)(*params))
            rows = {tuple(rng.randrange(values) for _ in params) for _ in range(rng.randint(4, 14))}
            elements += [Element(name, r) for r in sorted(rows)]
        if rng.random() < 0.3:
            i = rng.choice([i for i in range(m) if i in changed] or [0])
            constraints.append(equal(x[i], rng.randrange(values)))
        clauses.append(Clause(f"C{k}", constraints))
    system = TransitionSystem(state_vars, ("u",), clauses, {s: tuple(range(values)) for s in state_vars})
    init = {s: rng.randrange(values) for s in state_vars}
    goal = []
    for i in rng.sample(range(m), rng.randint(1, 2)):
        goal.append(equal(x[i], rng.choice([v for v in range(values) if v != init[state_vars[i]]])))
    goal = Clause("goal", goal)
    problem = Problem(system, initial_clause(system, init), goal, [], "random")
    return problem, elements


def transition_table(problem: Problem, elements, values=4) -> dict:
    """Exact successor sets of every state, enumerating ``(x, u, x')``."""
    rows = {}
    for e in elements:
        rows.setdefault(e.name, set()).add(e.values)
    controls = sorted({v for e in elements for v in e.values}) or [0]
    m = problem.system.m
    states = list(itertools.product(range(values), repeat=m))

    def holds(c, x, uu, x2):
        vals = tuple(param_value(p, x, (uu,), x2) for p in c.params)
        if c.is_equality:
            return vals[0] == c.value if len(vals) == 1 else vals[0] == vals[1]
        return vals in rows.get(c.name, ())

    succ = {}
    for x in states:
        out = set()
        for x2 in states:
            for uu in controls:
                if any(all(holds(c, x, uu, x2) for c in cl.constraints) for cl in problem.system.clauses):
                    out.add(x2)
                    break
        succ[x] = out
    return succ


def goal_states(problem: Problem, values=4) -> set:
    out = set()
    for x in itertools.product(range(values), repeat=problem.system.m):
        if all(constraint_holds(c, x, (), ()) for c in problem.goal_clause.constraints):
            out.add(x)
    return out


def bfs_distance(succ: dict, start, goals: set):
    """Plain BFS distance in an explicit successor table."""
    if start in goals:
        return 0
    frontier, seen, d = [start], {start}, 0
    while frontier:
        d += 1
        nxt = []
        for s in frontier:
            for t in succ[s]:
                if t not in seen:
                    if t in goals:
                        return d
                    seen.add(t)
                    nxt.append(t)
        frontier = nxt
    return None


def reachable(succ: dict, start) -> set:
    seen, stack = {start}, [start]
    while stack:
        s = stack.pop()
        for t in succ[s]:
            if t not in seen:
                seen.add(t)
                stack.append(t)
    return seen


# random grounded tasks

def random_task(rng: random.Random, axioms: bool = True) -> GroundedTask:
    """A random finite-domain task with at most 4^4 = 256 states."""
    n = rng.randint(2, 4)
    dom = [rng.randint(2, 4) for _ in range(n)]
    init = tuple(rng.randrange(d) for d in dom)
    derived = [DerivedVar(f"D{i}", (), (i,)) for i in range(rng.randint(0, 3) if axioms else 0)]
    axiom_list = []
    for d in derived:
        for _ in range(rng.randint(1, 3)):
            vs = rng.sample(range(n), rng.randint(0, min(2, n)))
            axiom_list.append(Axiom(d, tuple((v, rng.randrange(dom[v])) for v in sorted(vs))))
    actions = []
    for k in range(rng.randint(4, 14)):
        pre_vars = rng.sample(range(n), rng.randint(0, min(2, n)))
        eff_vars = rng.sample(range(n), rng.randint(1, min(2, n)))
        pre = tuple((v, rng.randrange(dom[v])) for v in sorted(pre_vars))
        eff = tuple((v, rng.randrange(dom[v])) for v in sorted(eff_vars))
        needs = tuple(rng.sample(derived, rng.randint(0, min(1, len(derived)))))
        actions.append(GroundedAction(f"a{k}", (), pre, needs, eff, rng.randint(0, 1)))
    goal = tuple((v, rng.choice([x for x in range(dom[v]) if x != init[v]]))
                 for v in sorted(rng.sample(range(n), rng.randint(1, 2))))
    task = GroundedTask(tuple(f"v{i}" for i in range(n)), init, actions, axiom_list, goal)
    task.sizes = dom
    return task


def derived_true(task: GroundedTask, state) -> set:
    return {ax.derived for ax in task.axioms if all(state[v] == x for v, x in ax.pre)}


def matrix_distance(task: GroundedTask):
    """Shortest plan length by powers of the boolean transition matrix."""
    states = list(itertools.product(*[range(d) for d in task.sizes]))
    index = {s: i for i, s in enumerate(states)}
    n = len(states)
    adj = np.zeros((n, n), dtype=bool)
    for s in states:
        dv = derived_true(task, s)
        for a in task.actions:
            if all(s[v] == x for v, x in a.pre) and all(d in dv for d in a.derived):
                t = list(s)
                for v, x in a.eff:
                    t[v] = x
                adj[index[s], index[tuple(t)]] = True
    goal = np.array([all(s[v] == x for v, x in task.goal) for s in states])
    frontier = np.zeros(n, dtype=bool)
    frontier[index[task.init]] = True
    seen = frontier.copy()
    for d in range(n + 1):
        if (frontier & goal).any():
            return d
        frontier = (frontier.astype(np.int64) @ adj.astype(np.int64)) > 0
        frontier &= ~seen
        if not frontier.any():
            return None
        seen |= frontier
    return None


def relaxed_plan_oracle(task: GroundedTask, state) -> float:
    """Relaxed-plan length from a level fixpoint (Bellman-Ford style).

    Facts are ``("v", var, value)`` or ``("d", derived)``; actions cost one
    level and axioms none.  Extraction takes, for each goal fact, the
    achiever whose level plus cost equals the fact's level, preferring the
    smallest summed precondition level and then the earliest operator
    (actions before axioms, each in task order).
    """
    ops = []
    for i, a in enumerate(task.actions):
        pre = list(dict.fromkeys([("v", v, x) for v, x in a.pre] + [("d", d) for d in a.derived]))
        ops.append((pre, [("v", v, x) for v, x in a.eff], 1, i))
    for ax in task.axioms:
        ops.append((list(dict.fromkeys(("v", v, x) for v, x in ax.pre)), [("d", ax.derived)], 0, -1))
    inf = float("inf")
    level = {("v", v, x): 0 for v, x in enumerate(state)}
    changed = True
    while changed:
        changed = False
        for pre, eff, cost, _ in ops:
            if all(p in level for p in pre):
                base = max((level[p] for p in pre), default=0)
                for f in eff:
                    if base + cost < level.get(f, inf):
                        level[f] = base + cost
                        changed = True
    goal = [("v", v, x) for v, x in task.goal]
    if any(g not in level for g in goal):
        return inf
    chosen, done, stack = set(), set(), list(goal)
    while stack:
        f = stack.pop()
        if f in done or level[f] == 0:
            continue
        done.add(f)
        best = None
        for k, (pre, eff, cost, _) in enumerate(ops):
            if f not in eff or not all(p in level for p in pre):
                continue
            if max((level[p] for p in pre), default=0) + cost != level[f]:
                continue
            key = (sum(level[p] for p in pre), k)
            if best is None or key < best[0]:
                best = (key, k)
        pre, _, _, idx = ops[best[1]]
        if idx >= 0:
            chosen.add(idx)
        stack.extend(pre)
    return len(chosen)
