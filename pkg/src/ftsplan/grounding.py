"""Compile a problem and a set of constraint elements into a finite-domain task.

Each clause becomes one action per binding of its free parameters that is
supported by the known elements.  With axioms enabled, a constraint that
reads current-state variables is replaced by a derived variable
``name(·, v, ...)`` whose state-in slots are wildcarded, and one axiom per
element says when it holds.  This keeps action counts independent of how
many values the other state variables can take.
"""
from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

from .core import (CONTROL, NEXT, PAIRWISE, STATE, Clause, Element, InconsistentClause, Param, Problem,
                   TransitionSystem, free_parameters, is_lazy, lazy_values)

logger = logging.getLogger(__name__)

GOAL_VAR = "goal"
GOAL_ACTION = "goal"


class DerivedVar(NamedTuple):
    """Derived boolean: ``name`` holds for the non-state-in ``values`` given
    the current state."""

    name: str
    params: tuple
    values: tuple

    def __repr__(self):
        it = iter(self.values)
        args = ["·" if p.kind == STATE else repr(next(it)) for p in self.params]
        return f"{self.name}({', '.join(args)})"


@dataclass(eq=False)
class GroundedAction:
    name: str
    binding: tuple
    pre: tuple
    derived: tuple
    eff: tuple
    cost: int
    controls: tuple = ()

    def __repr__(self):
        args = ", ".join(f"{v!r}" for _, v in self.binding)
        return f"{self.name}({args})"


@dataclass(eq=False)
class Axiom:
    derived: DerivedVar
    pre: tuple


@dataclass
class GroundedTask:
    variables: tuple
    init: tuple
    actions: list
    axioms: list
    goal: tuple
    state_vars: tuple = ()
    _axiom_index: Optional[dict] = field(default=None, repr=False)

    @property
    def goal_index(self) -> int:
        return self.variables.index(GOAL_VAR)

    def _index(self):
        if self._axiom_index is None:
            always, keyed = [], {}
            for ax in self.axioms:
                if not ax.pre:
                    always.append(ax.derived)
                else:
                    keyed.setdefault(ax.pre[0], []).append((ax.pre[1:], ax.derived))
            self._axiom_index = (always, keyed)
        return self._axiom_index

    def derived_closure(self, state: tuple) -> frozenset:
        """All derived variables true in ``state`` (one pass: axioms only read core variables)."""
        always, keyed = self._index()
        out = set(always)
        for var, val in enumerate(state):
            for rest, token in keyed.get((var, val), ()):
                if all(state[v] == x for v, x in rest):
                    out.add(token)
        return frozenset(out)

    def applicable(self, action: GroundedAction, state: tuple, derived: frozenset) -> bool:
        return all(state[v] == x for v, x in action.pre) and all(d in derived for d in action.derived)

    def apply(self, action: GroundedAction, state: tuple) -> tuple:
        new = list(state)
        for v, x in action.eff:
            new[v] = x
        return tuple(new)

    def is_goal(self, state: tuple) -> bool:
        return all(state[v] == x for v, x in self.goal)

    def domains(self) -> dict:
        dom = {v: {} for v in range(len(self.variables))}
        for v, x in enumerate(self.init):
            dom[v][x] = None
        for a in self.actions:
            for v, x in itertools.chain(a.pre, a.eff):
                dom[v][x] = None
        for ax in self.axioms:
            for v, x in ax.pre:
                dom[v][x] = None
        return {self.variables[v]: list(xs) for v, xs in dom.items()}


def index_elements(elements: Iterable[Element]) -> dict:
    table = {}
    for e in elements:
        table.setdefault(e.name, {})[e.values] = None
    return {name: list(rows) for name, rows in table.items()}


def discretize(elements: Iterable[Element], system: TransitionSystem,
               extra_clauses: Sequence[Clause] = ()) -> dict:
    """Values each parameter index takes across the elements mentioning it."""
    table = elements if isinstance(elements, Mapping) else index_elements(elements)
    occurrences = {}
    for clause in list(system.clauses) + list(extra_clauses):
        for c in clause.nonequality():
            occurrences[(c.name, c.params)] = None
    domains = {}
    for name, params in occurrences:
        rows = table.get(name, ())
        for i, p in enumerate(params):
            dom = domains.setdefault(p, {})
            for row in rows:
                dom[row[i]] = None
    return {p: tuple(vals) for p, vals in domains.items()}


def _join(relations: list, unary: dict, index_cache: Optional[dict] = None) -> Iterable[dict]:
    """Enumerate assignments consistent with every relation.

    ``relations`` holds ``(variables, rows)`` pairs; ``unary`` maps leftover
    variables to candidate values.  Output order follows row order.
    ``index_cache`` reuses hash indexes of row lists shared between calls.
    """
    if index_cache is None:
        index_cache = {}
    relations = sorted(relations, key=lambda r: len(r[1]))
    plan, bound = [], set()
    remaining = list(relations)
    while remaining:
        best = max(range(len(remaining)), key=lambda i: (len(set(remaining[i][0]) & bound), -i))
        variables, rows = remaining.pop(best)
        key_pos = tuple(i for i, v in enumerate(variables) if v in bound)
        cache_key = (id(rows), key_pos)
        index = index_cache.get(cache_key)
        if index is None:
            index = {}
            for row in rows:
                index.setdefault(tuple(row[i] for i in key_pos), []).append(row)
            index_cache[cache_key] = index
        plan.append((variables, key_pos, index))
        bound |= set(variables)
    for var, values in unary.items():
        if var not in bound:
            plan.append(((var,), [], {(): [(v,) for v in values]}))
            bound.add(var)

    assignment = {}

    def extend(depth):
        if depth == len(plan):
            yield dict(assignment)
            return
        variables, key_pos, index = plan[depth]
        key = tuple(assignment[variables[i]] for i in key_pos)
        for row in index.get(key, ()):
            added = []
            ok = True
            for var, val in zip(variables, row):
                if var in assignment:
                    if assignment[var] != val:
                        ok = False
                        break
                else:
                    assignment[var] = val
                    added.append(var)
            if ok:
                yield from extend(depth + 1)
            for var in added:
                del assignment[var]

    yield from extend(0)


def _frames(clause: Clause) -> set:
    out = set()
    for c in clause.constraints:
        if c.equality == PAIRWISE:
            a, b = c.params
            if {a.kind, b.kind} == {STATE, NEXT} and a.slot == b.slot:
                out.add(a.slot)
    return out


def ground_clause(system: TransitionSystem, clause: Clause, table: Mapping, domains: Mapping,
                  axioms: bool = True, goal_index: Optional[int] = None, cache: Optional[dict] = None) -> list:
    """Ground one clause.  With ``goal_index`` set the clause is treated as the
    goal condition and its single effect is ``goal := True``.

    ``cache`` may be shared between clauses grounded over the same table; it
    memoizes the filtered projection of each constraint's rows.
    """
    if cache is None:
        cache = {}
    universe = clause.params
    if goal_index is None:
        universe += [Param(NEXT, i) for i in range(system.m)]
    try:
        fp = free_parameters(clause, universe=universe)
    except InconsistentClause as exc:
        logger.warning("skipping clause %s: %s", clause.name, exc)
        return []
    comp_of = fp.component_of
    derived, kept = [], []
    for c in clause.nonequality():
        if axioms and any(p.kind == STATE for p in c.params):
            derived.append(c)
        else:
            kept.append(c)
    frames = _frames(clause)
    eff_params = [] if goal_index is not None else [Param(NEXT, i) for i in range(system.m) if i not in frames]

    needed = {}
    for c in kept:
        for p in c.params:
            needed[comp_of[p]] = None
    for c in derived:
        for p in c.params:
            if p.kind != STATE:
                needed[comp_of[p]] = None
    for p in eff_params:
        needed[comp_of[p]] = None
    variables = [comp for comp in needed if comp not in fp.fixed]

    def relation(c, positions):
        comps = [comp_of[c.params[i]] for i in positions]
        out_vars = list(dict.fromkeys(comp for comp in comps if comp not in fp.fixed))
        pattern = tuple(("fixed", fp.fixed[comp]) if comp in fp.fixed else ("var", out_vars.index(comp))
                        for comp in comps)
        key = (c.name, tuple(positions), pattern)
        if key not in cache:
            cache[key] = _project(c, positions, comps)
        return tuple(out_vars), cache[key]

    def _project(c, positions, comps):
        out_vars = list(dict.fromkeys(comp for comp in comps if comp not in fp.fixed))
        rows = {}
        for row in table.get(c.name, ()):
            vals = {}
            ok = True
            for i, comp in zip(positions, comps):
                v = row[i]
                if comp in fp.fixed:
                    ok = fp.fixed[comp] == v
                elif vals.setdefault(comp, v) != v:
                    ok = False
                if not ok:
                    break
            if ok:
                rows[tuple(vals[comp] for comp in out_vars)] = None
        return list(rows)

    relations = [relation(c, tuple(range(len(c.params)))) for c in kept]
    for c in derived:
        positions = tuple(i for i, p in enumerate(c.params) if p.kind != STATE)
        if positions:
            relations.append(relation(c, positions))
    if any(not rows for _, rows in relations):
        return []
    covered = {v for vars_, _ in relations for v in vars_}
    unary = {}
    for comp in variables:
        if comp not in covered:
            vals = {}
            for p in comp:
                for v in domains.get(p, ()):
                    vals[v] = None
            if not vals:
                return []
            unary[comp] = list(vals)

    pre_params = [p for p in universe if p.kind == STATE and (comp_of[p] in needed or comp_of[p] in fp.fixed)]
    actions = []
    indexes = cache.setdefault("indexes", {})
    for assign in _join(relations, unary, indexes):
        def value(p):
            comp = comp_of[p]
            return fp.fixed[comp] if comp in fp.fixed else assign[comp]
        pre = tuple((p.slot, value(p)) for p in pre_params)
        tokens = tuple(DerivedVar(c.name, c.params, tuple(value(p) for p in c.params if p.kind != STATE))
                       for c in derived)
        if goal_index is not None:
            eff = ((goal_index, True),)
        else:
            eff = tuple((p.slot, value(p)) for p in eff_params)
        controls = tuple(value(Param(CONTROL, j)) if Param(CONTROL, j) in comp_of and
                         (comp_of[Param(CONTROL, j)] in needed or comp_of[Param(CONTROL, j)] in fp.fixed)
                         else None for j in range(system.n))
        binding = tuple((comp[0], assign[comp]) for comp in variables)
        cost = len(lazy_values(v for _, v in binding))
        actions.append(GroundedAction(clause.name, binding, pre, tokens, eff, cost, controls))
    return actions


def derived_signatures(system: TransitionSystem, include_static: bool = False) -> list:
    """Distinct ``(name, params)`` constraint occurrences that become derived variables."""
    seen = {}
    for clause in system.clauses:
        for c in clause.nonequality():
            if include_static or any(p.kind == STATE for p in c.params):
                seen.setdefault((c.name, c.params), None)
    return list(seen)


def ground_axioms(system: TransitionSystem, elements: Iterable[Element], include_static: bool = True,
                  signatures: Optional[Sequence] = None) -> list:
    """One axiom per element and constraint occurrence: the element's state-in
    values as preconditions, its other values naming the derived variable."""
    table = elements if isinstance(elements, Mapping) else index_elements(elements)
    if signatures is None:
        signatures = derived_signatures(system, include_static)
    out = []
    for name, params in signatures:
        for row in table.get(name, ()):
            pre = tuple((p.slot, v) for p, v in zip(params, row) if p.kind == STATE)
            token = DerivedVar(name, params, tuple(v for p, v in zip(params, row) if p.kind != STATE))
            out.append(Axiom(token, pre))
    return out


def ground_actions(system: TransitionSystem, elements: Iterable[Element], domains: Optional[Mapping] = None,
                   axioms: bool = True) -> list:
    table = elements if isinstance(elements, Mapping) else index_elements(elements)
    if domains is None:
        domains = discretize((Element(n, r) for n, rows in table.items() for r in rows), system)
    out = []
    cache = {}
    for clause in system.clauses:
        out += ground_clause(system, clause, table, domains, axioms, cache=cache)
    return out


def add_goal_transition(task: GroundedTask, problem: Problem, table: Mapping, domains: Mapping) -> GroundedTask:
    """Append the goal action.  Goal constraints are grounded over existing
    elements directly (no derived variables), so each passing value gives
    its own goal action."""
    if GOAL_VAR not in task.variables:
        task.variables = task.variables + (GOAL_VAR,)
        task.init = task.init + (False,)
    index = task.variables.index(GOAL_VAR)
    task.actions = list(task.actions) + ground_clause(problem.system, problem.goal_clause, table, domains,
                                                      axioms=False, goal_index=index)
    task.goal = ((index, True),)
    return task


def compile_task(problem: Problem, elements: Iterable[Element], axioms: bool = True) -> GroundedTask:
    system = problem.system
    table = elements if isinstance(elements, Mapping) else index_elements(elements)
    flat = [Element(n, r) for n, rows in table.items() for r in rows]
    domains = discretize(flat, system, [problem.goal_clause])
    actions = ground_actions(system, table, domains, axioms)
    axiom_list = ground_axioms(system, table, signatures=derived_signatures(system)) if axioms else []
    task = GroundedTask(tuple(system.state_vars), problem.initial_state, actions, axiom_list, (),
                        state_vars=tuple(system.state_vars))
    return add_goal_transition(task, problem, table, domains)


def format_task(task: GroundedTask) -> str:
    """Line-oriented dump: one NAME / PRE / EFF / COST block per action."""
    names = task.variables

    def fmt(pairs):
        return " ".join(f"{names[v]}={x!r}" for v, x in pairs)

    lines = []
    for a in task.actions:
        lines.append(f"NAME {a!r}")
        pre = fmt(a.pre)
        if a.derived:
            pre = " ".join(filter(None, [pre] + [repr(d) for d in a.derived]))
        lines.append(f"PRE {pre}")
        lines.append(f"EFF {fmt(a.eff)}")
        lines.append(f"COST {a.cost}")
        lines.append("")
    for ax in task.axioms:
        lines.append(f"AXIOM {ax.derived!r} <- {fmt(ax.pre)}")
    return "\n".join(lines)


def count_discretization(domains: Mapping, elements: Iterable[Element], robot: str = "q",
                         motion: str = "Motion") -> tuple:
    """Number of states and of Move transitions over a discretization.

    ``domains`` maps each state variable to its sampled values.  A Move
    transition follows one trajectory edge with the objects held at any
    arrangement, so the count is (undirected edges) x (arrangements).
    """
    states = math.prod(len(v) for v in domains.values())
    edges = {frozenset((e.values[0], e.values[-1])) for e in elements if e.name == motion}
    arrangements = math.prod(len(v) for k, v in domains.items() if k != robot)
    return states, len(edges) * arrangements
