"""Factored transition systems: parameters, constraints, clauses, problems and plans.

A transition system has ``m`` state variables and ``n`` control variables.  A
transition ``(x, u, x')`` is valid when it satisfies every constraint of at
least one clause.  Constraints refer to their arguments through ``Param``
indices, so the same clause can be re-indexed onto the steps of a plan.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Any, Callable, Hashable, Iterable, Mapping, NamedTuple, Optional, Sequence

logger = logging.getLogger(__name__)

STATE = "x"
CONTROL = "u"
NEXT = "x'"
KINDS = (STATE, CONTROL, NEXT)

CONSTANT = "constant"
PAIRWISE = "pairwise"


class InconsistentClause(ValueError):
    """Two different constants were forced equal by a clause."""


class MalformedPlan(ValueError):
    pass


class Param(NamedTuple):
    """Index of a transition parameter: a state-in, control or state-out slot."""

    kind: str
    slot: int

    def __repr__(self):
        return f"{self.kind}{self.slot}"


class PlanParam(NamedTuple):
    """A parameter of a whole plan: state ``x^step`` or control ``u^step``."""

    step: int
    kind: str
    slot: int

    def __repr__(self):
        return f"{self.kind}{self.slot}@{self.step}"


@dataclass(frozen=True, eq=False)
class LazySample:
    """Placeholder for a value some sampler instance may produce later.

    Equality is identity of the token id.
    """

    id: int
    origin: Any = None
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash(("lazy", self.id)))

    def __eq__(self, other):
        return isinstance(other, LazySample) and other.id == self.id

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"#{self.id}"


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Piecewise-linear path through configuration waypoints.

    ``attachment`` optionally names a body carried rigidly at an offset,
    as ``(object_name, offset)``.
    """

    waypoints: tuple
    attachment: Optional[tuple] = None
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.waypoints, self.attachment)))

    def __eq__(self, other):
        return (isinstance(other, Trajectory) and self._hash == other._hash
                and self.waypoints == other.waypoints and self.attachment == other.attachment)

    def __hash__(self):
        return self._hash

    @property
    def start(self):
        return self.waypoints[0]

    @property
    def end(self):
        return self.waypoints[-1]

    def segments(self):
        return list(zip(self.waypoints[:-1], self.waypoints[1:]))


def is_lazy(value) -> bool:
    return isinstance(value, LazySample)


def lazy_values(values: Iterable) -> list:
    out = []
    for v in values:
        if isinstance(v, LazySample) and v not in out:
            out.append(v)
    return out


@dataclass(frozen=True)
class Constraint:
    """A named relation applied to an ordered list of parameters.

    ``test`` is a predicate over value tuples.  When ``domains`` is also set
    the planner evaluates the test itself on every qualifying combination of
    known values; each domain is a frozenset of ``(constraint name, slot)``
    sources whose values may fill that argument.  Constraints without
    ``domains`` are only ever certified by samplers.
    """

    name: str
    params: tuple
    test: Optional[Callable] = field(default=None, compare=False, repr=False)
    domains: Optional[tuple] = field(default=None, compare=False, repr=False)
    lazy_test: Optional[Callable] = field(default=None, compare=False, repr=False)
    equality: Optional[str] = None
    value: Any = None

    def __post_init__(self):
        if not self.params:
            raise ValueError(f"constraint {self.name} has no parameters")
        if len(set(self.params)) != len(self.params):
            raise ValueError(f"constraint {self.name} repeats a parameter")
        if self.equality == CONSTANT and len(self.params) != 1:
            raise ValueError("constant equality takes exactly one parameter")
        if self.equality == PAIRWISE and len(self.params) != 2:
            raise ValueError("pairwise equality takes exactly two parameters")
        if self.domains is not None and len(self.domains) != len(self.params):
            raise ValueError(f"constraint {self.name} needs one domain per parameter")

    @property
    def is_equality(self) -> bool:
        return self.equality is not None

    @property
    def evaluated(self) -> bool:
        """True when the planner checks this constraint on new values itself."""
        return self.test is not None and self.domains is not None

    def holds(self, values: Sequence) -> Optional[bool]:
        """Check the constraint on concrete values, or None if it has no test."""
        if self.equality == CONSTANT:
            return values[0] == self.value
        if self.equality == PAIRWISE:
            return values[0] == values[1]
        if self.test is None:
            return None
        return bool(self.test(*values))

    def reindex(self, mapping: Callable) -> "Constraint":
        return replace(self, params=tuple(mapping(p) for p in self.params))

    def __repr__(self):
        if self.equality == CONSTANT:
            return f"{self.params[0]!r}={self.value!r}"
        if self.equality == PAIRWISE:
            return f"{self.params[0]!r}={self.params[1]!r}"
        return f"{self.name}({', '.join(map(repr, self.params))})"


def equal(param, value) -> Constraint:
    return Constraint("=", (param,), equality=CONSTANT, value=value)


def same(a, b) -> Constraint:
    return Constraint("=", (a, b), equality=PAIRWISE)


class Relation:
    """Factory for constraints sharing a name, test and auto-evaluation domains.

    >>> kin = Relation("Kin", test=lambda g, p, q: ...)
    >>> kin(Param(NEXT, 1), Param(STATE, 1), Param(STATE, 0))

    ``lazy_test`` screens value combinations that contain lazy samples: it
    gets the same arguments as ``test`` and returns False when no concrete
    values could ever pass.  Without it, such combinations pass optimistically.
    """

    def __init__(self, name: str, test: Optional[Callable] = None, domains: Optional[Sequence] = None,
                 lazy_test: Optional[Callable] = None):
        self.name = name
        self.test = test
        self.domains = tuple(frozenset(d) for d in domains) if domains is not None else None
        self.lazy_test = lazy_test

    def __call__(self, *params) -> Constraint:
        return Constraint(self.name, tuple(params), test=self.test, domains=self.domains, lazy_test=self.lazy_test)

    def __repr__(self):
        return f"Relation({self.name!r})"


@dataclass(frozen=True, eq=False)
class Element:
    """A constraint name paired with values certified to satisfy it.

    Elements compare by ``(name, values)``; the producing sampler instance is
    bookkeeping and does not take part in equality.
    """

    name: str
    values: tuple
    producer: Any = None
    _hash: int = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_hash", hash((self.name, self.values)))

    def __eq__(self, other):
        return (isinstance(other, Element) and self._hash == other._hash and self.name == other.name
                and self.values == other.values)

    def __hash__(self):
        return self._hash

    @property
    def is_lazy(self) -> bool:
        return any(isinstance(v, LazySample) for v in self.values)

    def __repr__(self):
        return f"{self.name}({', '.join(map(repr, self.values))})"


@dataclass(frozen=True)
class Clause:
    name: str
    constraints: tuple

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))

    @property
    def params(self) -> list:
        seen = {}
        for c in self.constraints:
            for p in c.params:
                seen.setdefault(p, None)
        return list(seen)

    def nonequality(self) -> list:
        return [c for c in self.constraints if not c.is_equality]

    def __repr__(self):
        return f"Clause({self.name})"


class Variables:
    """Name-based parameter lookup for building clauses."""

    def __init__(self, state_vars: Sequence[str], control_vars: Sequence[str]):
        self.state_vars = tuple(state_vars)
        self.control_vars = tuple(control_vars)

    def x(self, name) -> Param:
        return Param(STATE, self.state_vars.index(name))

    def u(self, name) -> Param:
        return Param(CONTROL, self.control_vars.index(name))

    def nx(self, name) -> Param:
        return Param(NEXT, self.state_vars.index(name))

    def frame(self, name) -> Constraint:
        """``x_name = x_name'``: the variable keeps its value."""
        return same(self.x(name), self.nx(name))


@dataclass(frozen=True)
class TransitionSystem:
    state_vars: tuple
    control_vars: tuple
    clauses: tuple
    variable_domains: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "state_vars", tuple(self.state_vars))
        object.__setattr__(self, "control_vars", tuple(self.control_vars))
        object.__setattr__(self, "clauses", tuple(self.clauses))
        names = [c.name for c in self.clauses]
        if len(set(names)) != len(names):
            raise ValueError("clause names must be unique")
        for clause in self.clauses:
            self.check_clause(clause)
        tests = {}
        for clause in self.clauses:
            for c in clause.nonequality():
                prev = tests.setdefault(c.name, c)
                if len(prev.params) != len(c.params):
                    raise ValueError(f"constraint {c.name} used with different arities")

    @property
    def m(self) -> int:
        return len(self.state_vars)

    @property
    def n(self) -> int:
        return len(self.control_vars)

    def x(self, name) -> Param:
        return Param(STATE, self.state_vars.index(name))

    def u(self, name) -> Param:
        return Param(CONTROL, self.control_vars.index(name))

    def nx(self, name) -> Param:
        return Param(NEXT, self.state_vars.index(name))

    def check_clause(self, clause: Clause):
        for c in clause.constraints:
            for p in c.params:
                limit = self.n if p.kind == CONTROL else self.m
                if p.kind not in KINDS or not 0 <= p.slot < limit:
                    raise ValueError(f"clause {clause.name}: parameter {p!r} out of range")
        constants = {}
        for c in clause.constraints:
            if c.equality == CONSTANT:
                prev = constants.setdefault(c.params[0], c.value)
                if prev != c.value:
                    raise InconsistentClause(f"clause {clause.name}: {c.params[0]!r} has two constants")

    def clause(self, name: str) -> Clause:
        for c in self.clauses:
            if c.name == name:
                return c
        raise MalformedPlan(f"unknown clause {name!r}")

    def constraint_table(self) -> dict:
        """One representative constraint per name (carries the shared test)."""
        table = {}
        for clause in self.clauses:
            for c in clause.nonequality():
                table.setdefault(c.name, c)
        return table


@dataclass(frozen=True)
class Problem:
    system: TransitionSystem
    initial_clause: Clause
    goal_clause: Clause
    initial_elements: tuple = ()
    name: str = "problem"

    def __post_init__(self):
        object.__setattr__(self, "initial_elements", tuple(self.initial_elements))
        assigned = {}
        for c in self.initial_clause.constraints:
            if c.equality != CONSTANT or c.params[0].kind != STATE:
                raise ValueError("initial clause must hold constant equalities on state variables")
            assigned[c.params[0].slot] = c.value
        if sorted(assigned) != list(range(self.system.m)):
            raise ValueError("initial clause must assign every state variable exactly once")
        for c in self.goal_clause.constraints:
            if any(p.kind != STATE for p in c.params):
                raise ValueError("goal clause may only mention state variables")
        self.system.check_clause(self.goal_clause)

    @property
    def initial_state(self) -> tuple:
        values = {c.params[0].slot: c.value for c in self.initial_clause.constraints}
        return tuple(values[i] for i in range(self.system.m))


def initial_clause(system: TransitionSystem, state: Mapping) -> Clause:
    return Clause("init", [equal(system.x(var), state[var]) for var in system.state_vars])


@dataclass(frozen=True)
class Plan:
    skeleton: tuple
    states: tuple
    controls: tuple

    def __post_init__(self):
        object.__setattr__(self, "skeleton", tuple(self.skeleton))
        object.__setattr__(self, "states", tuple(tuple(s) for s in self.states))
        object.__setattr__(self, "controls", tuple(tuple(u) for u in self.controls))
        if len(self.states) != len(self.controls) + 1:
            raise MalformedPlan("a plan needs one more state than controls")
        if len(self.skeleton) != len(self.controls):
            raise MalformedPlan("a plan needs one clause per control")

    def __len__(self):
        return len(self.controls)


def transition_values(params: Sequence[Param], x: Sequence, u: Sequence, x2: Sequence) -> tuple:
    lookup = {STATE: x, CONTROL: u, NEXT: x2}
    return tuple(lookup[p.kind][p.slot] for p in params)


@dataclass(frozen=True)
class Violation:
    step: int
    clause: str
    constraint: str
    values: tuple = ()

    def __str__(self):
        return f"step {self.step} ({self.clause}): {self.constraint} violated by {self.values!r}"


@dataclass(frozen=True)
class Validation:
    ok: bool
    violation: Optional[Violation] = None

    def __bool__(self):
        return self.ok


def _check(clause: Clause, step: int, x, u, x2) -> Optional[Violation]:
    for c in clause.constraints:
        values = transition_values(c.params, x, u, x2)
        if c.holds(values) is False:
            return Violation(step, clause.name, repr(c) if c.is_equality else c.name, values)
    return None


def validate_plan(problem: Problem, plan: Plan) -> Validation:
    """Check a plan step by step against the clauses of its skeleton.

    Constraints without a test (purely sampler-certified relations) are skipped.
    Step 0 refers to the initial state and step ``k`` (after the last control)
    to the goal.
    """
    system = problem.system
    clauses = [system.clause(name) for name in plan.skeleton]
    for state in plan.states:
        if len(state) != system.m:
            raise MalformedPlan("state has the wrong number of variables")
    for control in plan.controls:
        if len(control) != system.n:
            raise MalformedPlan("control has the wrong number of variables")
    x0 = plan.states[0]
    bad = _check(problem.initial_clause, 0, x0, (), ())
    if bad:
        return Validation(False, bad)
    for i, clause in enumerate(clauses, start=1):
        bad = _check(clause, i, plan.states[i - 1], plan.controls[i - 1], plan.states[i])
        if bad:
            return Validation(False, bad)
    bad = _check(problem.goal_clause, len(plan.controls), plan.states[-1], (), ())
    if bad:
        return Validation(False, Violation(bad.step, "goal", bad.constraint, bad.values))
    return Validation(True)


class _UnionFind:
    def __init__(self):
        self.parent = {}

    def add(self, a):
        self.parent.setdefault(a, a)

    def find(self, a):
        root = a
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[a] != root:
            self.parent[a], a = root, self.parent[a]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


class _Const(NamedTuple):
    value: Any


@dataclass
class FreeParameters:
    """Result of the equality-component analysis of a set of constraints.

    ``components`` lists every component touched by a non-equality
    constraint or anchored to a constant.  Components made only of
    pairwise-equality frame links (e.g. ``x_B = x_B'`` when nothing else
    mentions ``x_B``) impose nothing on a binding and are reported in
    ``unconstrained`` instead.
    """

    all_params: list
    free: list
    representative: dict
    fixed: dict
    components: list
    unconstrained: list
    component_of: dict

    def value_of(self, param, binding: Mapping):
        """Value of ``param`` under a binding of representatives."""
        comp = self.component_of[param]
        if comp in self.fixed:
            return self.fixed[comp]
        return binding[self.representative[param]]


def free_parameters(constraints: Iterable[Constraint], universe: Optional[Iterable] = None,
                    constants: Optional[Mapping] = None) -> FreeParameters:
    """Group parameters into components of the pairwise-equality graph.

    Components holding a constant are fixed; every other component that some
    non-equality constraint mentions contributes one free representative (its
    first parameter in mention order).  ``constants`` adds extra anchored
    bindings ``param -> value``.
    """
    constraints = list(constraints.constraints if isinstance(constraints, Clause) else constraints)
    uf = _UnionFind()
    order = {}
    for c in constraints:
        for p in c.params:
            uf.add(p)
            order.setdefault(p, len(order))
    for p in universe or ():
        order.setdefault(p, len(order))
        uf.add(p)
    anchors = [(c.params[0], c.value) for c in constraints if c.equality == CONSTANT]
    anchors += list((constants or {}).items())
    for p, value in anchors:
        node = _Const(value)
        uf.add(node)
        uf.union(node, p)
    for c in constraints:
        if c.equality == PAIRWISE:
            uf.union(*c.params)

    groups = {}
    for p in order:
        groups.setdefault(uf.find(p), []).append(p)
    fixed_value = {}
    for p, value in anchors:
        root = uf.find(p)
        prev = fixed_value.setdefault(root, value)
        if prev != value:
            raise InconsistentClause(f"{p!r} is forced to both {prev!r} and {value!r}")

    mentioned = {p for c in constraints if not c.is_equality for p in c.params}
    components, unconstrained, free = [], [], []
    representative, fixed, component_of = {}, {}, {}
    for root, members in groups.items():
        comp = tuple(members)
        for p in members:
            component_of[p] = comp
        if root in fixed_value:
            fixed[comp] = fixed_value[root]
            components.append(comp)
        elif any(p in mentioned for p in members):
            components.append(comp)
            free.append(members[0])
            for p in members:
                representative[p] = members[0]
        else:
            unconstrained.append(comp)
            for p in members:
                representative[p] = members[0]
    return FreeParameters(list(order), free, representative, fixed, components, unconstrained, component_of)


def plan_parameters(system: TransitionSystem, length: int) -> list:
    params = [PlanParam(0, STATE, i) for i in range(system.m)]
    for step in range(1, length + 1):
        params += [PlanParam(step, CONTROL, j) for j in range(system.n)]
        params += [PlanParam(step, STATE, i) for i in range(system.m)]
    return params


def _lift(step: int):
    def to_plan(p: Param) -> PlanParam:
        if p.kind == STATE:
            return PlanParam(step - 1, STATE, p.slot)
        if p.kind == NEXT:
            return PlanParam(step, STATE, p.slot)
        return PlanParam(step, CONTROL, p.slot)
    return to_plan


def skeleton_constraints(problem: Problem, skeleton: Sequence[str]) -> list:
    """All constraints of the initial clause, each skeleton step and the goal,
    re-indexed onto plan parameters."""
    system = problem.system
    out = [c.reindex(_lift(1)) for c in problem.initial_clause.constraints]
    for step, name in enumerate(skeleton, start=1):
        out += [c.reindex(_lift(step)) for c in system.clause(name).constraints]
    last = len(skeleton)
    out += [c.reindex(lambda p: PlanParam(last, STATE, p.slot)) for c in problem.goal_clause.constraints]
    return out


@dataclass
class ConstraintNetwork:
    """Bipartite graph between plan parameters and constraint occurrences."""

    params: list
    constraints: list
    edges: list

    def neighbors(self, index: int) -> tuple:
        return self.constraints[index].params


def skeleton_constraint_network(problem: Problem, skeleton: Sequence[str]) -> ConstraintNetwork:
    if not skeleton:
        raise MalformedPlan("empty skeleton")
    constraints = skeleton_constraints(problem, skeleton)
    params = plan_parameters(problem.system, len(skeleton))
    edges = [(i, p) for i, c in enumerate(constraints) for p in c.params]
    return ConstraintNetwork(params, constraints, edges)


def skeleton_free_parameters(problem: Problem, skeleton: Sequence[str]) -> FreeParameters:
    constraints = skeleton_constraints(problem, skeleton)
    return free_parameters(constraints, universe=plan_parameters(problem.system, len(skeleton)))


class SamplerNode(NamedTuple):
    """A sampler applied inside a specific constraint network."""

    name: str
    inputs: tuple
    outputs: tuple


@dataclass
class NetworkCheck:
    ok: bool
    order: list = field(default_factory=list)
    problem: str = ""
    param: Hashable = None

    def __bool__(self):
        return self.ok


def validate_sampling_network(samplers: Sequence, params: Iterable) -> NetworkCheck:
    """Check that sampler outputs partition ``params`` and that the samplers
    can be ordered so every input is an earlier output.

    Parameters outside ``params`` (fixed by constants) are treated as
    available from the start.
    """
    params = list(params)
    target = set(params)
    producer = {}
    for s in samplers:
        for p in s.outputs:
            if p not in target:
                return NetworkCheck(False, problem=f"{s.name} outputs {p!r} outside the parameter set", param=p)
            if p in producer:
                return NetworkCheck(False, problem=f"{p!r} is output by {producer[p]} and {s.name}", param=p)
            producer[p] = s.name
    for p in params:
        if p not in producer:
            return NetworkCheck(False, problem=f"no sampler outputs {p!r}", param=p)

    available = set()
    remaining = list(samplers)
    order = []
    while remaining:
        ready = [s for s in remaining if all(p in available or p not in target for p in s.inputs)]
        if not ready:
            s = remaining[0]
            missing = next(p for p in s.inputs if p in target and p not in available)
            return NetworkCheck(False, order, f"no order: {s.name} needs {missing!r}", missing)
        s = ready[0]
        order.append(s.name)
        available.update(s.outputs)
        remaining.remove(s)
    return NetworkCheck(True, order)
