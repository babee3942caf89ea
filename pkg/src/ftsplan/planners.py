"""Incremental and focused sampling-based planners.

Both planners alternate between discrete search over the constraint
elements known so far and calls to sampler instances.

* ``incremental`` samples every queued instance once per iteration.
* ``focused`` first plans with lazy placeholder values, then samples only
  the instances whose outputs that optimistic plan relies on.
"""
from __future__ import annotations

import logging
import math
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

from .core import Element, Plan, Problem, is_lazy, lazy_values, transition_values
from .grounding import GOAL_VAR, GroundedTask, compile_task, index_elements
from .samplers import (ElementStore, InstanceQueue, InstanceRegistry, LazyFactory, SamplerInstance,
                       Timeout, check_deadline, process_samplers, sample, sample_lazy,
                       sampler_graph_is_acyclic)
from .search import RelaxedPlanHeuristic, bfs, lazy_greedy_search

logger = logging.getLogger(__name__)

SOLVED = "solved"
INFEASIBLE = "infeasible"
TIMEOUT = "timeout"


@dataclass
class PlannerConfig:
    """Planner options.

    ``lazy_tokens`` is ``"sampler"`` (one placeholder per sampler output) or
    ``"instance"`` (one per instance output).  ``direct_add`` makes focused
    add freshly sampled elements straight away rather than at the end of
    the episode.  Both default to the acyclic-sampler setting when the
    sampler graph allows it.
    """

    search: str = "hff"
    weight: float = 1.0
    seed: int = 0
    timeout: float = 60.0
    axioms: bool = True
    lazy_tokens: Optional[str] = None
    direct_add: Optional[bool] = None
    eager: frozenset = frozenset()
    hybrid: bool = False
    max_iterations: Optional[int] = None
    trace: bool = False

    def __post_init__(self):
        if self.search not in ("bfs", "hff"):
            raise ValueError(f"unknown search {self.search!r}")
        if self.weight < 0:
            raise ValueError("weight must be non-negative")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        self.eager = frozenset(self.eager)

    def echo(self) -> dict:
        return {"search": self.search, "weight": self.weight, "seed": self.seed, "timeout": self.timeout,
                "axioms": self.axioms, "lazy_tokens": self.lazy_tokens, "direct_add": self.direct_add,
                "eager": sorted(self.eager), "hybrid": self.hybrid}


@dataclass
class RunStats:
    iterations: int = 0
    episodes: int = 0
    sampler_calls: Counter = field(default_factory=Counter)
    elements: list = field(default_factory=list)
    search_calls: int = 0
    test_calls: int = 0
    sampled_elements: int = 0
    total_time: float = 0.0

    @property
    def total_sampler_calls(self) -> int:
        return sum(self.sampler_calls.values())

    def to_dict(self, timing: bool = False) -> dict:
        out = {"iterations": self.iterations, "episodes": self.episodes,
               "sampler_calls": dict(sorted(self.sampler_calls.items())),
               "elements": list(self.elements), "search_calls": self.search_calls,
               "test_calls": self.test_calls, "sampled_elements": self.sampled_elements}
        if timing:
            out["total_time"] = self.total_time
        return out


@dataclass
class IterationRecord:
    iteration: int
    episode: int = 0
    lazy_elements: list = field(default_factory=list)
    plan: Optional[Plan] = None
    sampled: list = field(default_factory=list)

    def sampled_instances(self, productive: bool = True) -> list:
        """Labels of instances that were sampled (by default only those that produced something)."""
        return [repr(s) for s, out in self.sampled if out or not productive]


@dataclass
class RunResult:
    outcome: str
    plan: Optional[Plan]
    stats: RunStats
    trace: list = field(default_factory=list)
    optimistic_plans: list = field(default_factory=list)

    @property
    def solved(self) -> bool:
        return self.outcome == SOLVED


def evaluated_tests(problem: Problem) -> list:
    table = problem.system.constraint_table()
    for c in problem.goal_clause.nonequality():
        table.setdefault(c.name, c)
    return [c for c in table.values() if c.evaluated]


def initial_store(problem: Problem, samplers: Sequence, registry: InstanceRegistry) -> ElementStore:
    store = ElementStore(samplers, evaluated_tests(problem), registry)
    store.add_all(problem.initial_elements)
    return store


def actions_to_plan(problem: Problem, task: GroundedTask, actions: Sequence) -> Plan:
    m = problem.system.m
    goal = task.variables.index(GOAL_VAR)
    state = task.init
    states, controls, skeleton = [tuple(state[:m])], [], []
    for a in actions:
        state = task.apply(a, state)
        if any(v == goal for v, _ in a.eff):
            continue
        states.append(tuple(state[:m]))
        controls.append(a.controls)
        skeleton.append(a.name)
    return Plan(tuple(skeleton), tuple(states), tuple(controls))


def plan_elements(problem: Problem, plan: Plan) -> list:
    """The constraint elements a plan relies on, lazy values included."""
    out = {}
    system = problem.system
    for i, name in enumerate(plan.skeleton):
        x, u, x2 = plan.states[i], plan.controls[i], plan.states[i + 1]
        for c in system.clause(name).nonequality():
            out[Element(c.name, transition_values(c.params, x, u, x2))] = None
    for c in problem.goal_clause.nonequality():
        out[Element(c.name, transition_values(c.params, plan.states[-1], (), ()))] = None
    return list(out)


def discrete_search(problem: Problem, elements: Iterable[Element], config: PlannerConfig,
                    deadline: Optional[float] = None) -> Optional[tuple]:
    """Ground the known elements and search.  Returns ``(plan, actions)`` or None."""
    task = compile_task(problem, index_elements(elements), axioms=config.axioms)
    if config.search == "bfs":
        result = bfs(task, deadline)
    else:
        result = lazy_greedy_search(task, RelaxedPlanHeuristic(task), config.weight, deadline=deadline,
                                    trace=config.trace)
    check_deadline(deadline)
    if config.trace:
        logger.info("search: %d actions, %d axioms, expanded %d, found %s", len(task.actions),
                    len(task.axioms), result.expanded, result.found)
    if not result.found:
        return None
    return actions_to_plan(problem, task, result.actions), result.actions


class _Sampling:
    """Counts concrete sampler calls and records them for traces."""

    def __init__(self, stats: RunStats, record: Optional[list] = None):
        self.stats = stats
        self.record = record

    def __call__(self, s: SamplerInstance) -> list:
        self.stats.sampler_calls[s.sampler.name] += 1
        out = sample(s)
        if self.record is not None:
            self.record.append((s, out))
        return out


def _snapshot(stats: RunStats, store: ElementStore):
    stats.test_calls = len(store.test_cache)
    stats.sampled_elements = sum(1 for e in store if e.producer is not None)


def _finish(outcome, plan, stats, start, trace, optimistic=()):
    stats.total_time = time.monotonic() - start
    return RunResult(outcome, plan, stats, trace, list(optimistic))


def incremental(problem: Problem, samplers: Sequence, config: Optional[PlannerConfig] = None) -> RunResult:
    config = config or PlannerConfig()
    start = time.monotonic()
    deadline = start + config.timeout
    stats = RunStats()
    trace = []
    if not sampler_graph_is_acyclic(samplers):
        logger.warning("sampler graph has a cycle")
    registry = InstanceRegistry(config.seed)
    store = initial_store(problem, samplers, registry)
    queue = InstanceQueue(store.all_instances())
    try:
        while True:
            stats.iterations += 1
            record = IterationRecord(stats.iterations)
            trace.append(record)
            stats.search_calls += 1
            stats.elements.append(len(store))
            found = discrete_search(problem, store.elements, config, deadline)
            if found is not None:
                record.plan = found[0]
                _snapshot(stats, store)
                return _finish(SOLVED, found[0], stats, start, trace)
            if not len(queue):
                return _finish(INFEASIBLE, None, stats, start, trace)
            if config.max_iterations and stats.iterations >= config.max_iterations:
                return _finish(TIMEOUT, None, stats, start, trace)
            processed = {}
            process_samplers(queue, processed, store, _Sampling(stats, record.sampled), k=len(queue),
                             deadline=deadline)
            for s in processed:
                if not s.exhausted:
                    queue.push(s)
            _snapshot(stats, store)
    except Timeout:
        _snapshot(stats, store)
        return _finish(TIMEOUT, None, stats, start, trace)


def retrace_instances(targets: Iterable[Element], elements, factory: LazyFactory) -> list:
    """Sampler instances with fully concrete inputs whose outputs the lazy
    ``targets`` depend on.

    An element already in ``elements`` needs nothing.  Otherwise its
    producer is walked back through the producers of its lazy inputs, and
    only instances without lazy ancestors are returned.  Elements with no
    producer (optimistic test results) are walked back through the
    producers of their lazy values.
    """
    found = {}
    memo = {}

    def ancestors_of_values(values) -> bool:
        any_ancestor = False
        for v in values:
            if not is_lazy(v):
                continue
            for s in factory.producers_of(v):
                visit(s)
                any_ancestor = True
        return any_ancestor

    def visit(s: SamplerInstance):
        if s in memo:
            return
        memo[s] = True
        if not ancestors_of_values(s.inputs):
            found[s] = None

    for e in targets:
        if e in elements:
            continue
        if e.producer is not None:
            visit(e.producer)
        else:
            ancestors_of_values(e.values)
    return list(found)


def _plan_key(plan: Plan) -> tuple:
    return (plan.skeleton, plan.states, plan.controls)


def focused(problem: Problem, samplers: Sequence, config: Optional[PlannerConfig] = None) -> RunResult:
    config = config or PlannerConfig()
    start = time.monotonic()
    deadline = start + config.timeout
    stats = RunStats()
    trace = []
    acyclic = sampler_graph_is_acyclic(samplers)
    if not acyclic:
        logger.warning("sampler graph has a cycle; using per-sampler lazy tokens")
    token_mode = config.lazy_tokens or ("instance" if acyclic else "sampler")
    direct = config.direct_add if config.direct_add is not None else acyclic
    factory = LazyFactory(token_mode)
    registry = InstanceRegistry(config.seed)
    store = initial_store(problem, samplers, registry)
    sampled = {}
    new_elements = []
    optimistic = []
    episode_plans = set()
    stats.episodes = 1

    def commit(elements):
        if direct:
            store.add_all(elements)
        else:
            new_elements.extend(elements)

    try:
        while True:
            stats.iterations += 1
            record = IterationRecord(stats.iterations, stats.episodes)
            trace.append(record)
            if config.max_iterations and stats.iterations > config.max_iterations:
                raise Timeout()
            factory.producers.clear()
            mixed = store.fork()
            eager_out = []

            def process(s: SamplerInstance) -> list:
                if not s.is_lazy and (s.sampler.name in config.eager or (config.hybrid and s in sampled)):
                    stats.sampler_calls[s.sampler.name] += 1
                    out = sample(s)
                    record.sampled.append((s, out))
                    eager_out.extend(out)
                    if not out and not s.exhausted:
                        return sample_lazy(s, factory)
                    return out
                return sample_lazy(s, factory)

            if config.hybrid:
                queue = InstanceQueue(store.all_instances())
                processed = {}
            else:
                queue = InstanceQueue(s for s in store.all_instances() if s not in sampled)
                processed = dict(sampled)
            process_samplers(queue, processed, mixed, process, deadline=deadline)
            commit(eager_out)
            record.lazy_elements = [e for e in mixed if e not in store]
            stats.search_calls += 1
            stats.elements.append(len(store))
            found = discrete_search(problem, mixed.elements, config, deadline)
            if found is None:
                if not sampled and not eager_out:
                    return _finish(INFEASIBLE, None, stats, start, trace, optimistic)
                store.add_all(new_elements)
                new_elements.clear()
                if not config.hybrid:
                    sampled.clear()
                episode_plans.clear()
                stats.episodes += 1
                continue
            plan = found[0]
            record.plan = plan
            key = _plan_key(plan)
            if key in episode_plans:
                raise RuntimeError("focused search returned the same optimistic plan twice in an episode")
            episode_plans.add(key)
            optimistic.append((stats.episodes, key))
            needed = plan_elements(problem, plan)
            if all(e in store for e in needed):
                _snapshot(stats, store)
                return _finish(SOLVED, plan, stats, start, trace, optimistic)
            roots = retrace_instances(needed, store, factory)
            if not roots:
                raise RuntimeError("optimistic plan has lazy values without a samplable ancestor")
            for s in roots:
                check_deadline(deadline)
                stats.sampler_calls[s.sampler.name] += 1
                out = sample(s)
                record.sampled.append((s, out))
                commit(out)
                sampled[s] = None
            _snapshot(stats, store)
    except Timeout:
        _snapshot(stats, store)
        return _finish(TIMEOUT, None, stats, start, trace, optimistic)


ALGORITHMS = {"incremental": incremental, "focused": focused}


def solve(problem: Problem, samplers: Sequence, algorithm: str = "focused",
          config: Optional[PlannerConfig] = None) -> RunResult:
    try:
        run = ALGORITHMS[algorithm]
    except KeyError:
        raise ValueError(f"unknown algorithm {algorithm!r}") from None
    return run(problem, samplers, config)
