"""Forward search over grounded tasks: breadth-first and heuristic best-first.

Derived variables are recomputed from the axioms at every state before
action applicability is tested.
"""
from __future__ import annotations

import heapq
import logging
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

from .grounding import GroundedAction, GroundedTask

logger = logging.getLogger(__name__)

INF = float("inf")


@dataclass
class SearchNode:
    state: tuple
    parent: Optional["SearchNode"] = None
    action: Optional[GroundedAction] = None
    g: int = 0
    depth: int = 0

    def path(self) -> list:
        actions, node = [], self
        while node.parent is not None:
            actions.append(node.action)
            node = node.parent
        return actions[::-1]


@dataclass
class SearchResult:
    actions: Optional[list]
    expanded: int = 0
    generated: int = 0
    trace: list = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.actions is not None


class Successors:
    """Applicable-action lookup keyed on each action's first precondition."""

    def __init__(self, task: GroundedTask):
        self.task = task
        self.always = []
        self.keyed = {}
        for a in task.actions:
            if a.pre:
                self.keyed.setdefault(a.pre[0], []).append(a)
            else:
                self.always.append(a)
        self._order = {id(a): i for i, a in enumerate(task.actions)}

    def __call__(self, state: tuple) -> list:
        derived = self.task.derived_closure(state)
        found = []
        for a in self.always:
            if all(d in derived for d in a.derived):
                found.append(a)
        for var, val in enumerate(state):
            for a in self.keyed.get((var, val), ()):
                if all(state[v] == x for v, x in a.pre[1:]) and all(d in derived for d in a.derived):
                    found.append(a)
        found.sort(key=lambda a: self._order[id(a)])
        return found


def _deadline_passed(deadline):
    return deadline is not None and time.monotonic() > deadline


def bfs(task: GroundedTask, deadline: Optional[float] = None) -> SearchResult:
    """Shortest plan in number of actions."""
    successors = Successors(task)
    root = SearchNode(task.init)
    if task.is_goal(root.state):
        return SearchResult([], 0, 1)
    frontier = deque([root])
    seen = {root.state}
    expanded = generated = 0
    while frontier:
        if expanded % 256 == 0 and _deadline_passed(deadline):
            break
        node = frontier.popleft()
        expanded += 1
        for a in successors(node.state):
            child = task.apply(a, node.state)
            if child in seen:
                continue
            seen.add(child)
            generated += 1
            nxt = SearchNode(child, node, a, node.g + a.cost, node.depth + 1)
            if task.is_goal(child):
                return SearchResult(nxt.path(), expanded, generated)
            frontier.append(nxt)
    return SearchResult(None, expanded, generated)


class RelaxedPlanHeuristic:
    """Delete-relaxation relaxed-plan length with zero-cost axioms.

    Fact levels are the cheapest relaxed layer at which each fact appears,
    where actions cost one layer and axioms cost none.  The relaxed plan is
    extracted backwards from the goal, choosing for each fact the supporter of
    matching level with the smallest summed precondition level (ties go to
    the earlier operator).  The value is the number of distinct actions
    chosen.
    """

    def __init__(self, task: GroundedTask):
        self.task = task
        facts = {}

        def fid(f):
            if f not in facts:
                facts[f] = len(facts)
            return facts[f]

        ops = []  # (pre ids, eff ids, cost, action index or -1)
        for i, a in enumerate(task.actions):
            pre = [fid(("v", v, x)) for v, x in a.pre] + [fid(("d", d)) for d in a.derived]
            eff = [fid(("v", v, x)) for v, x in a.eff]
            ops.append((tuple(dict.fromkeys(pre)), tuple(eff), 1, i))
        for ax in task.axioms:
            pre = [fid(("v", v, x)) for v, x in ax.pre]
            ops.append((tuple(dict.fromkeys(pre)), (fid(("d", ax.derived)),), 0, -1))
        self.goal = [fid(("v", v, x)) for v, x in task.goal]
        self.facts = facts
        self.ops = ops
        self.consumers = [[] for _ in facts]
        for k, (pre, _, _, _) in enumerate(ops):
            for f in pre:
                self.consumers[f].append(k)
        self.achievers = [[] for _ in facts]
        for k, (_, eff, _, _) in enumerate(ops):
            for f in eff:
                self.achievers[f].append(k)
        self.empty_pre = [k for k, op in enumerate(ops) if not op[0]]
        self.pre_counts = [len(op[0]) for op in ops]
        self.op_effects = [(eff, cost) for _, eff, cost, _ in ops]
        self.state_facts = {}
        for f in facts:
            if f[0] == "v":
                self.state_facts[(f[1], f[2])] = facts[f]

    def levels(self, state: tuple):
        n = len(self.facts)
        level = [INF] * n
        op_level = [INF] * len(self.ops)
        missing = list(self.pre_counts)
        consumers, effects = self.consumers, self.op_effects
        buckets = [[]]
        get = self.state_facts.get
        for v, x in enumerate(state):
            f = get((v, x))
            if f is not None:
                level[f] = 0
                buckets[0].append(f)
        for k in self.empty_pre:
            op_level[k] = 0
            eff, cost = effects[k]
            for g in eff:
                if cost < level[g]:
                    level[g] = cost
                    while len(buckets) <= cost:
                        buckets.append([])
                    buckets[cost].append(g)
        current = 0
        while current < len(buckets):
            bucket = buckets[current]
            for f in bucket:  # grows while iterating when zero-cost ops fire
                if level[f] != current:
                    continue
                for k in consumers[f]:
                    missing[k] -= 1
                    if missing[k]:
                        continue
                    op_level[k] = current
                    eff, cost = effects[k]
                    nl = current + cost
                    for g in eff:
                        if nl < level[g]:
                            level[g] = nl
                            if nl == len(buckets):
                                buckets.append([])
                            buckets[nl].append(g)
            current += 1
        return level, op_level

    def __call__(self, state: tuple) -> float:
        level, op_level = self.levels(state)
        if any(level[g] == INF for g in self.goal):
            return INF
        chosen = set()
        done = set()
        stack = list(self.goal)
        while stack:
            f = stack.pop()
            if f in done or level[f] == 0:
                continue
            done.add(f)
            best, best_key = None, None
            for k in self.achievers[f]:
                pre, _, cost, _ = self.ops[k]
                if op_level[k] + cost != level[f]:
                    continue
                key = (sum(level[p] for p in pre), k)
                if best_key is None or key < best_key:
                    best, best_key = k, key
            pre, _, cost, index = self.ops[best]
            if index >= 0:
                chosen.add(index)
            stack.extend(pre)
        return len(chosen)


def relaxed_plan_heuristic(task: GroundedTask, state: tuple) -> float:
    return RelaxedPlanHeuristic(task)(state)


def lazy_greedy_search(task: GroundedTask, heuristic: Optional[Callable] = None, weight: float = 1.0,
                       unit_cost: float = 1.0, deadline: Optional[float] = None,
                       trace: bool = False) -> SearchResult:
    """Best-first search on ``h + weight * g`` with deferred evaluation.

    ``g`` sums the lazy-sample cost of the actions so far, plus ``unit_cost``
    per action so that shorter plans win ties.  Children
    are queued with their parent's heuristic value and evaluated when
    expanded.  Ties go to the earlier insertion.
    """
    if weight < 0:
        raise ValueError("weight must be non-negative")
    if heuristic is None:
        heuristic = RelaxedPlanHeuristic(task)
    successors = Successors(task)
    counter = 0
    root = SearchNode(task.init)
    open_list = [(0.0, counter, root)]
    closed = set()
    expanded = generated = 0
    log = []
    while open_list:
        if expanded % 64 == 0 and _deadline_passed(deadline):
            break
        _, _, node = heapq.heappop(open_list)
        if node.state in closed:
            continue
        closed.add(node.state)
        if task.is_goal(node.state):
            return SearchResult(node.path(), expanded, generated, log)
        h = heuristic(node.state)
        if trace:
            log.append((expanded, h, node.g))
        if h == INF:
            continue
        expanded += 1
        for a in successors(node.state):
            child = task.apply(a, node.state)
            if child in closed:
                continue
            counter += 1
            generated += 1
            g = node.g + a.cost
            depth = node.depth + 1
            heapq.heappush(open_list, (h + weight * (g + unit_cost * depth), counter,
                                       SearchNode(child, node, a, g, depth)))
    return SearchResult(None, expanded, generated, log)
