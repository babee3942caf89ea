"""Conditional samplers, sampler instances, lazy samples and element bookkeeping.

A conditional sampler maps a tuple of input values to a (possibly infinite)
sequence of output tuples.  Every draw certifies a fixed list of constraint
elements over the inputs and outputs.  Binding the inputs gives a sampler
instance, a resumable sequence identified by ``(sampler name, inputs)``.

``ElementStore`` holds the known constraint elements.  Whenever a new value
shows up it works out which sampler instances and planner-evaluated
constraints the value makes possible.
"""
from __future__ import annotations

import hashlib
import itertools
import logging
import time
from collections import deque
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, Optional, Sequence

import numpy as np

from .core import Constraint, Element, LazySample, is_lazy

logger = logging.getLogger(__name__)

ATTEMPTS_PER_DRAW = 10


class Timeout(Exception):
    """Wall-clock limit reached inside a planner."""


def check_deadline(deadline: Optional[float]):
    if deadline is not None and time.monotonic() > deadline:
        raise Timeout()


def stable_seed(*parts) -> int:
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class Certified:
    """A constraint a sampler certifies; ``slots`` index into inputs + outputs."""

    name: str
    slots: tuple


class ConditionalSampler:
    """Generator of output tuples conditioned on input values.

    ``inputs`` gives one domain per input: a collection of
    ``(constraint name, slot)`` sources whose values may fill it.
    ``generator(inputs, ctx)`` returns an iterator; each ``next`` yields an
    output tuple, or None for a draw that failed without exhausting the
    sequence.  ``ctx.rng`` is the instance's random stream and
    ``ctx.attempts`` its current effort budget.
    """

    def __init__(self, name: str, inputs: Sequence, outputs: Sequence[str], certified: Sequence,
                 generator: Callable, input_test: Optional[Callable] = None):
        self.name = name
        self.inputs = tuple(frozenset(d) for d in inputs)
        self.outputs = tuple(outputs)
        certs = []
        width = len(self.inputs) + len(self.outputs)
        for cert in certified:
            if isinstance(cert, str):
                cert = Certified(cert, tuple(range(width)))
            elif not isinstance(cert, Certified):
                cert = Certified(cert[0], tuple(cert[1]))
            if any(not 0 <= i < width for i in cert.slots):
                raise ValueError(f"{name}: certified {cert.name} refers to a missing slot")
            certs.append(cert)
        self.certified = tuple(certs)
        self.generator = generator
        self.input_test = input_test

    def output_sources(self, index: int) -> frozenset:
        """Constraint slots filled by output ``index``."""
        pos = len(self.inputs) + index
        return frozenset((c.name, i) for c in self.certified for i, s in enumerate(c.slots) if s == pos)

    def __repr__(self):
        return f"ConditionalSampler({self.name!r})"


class SampleContext:
    def __init__(self, instance: "SamplerInstance", rng):
        self._instance = instance
        self.rng = rng

    @property
    def attempts(self) -> int:
        return ATTEMPTS_PER_DRAW * (self._instance.cursor + 1)


class SamplerInstance:
    """A sampler with bound inputs.  ``cursor`` counts draws made so far."""

    def __init__(self, sampler: ConditionalSampler, inputs: tuple, seed: int = 0):
        self.sampler = sampler
        self.inputs = tuple(inputs)
        self.seed = seed
        self.cursor = 0
        self.outputs_drawn = 0
        self.failures = 0
        self.exhausted = False
        self._sequence: Optional[Iterator] = None

    @property
    def key(self) -> tuple:
        return (self.sampler.name, self.inputs)

    @property
    def is_lazy(self) -> bool:
        return any(is_lazy(v) for v in self.inputs)

    def __eq__(self, other):
        return isinstance(other, SamplerInstance) and self.key == other.key

    def __hash__(self):
        return hash(self.key)

    def __repr__(self):
        return f"{self.sampler.name}({', '.join(map(_short, self.inputs))})"

    def next_output(self) -> Optional[tuple]:
        """Draw once.  Returns the outputs, or None on a failed or exhausted draw."""
        if self.exhausted:
            return None
        if self.is_lazy:
            raise ValueError(f"cannot sample {self!r}: it has lazy inputs")
        if self._sequence is None:
            rng = np.random.default_rng(stable_seed(self.seed, self.sampler.name, self.inputs))
            self._sequence = iter(self.sampler.generator(self.inputs, SampleContext(self, rng)))
        self.cursor += 1
        try:
            out = next(self._sequence)
        except StopIteration:
            self.exhausted = True
            return None
        if out is None:
            self.failures += 1
            return None
        out = tuple(out)
        if len(out) != len(self.sampler.outputs):
            raise ValueError(f"{self!r} produced {len(out)} outputs, expected {len(self.sampler.outputs)}")
        self.outputs_drawn += 1
        return out

    def elements(self, outputs: tuple) -> list:
        values = self.inputs + tuple(outputs)
        return [Element(c.name, tuple(values[i] for i in c.slots), producer=self)
                for c in self.sampler.certified]


def _short(v):
    if isinstance(v, float):
        return f"{v:.3g}"
    if isinstance(v, tuple) and all(isinstance(x, float) for x in v):
        return "(" + ",".join(f"{x:.3g}" for x in v) + ")"
    return repr(v)


def sample(instance: SamplerInstance) -> list:
    """Draw the next output of an instance and return the certified elements.

    An exhausted sequence or a failed draw gives an empty list.
    """
    out = instance.next_output()
    if out is None:
        return []
    return instance.elements(out)


class LazyFactory:
    """Hands out lazy sample tokens and remembers which instances produced them.

    In ``"sampler"`` mode one token stands for output ``i`` of every instance
    of a sampler.  In ``"instance"`` mode each instance gets its own tokens.
    """

    def __init__(self, mode: str = "sampler"):
        if mode not in ("sampler", "instance"):
            raise ValueError(f"unknown lazy token mode {mode!r}")
        self.mode = mode
        self._tokens = {}
        self.producers = {}
        self._ids = itertools.count(1)

    def outputs(self, instance: SamplerInstance) -> tuple:
        owner = instance.sampler.name if self.mode == "sampler" else instance.key
        tokens = []
        for i, role in enumerate(instance.sampler.outputs):
            key = (owner, i)
            if key not in self._tokens:
                self._tokens[key] = LazySample(next(self._ids), (owner, role))
            token = self._tokens[key]
            self.producers.setdefault(token, {})[instance] = None
            tokens.append(token)
        return tuple(tokens)

    def producers_of(self, token: LazySample) -> list:
        return list(self.producers.get(token, ()))


def sample_lazy(instance: SamplerInstance, factory: LazyFactory) -> list:
    """Optimistic elements with lazy outputs standing in for a future draw."""
    return instance.elements(factory.outputs(instance))


class InstanceRegistry:
    """Keeps one live ``SamplerInstance`` per identity for a whole run."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._instances = {}

    def get(self, sampler: ConditionalSampler, inputs: tuple) -> SamplerInstance:
        key = (sampler.name, inputs)
        inst = self._instances.get(key)
        if inst is None:
            inst = SamplerInstance(sampler, inputs, self.seed)
            self._instances[key] = inst
        return inst

    def __iter__(self):
        return iter(self._instances.values())

    def __len__(self):
        return len(self._instances)


class ElementStore:
    """An ordered, deduplicated set of constraint elements.

    Adding an element indexes its values by ``(constraint, slot)`` source.
    A value new to some input domain creates the sampler instances it
    enables, and the planner-evaluated constraints get tested on the new
    value combinations.  Combinations with lazy values yield optimistic
    elements.  Test results are cached per run.
    """

    def __init__(self, samplers: Iterable[ConditionalSampler] = (), tests: Iterable[Constraint] = (),
                 registry: Optional[InstanceRegistry] = None, test_cache: Optional[dict] = None):
        self.samplers = list(samplers)
        self.tests = list(tests)
        self.registry = registry if registry is not None else InstanceRegistry()
        self.test_cache = test_cache if test_cache is not None else {}
        self.test_calls = 0
        self.elements = {}
        self.by_name = {}
        self.instances = {}
        self._new_instances = []
        self._domain_values = {}
        self._domain_sets = {}
        self._listeners = {}
        self._consumers = {}
        self._seen_tests = set()
        for s in self.samplers:
            for j, dom in enumerate(s.inputs):
                self._watch(dom, ("sampler", s, j))
        for t in self.tests:
            for j, dom in enumerate(t.domains):
                self._watch(dom, ("test", t, j))
        for s in self.samplers:
            if not s.inputs:
                inst = self.registry.get(s, ())
                self.instances[inst.key] = inst
                self._new_instances.append(inst)

    def _watch(self, domain: frozenset, consumer):
        if domain not in self._domain_values:
            self._domain_values[domain] = []
            self._domain_sets[domain] = set()
            for src in domain:
                self._listeners.setdefault(src, []).append(domain)
        self._consumers.setdefault(domain, []).append(consumer)

    def fork(self) -> "ElementStore":
        other = ElementStore.__new__(ElementStore)
        other.samplers = self.samplers
        other.tests = self.tests
        other.registry = self.registry
        other.test_cache = self.test_cache
        other.test_calls = 0
        other.elements = dict(self.elements)
        other.by_name = {k: list(v) for k, v in self.by_name.items()}
        other.instances = dict(self.instances)
        other._new_instances = []
        other._domain_values = {k: list(v) for k, v in self._domain_values.items()}
        other._domain_sets = {k: set(v) for k, v in self._domain_sets.items()}
        other._listeners = self._listeners
        other._consumers = self._consumers
        other._seen_tests = set(self._seen_tests)
        return other

    def __contains__(self, element) -> bool:
        return element in self.elements

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def values(self, domain) -> list:
        return list(self._domain_values.get(frozenset(domain), ()))

    def add(self, element: Element) -> bool:
        """Insert an element; returns False if it was already known."""
        if element in self.elements:
            return False
        work = deque([element])
        while work:
            e = work.popleft()
            if e in self.elements:
                continue
            self.elements[e] = e
            self.by_name.setdefault(e.name, []).append(e)
            for i, v in enumerate(e.values):
                for domain in self._listeners.get((e.name, i), ()):
                    if v in self._domain_sets[domain]:
                        continue
                    self._domain_sets[domain].add(v)
                    self._domain_values[domain].append(v)
                    for kind, owner, j in self._consumers[domain]:
                        if kind == "sampler":
                            self._spawn(owner, j, v)
                        else:
                            work.extend(self._evaluate(owner, j, v))
        return True

    def add_all(self, elements: Iterable[Element]) -> list:
        return [e for e in elements if self.add(e)]

    def _combos(self, domains, position, value):
        pools = [self._domain_values[d] if i != position else [value] for i, d in enumerate(domains)]
        return itertools.product(*pools)

    def _spawn(self, sampler: ConditionalSampler, position: int, value):
        for inputs in self._combos(sampler.inputs, position, value):
            key = (sampler.name, inputs)
            if key in self.instances:
                continue
            if sampler.input_test is not None and not any(is_lazy(v) for v in inputs):
                if not sampler.input_test(*inputs):
                    continue
            inst = self.registry.get(sampler, inputs)
            self.instances[key] = inst
            self._new_instances.append(inst)

    def _evaluate(self, test: Constraint, position: int, value) -> list:
        out = []
        for values in self._combos(test.domains, position, value):
            key = (test.name, values)
            if key in self._seen_tests:
                continue
            self._seen_tests.add(key)
            if any(is_lazy(v) for v in values):
                if test.lazy_test is None or test.lazy_test(*values):
                    out.append(Element(test.name, values))
                continue
            ok = self.test_cache.get(key)
            if ok is None:
                ok = bool(test.test(*values))
                self.test_cache[key] = ok
                self.test_calls += 1
            if ok:
                out.append(Element(test.name, values))
        return out

    def drain_new_instances(self) -> list:
        out, self._new_instances = self._new_instances, []
        return out

    def all_instances(self) -> list:
        return list(self.instances.values())


def evaluated_constraints(system) -> list:
    """One constraint per name among those the planner tests itself."""
    return [c for c in system.constraint_table().values() if c.evaluated]


def instantiate_samplers(elements: Iterable[Element], samplers: Sequence[ConditionalSampler],
                         registry: Optional[InstanceRegistry] = None) -> list:
    """Every sampler instance whose inputs can be drawn from the values in ``elements``."""
    store = ElementStore(samplers, registry=registry)
    for e in elements:
        store.add(e)
    return store.all_instances()


class InstanceQueue:
    """FIFO of sampler instances with constant-time membership tests."""

    def __init__(self, items: Iterable[SamplerInstance] = ()):
        self._items = deque()
        self._members = set()
        for item in items:
            self.push(item)

    def push(self, item: SamplerInstance):
        if item not in self._members:
            self._items.append(item)
            self._members.add(item)

    def pop(self) -> SamplerInstance:
        item = self._items.popleft()
        self._members.discard(item)
        return item

    def __contains__(self, item):
        return item in self._members

    def __len__(self):
        return len(self._items)

    def __iter__(self):
        return iter(self._items)


def process_samplers(queue: InstanceQueue, processed: dict, store: ElementStore,
                     process: Callable[[SamplerInstance], list], k: float = float("inf"),
                     deadline: Optional[float] = None, on_process: Optional[Callable] = None):
    """Pop instances while fewer than ``k`` are processed, add what ``process``
    returns to ``store`` and queue any instances that became possible.

    ``processed`` is an ordered dict used as a set.  ``on_process(s, new)``
    observes each step.
    """
    store.drain_new_instances()
    while len(queue) and len(processed) < k:
        check_deadline(deadline)
        s = queue.pop()
        if s in processed:
            continue
        produced = process(s)
        new = store.add_all(produced)
        if on_process is not None:
            on_process(s, produced)
        for s2 in store.drain_new_instances():
            if s2 not in queue and s2 not in processed:
                queue.push(s2)
        processed[s] = None


def sampler_graph_is_acyclic(samplers: Sequence[ConditionalSampler]) -> bool:
    """True when no sampler can, through its outputs, feed its own inputs."""
    feeds = {}
    for s in samplers:
        produced = set()
        for i in range(len(s.outputs)):
            produced |= s.output_sources(i)
        feeds[s.name] = [t.name for t in samplers if any(produced & dom for dom in t.inputs)]
    state = {}

    def visit(name):
        state[name] = 1
        for nxt in feeds[name]:
            if state.get(nxt) == 1:
                return False
            if nxt not in state and not visit(nxt):
                return False
        state[name] = 2
        return True

    return all(visit(s.name) for s in samplers if s.name not in state)
