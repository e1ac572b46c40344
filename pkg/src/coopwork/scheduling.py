"""Scheduler policies, bounds on the offline optimum and exact oracles.

The exact routines enumerate the model step by step (one task execution at
a time, with the probabilities of :func:`choose_next`) and are meant for
tiny instances only; they deliberately share no code with the simulation
kernels they are used to check.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .compdag import CompDag, classify_saturation, normalize_split, predecessor_work, require_valid
from .errors import EmptyChoiceError, InvalidArgument, ResourceLimitError
from .taskgraph import TaskGraph, eligible_tasks, minimal_label_incomplete

KINDS = ("modified_rs", "eligible_rs", "lowest_label_det")
ALIASES = {"mrs": "modified_rs", "rs": "eligible_rs", "det": "lowest_label_det"}


@dataclass(frozen=True)
class SchedulerPolicy:
    kind: str = "modified_rs"

    def __post_init__(self):
        kind = ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise InvalidArgument(f"unknown policy {self.kind!r}; expected one of {KINDS}")
        object.__setattr__(self, "kind", kind)

    @property
    def randomized(self) -> bool:
        return self.kind != "lowest_label_det"

    @property
    def short(self) -> str:
        return {v: k for k, v in ALIASES.items()}[self.kind]


def as_policy(policy) -> SchedulerPolicy:
    return policy if isinstance(policy, SchedulerPolicy) else SchedulerPolicy(policy)


def candidates(policy, g: TaskGraph, known_complete) -> list[int]:
    """Tasks the policy may pick next, in ascending id order."""
    policy = as_policy(policy)
    if len(set(known_complete)) >= g.t:
        raise EmptyChoiceError("every task is already complete")
    if policy.kind == "eligible_rs":
        pool = eligible_tasks(g, known_complete)
    else:
        pool = minimal_label_incomplete(g, known_complete)
    return sorted(pool)


def choose_next(policy, g: TaskGraph, known_complete, rng: np.random.Generator | None = None) -> int:
    policy = as_policy(policy)
    pool = candidates(policy, g, known_complete)
    if not pool:
        raise EmptyChoiceError("no selectable task")
    if policy.kind == "lowest_label_det":
        return pool[0]
    if rng is None:
        raise InvalidArgument(f"{policy.kind} needs a random generator")
    return pool[int(rng.integers(len(pool)))]


# lower bound on OPT ---------------------------------------------------


@dataclass(frozen=True)
class OptBound:
    saturated_work: int
    trivial_floor: int
    unsaturated_obligations: dict[int, int]
    lower_bound: int


def opt_lower_bound(c: CompDag, g: TaskGraph | None = None) -> OptBound:
    """max(t, total quota of saturated vertices), computed on the normalised pattern.

    ``unsaturated_obligations`` maps each unsaturated vertex whose strict
    ancestors carry less than ``t`` quota to the number of executions it is
    forced to perform, ``t - sum(ancestor quotas)``. After normalisation the
    map is empty.
    """
    c = normalize_split(c)
    report = classify_saturation(c)
    work = predecessor_work(c)
    sat = sum(c.vertex(v).h for v in report.saturated)
    obligations = {}
    for i, v in enumerate(c.vertices):
        before = work[i] - v.h
        if v.id in report.unsaturated and before < c.t:
            obligations[v.id] = c.t - before
    return OptBound(
        saturated_work=sat,
        trivial_floor=c.t,
        unsaturated_obligations=obligations,
        lower_bound=max(c.t, sat),
    )


# exact oracles --------------------------------------------------------


@dataclass(frozen=True)
class SearchLimits:
    max_total_quota: int = 24
    max_tasks: int = 16
    max_states: int = 500_000


def _check_limits(c: CompDag, g: TaskGraph, limits: SearchLimits):
    if c.t != g.t:
        raise InvalidArgument(f"pattern has t={c.t} but task graph has t={g.t}")
    require_valid(c)
    total = c.total_work()
    if total > limits.max_total_quota or g.t > limits.max_tasks:
        raise ResourceLimitError(
            f"instance too large for exact search (total quota {total}, t={g.t})",
            fallback=opt_lower_bound(c, g).lower_bound,
        )


def _tasks(mask: int) -> list[int]:
    return [x for x in range(mask.bit_length()) if mask >> x & 1]


class _Enumerator:
    """Shared machinery: live knowledge sets and per-vertex outcome distributions."""

    def __init__(self, c: CompDag, g: TaskGraph, policy, limits: SearchLimits):
        self.c, self.g, self.policy, self.limits = c, g, policy, limits
        self.order = c.topo_order
        self.pos = {v: k for k, v in enumerate(self.order)}
        self.full = (1 << g.t) - 1
        # position after which the vertex's knowledge is no longer needed
        self.last_use = [
            max((self.pos[j] for j in c.succ[i]), default=-1) for i in range(c.n)
        ]
        self.states = 0
        self._memo: dict = {}

    def tick(self):
        self.states += 1
        if self.states > self.limits.max_states:
            raise ResourceLimitError(
                f"exact search exceeded {self.limits.max_states} states",
                fallback=opt_lower_bound(self.c, self.g).lower_bound,
            )

    def knowledge_in(self, i: int, live: dict[int, int]) -> int:
        k = 0
        for j in self.c.pred[i]:
            k |= live[j]
        return k

    def advance(self, k: int, i: int, live: tuple, k_out: int) -> tuple:
        d = dict(live)
        d[i] = k_out
        return tuple(sorted((j, m) for j, m in d.items() if self.last_use[j] > k))

    def choices(self, known: int) -> list[int]:
        return candidates(self.policy, self.g, _tasks(known))

    def outcomes(self, known: int, quota: int) -> dict[int, Fraction]:
        """Distribution of knowledge after a vertex with this entry knowledge and quota."""
        key = (known, quota)
        if key not in self._memo:
            self._memo[key] = self._outcomes(known, quota)
        return self._memo[key]

    def _outcomes(self, known: int, quota: int) -> dict[int, Fraction]:
        self.tick()
        if quota == 0 or known == self.full:
            return {known: Fraction(1)}
        pool = self.choices(known)
        if self.policy.kind == "lowest_label_det":
            pool = pool[:1]
        share = Fraction(1, len(pool))
        acc: dict[int, Fraction] = {}
        for x in pool:
            for k_out, pr in self.outcomes(known | 1 << x, quota - 1).items():
                acc[k_out] = acc.get(k_out, 0) + share * pr
        return acc


def expected_work_exact(c: CompDag, g: TaskGraph, policy, limits: SearchLimits = SearchLimits()) -> Fraction:
    """E[total work] of a policy, enumerating every random choice with its probability."""
    policy = as_policy(policy)
    _check_limits(c, g, limits)
    en = _Enumerator(c, g, policy, limits)
    memo: dict = {}

    def value(k: int, live: tuple) -> Fraction:
        if k == len(en.order):
            return Fraction(0)
        key = (k, live)
        if key in memo:
            return memo[key]
        en.tick()
        i = en.order[k]
        known = en.knowledge_in(i, dict(live))
        quota = c.vertices[i].h
        total = Fraction(0)
        for k_out, pr in en.outcomes(known, quota).items():
            work = bin(k_out).count("1") - bin(known).count("1")
            total += pr * (work + value(k + 1, en.advance(k, i, live, k_out)))
        memo[key] = total
        return total

    return value(0, ())


def opt_exact(c: CompDag, g: TaskGraph, limits: SearchLimits = SearchLimits()) -> int:
    """Minimum total work over every valid choice of executed tasks at every vertex.

    A group always works until its quota is spent or it knows every task is
    done; OPT only decides which tasks. Every dependency-respecting execution
    order is reachable through eligible-task choices, so the reachable
    outcomes of the eligible-RS enumeration are exactly OPT's options.
    """
    _check_limits(c, g, limits)
    en = _Enumerator(c, g, SchedulerPolicy("eligible_rs"), limits)
    memo: dict = {}

    def value(k: int, live: tuple) -> int:
        if k == len(en.order):
            return 0
        key = (k, live)
        if key in memo:
            return memo[key]
        en.tick()
        i = en.order[k]
        known = en.knowledge_in(i, dict(live))
        base = bin(known).count("1")
        best = None
        for k_out in en.outcomes(known, c.vertices[i].h):
            cand = bin(k_out).count("1") - base + value(k + 1, en.advance(k, i, live, k_out))
            if best is None or cand < best:
                best = cand
        memo[key] = best
        return best

    return value(0, ())
