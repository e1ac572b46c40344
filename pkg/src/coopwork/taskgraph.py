"""Leveled task dependency graphs, the labeling pass and eligibility queries.

Tasks are the integers ``0..t-1``. A knowledge set (tasks a group knows to be
complete) is any collection of task ids; the query functions return
``frozenset`` objects.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from graphlib import CycleError, TopologicalSorter
from typing import Iterable

import numpy as np

from .errors import CyclicDependencyError, EmptyChoiceError, InvalidArgument, PreconditionError

TaskSet = frozenset


@dataclass(frozen=True, eq=False)
class TaskGraph:
    """Dependency structure over ``t`` tasks with per-task labels.

    ``complete_leveled`` graphs (from :func:`build_leveled`) keep no explicit
    edge list: every task of level ``i`` precedes every task of level
    ``i + 1``, so the edge set is generated on demand.
    """

    t: int
    labels: tuple[int, ...]
    preds: tuple[tuple[int, ...], ...] | None = None
    complete_leveled: bool = False
    level_sizes: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        k = max(self.labels) + 1 if self.labels else 0
        sizes = [0] * k
        for lab in self.labels:
            sizes[lab] += 1
        object.__setattr__(self, "level_sizes", tuple(sizes))

    @property
    def k(self) -> int:
        return len(self.level_sizes)

    @property
    def level_fractions(self) -> tuple[Fraction, ...]:
        return tuple(Fraction(n, self.t) for n in self.level_sizes)

    @cached_property
    def level_offsets(self) -> np.ndarray:
        return np.concatenate([[0], np.cumsum(self.level_sizes)]).astype(np.int64)

    @cached_property
    def tasks_by_level(self) -> np.ndarray:
        """Task ids sorted by (label, id)."""
        labels = np.asarray(self.labels, dtype=np.int64)
        return np.lexsort((np.arange(self.t), labels)).astype(np.int64)

    def level_tasks(self, level: int) -> np.ndarray:
        lo, hi = self.level_offsets[level], self.level_offsets[level + 1]
        return self.tasks_by_level[lo:hi]

    def predecessors(self, task: int) -> tuple[int, ...]:
        if self.complete_leveled:
            lab = self.labels[task]
            if lab == 0:
                return ()
            return tuple(int(x) for x in self.level_tasks(lab - 1))
        return self.preds[task]

    @property
    def edges(self) -> frozenset[tuple[int, int]]:
        return frozenset((u, v) for v in range(self.t) for u in self.predecessors(v))

    @cached_property
    def successors(self) -> tuple[tuple[int, ...], ...]:
        if self.complete_leveled:
            out = []
            for x in range(self.t):
                lab = self.labels[x]
                nxt = self.level_tasks(lab + 1) if lab + 1 < self.k else ()
                out.append(tuple(int(y) for y in nxt))
            return tuple(out)
        succ = [[] for _ in range(self.t)]
        for v in range(self.t):
            for u in self.preds[v]:
                succ[u].append(v)
        return tuple(tuple(s) for s in succ)

    def is_complete_leveled(self) -> bool:
        """True when consecutive levels are joined by every possible edge and no others."""
        if self.complete_leveled:
            return True
        for v in range(self.t):
            lab = self.labels[v]
            want = set() if lab == 0 else {int(x) for x in self.level_tasks(lab - 1)}
            if set(self.preds[v]) != want:
                return False
        return True

    def to_dict(self) -> dict:
        if self.complete_leveled:
            return {"levels": list(self.level_sizes)}
        return {"t": self.t, "edges": sorted([u, v] for u, v in self.edges)}


def build_leveled(level_sizes: Iterable[int]) -> TaskGraph:
    sizes = list(level_sizes)
    if not sizes:
        raise InvalidArgument("at least one level is required")
    if any(int(n) != n or n < 1 for n in sizes):
        raise InvalidArgument(f"level sizes must be positive integers, got {sizes}")
    labels = []
    for lab, n in enumerate(sizes):
        labels.extend([lab] * int(n))
    return TaskGraph(t=len(labels), labels=tuple(labels), complete_leveled=True)


def label_dag(t: int, edges: Iterable[tuple[int, int]]) -> TaskGraph:
    """Label every task with the length of the longest dependency chain ending at it.

    This is the fixed point of repeatedly relabelling ``v`` to ``label(u) + 1``
    along each edge ``(u, v)`` whenever that increases the label.
    """
    if t < 1:
        raise InvalidArgument("t must be positive")
    preds: list[set[int]] = [set() for _ in range(t)]
    for u, v in edges:
        u, v = int(u), int(v)
        if not (0 <= u < t and 0 <= v < t):
            raise InvalidArgument(f"edge ({u}, {v}) outside [0, {t})")
        if u == v:
            raise CyclicDependencyError(f"self-loop on task {u}")
        preds[v].add(u)
    try:
        order = list(TopologicalSorter({v: preds[v] for v in range(t)}).static_order())
    except CycleError as exc:
        raise CyclicDependencyError(f"dependency cycle through {exc.args[1]}") from None
    labels = [0] * t
    for v in order:
        if preds[v]:
            labels[v] = max(labels[u] for u in preds[v]) + 1
    return TaskGraph(
        t=t, labels=tuple(labels), preds=tuple(tuple(sorted(p)) for p in preds)
    )


def _check_tasks(g: TaskGraph, tasks) -> frozenset:
    ks = frozenset(int(x) for x in tasks)
    bad = [x for x in ks if not 0 <= x < g.t]
    if bad:
        raise InvalidArgument(f"task ids {sorted(bad)} outside [0, {g.t})")
    return ks


def is_closed(g: TaskGraph, known_complete) -> bool:
    ks = _check_tasks(g, known_complete)
    if g.complete_leveled:
        per_level = [0] * g.k
        for x in ks:
            per_level[g.labels[x]] += 1
        top = max((g.labels[x] for x in ks), default=0)
        return all(per_level[i] == g.level_sizes[i] for i in range(top))
    return all(u in ks for x in ks for u in g.preds[x])


def eligible_tasks(g: TaskGraph, known_complete) -> TaskSet:
    ks = _check_tasks(g, known_complete)
    if not is_closed(g, ks):
        raise PreconditionError("known_complete is not closed under dependencies")
    if g.complete_leveled:
        per_level = [0] * g.k
        for x in ks:
            per_level[g.labels[x]] += 1
        open_levels = [i for i in range(g.k) if i == 0 or per_level[i - 1] == g.level_sizes[i - 1]]
        return TaskSet(
            int(x) for i in open_levels for x in g.level_tasks(i) if int(x) not in ks
        )
    return TaskSet(
        x for x in range(g.t) if x not in ks and all(u in ks for u in g.preds[x])
    )


def minimal_label_incomplete(g: TaskGraph, known_complete) -> TaskSet:
    ks = _check_tasks(g, known_complete)
    incomplete = [x for x in range(g.t) if x not in ks]
    if not incomplete:
        raise EmptyChoiceError("every task is already complete")
    low = min(g.labels[x] for x in incomplete)
    return TaskSet(x for x in incomplete if g.labels[x] == low)


def taskgraph_from_dict(data: dict) -> TaskGraph:
    if "levels" in data:
        return build_leveled(data["levels"])
    if "t" in data:
        return label_dag(int(data["t"]), [tuple(e) for e in data.get("edges", [])])
    raise InvalidArgument('task graph needs either "levels" or "t"/"edges"')


def load_taskgraph(path) -> TaskGraph:
    with open(path) as fh:
        return taskgraph_from_dict(json.load(fh))


def save_taskgraph(g: TaskGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(g.to_dict(), fh)
        fh.write("\n")
