"""Brute-force references used only by the tests.

Nothing here imports the code under test beyond plain data access, so each
helper checks an implementation by an independent route.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np


def reach_pairs(n, edges):
    """All (u, v) with a directed path u -> v, by depth-first search from every vertex."""
    succ = {i: [] for i in range(n)}
    for u, v in edges:
        succ[u].append(v)
    out = set()
    for s in range(n):
        stack, seen = [s], set()
        while stack:
            x = stack.pop()
            for y in succ[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        out |= {(s, y) for y in seen}
    return out


def max_antichain_size(n, edges):
    """Largest set of pairwise incomparable vertices, by exhaustive subset search."""
    comparable = reach_pairs(n, edges)
    for size in range(n, 0, -1):
        for subset in itertools.combinations(range(n), size):
            if all((a, b) not in comparable and (b, a) not in comparable
                   for a, b in itertools.combinations(subset, 2)):
                return size
    return 0


def dag_as_indices(c):
    """(n, edges) of a CompDag with vertices renumbered 0..n-1 in listed order."""
    pos = {v.id: i for i, v in enumerate(c.vertices)}
    return len(c.vertices), [(pos[u], pos[v]) for u, v in c.edges]


def all_paths(c):
    """Every directed path (as a tuple of vertex ids), including single vertices."""
    succ = {v.id: [] for v in c.vertices}
    for u, v in c.edges:
        succ[u].append(v)
    out = []

    def walk(path):
        out.append(tuple(path))
        for nxt in succ[path[-1]]:
            walk(path + [nxt])

    for v in c.vertices:
        walk([v.id])
    return out


def predecessor_ids(c, vid):
    return {x for path in all_paths(c) if path[-1] == vid for x in path}


def successor_ids(c, vid):
    return {x for path in all_paths(c) if path[0] == vid for x in path}


def brute_eligible(t, edges, known):
    preds = {x: {u for u, v in edges if v == x} for x in range(t)}
    return {x for x in range(t) if x not in known and preds[x] <= set(known)}


def brute_labels(t, edges):
    """Repeat the relabel rule label(v) = max(label(v), label(u) + 1) until nothing changes."""
    labels = [0] * t
    changed = True
    while changed:
        changed = False
        for u, v in edges:
            if labels[u] + 1 > labels[v]:
                labels[v] = labels[u] + 1
                changed = True
    return labels


def random_dag(rng, n, p_edge):
    order = rng.permutation(n)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p_edge:
                edges.append((int(order[i]), int(order[j])))
    return edges


def expected_left_two_level(alpha_t: int, w: int) -> float:
    """alpha*t*(1 - 1/w)**w: each of w processors misses a given task with prob 1 - 1/w."""
    return alpha_t * (1.0 - 1.0 / w) ** w


def merge_pair_expectation() -> Fraction:
    """Two singletons each execute one of two independent tasks, then merge.

    Enumerates the four equally likely choice pairs: distinct picks cost 2,
    equal picks force one more execution at the merge and cost 3.
    """
    total = Fraction(0)
    for a, b in itertools.product(range(2), repeat=2):
        total += Fraction(1, 4) * (2 if a != b else 3)
    return total


def chi2_uniform_ok(counts, sigmas=3.0):
    """Each cell within ``sigmas`` binomial standard deviations of the uniform share."""
    counts = np.asarray(counts, dtype=float)
    n, k = counts.sum(), len(counts)
    p = 1.0 / k
    sd = math.sqrt(n * p * (1 - p))
    return bool(np.all(np.abs(counts - n * p) <= sigmas * sd))
