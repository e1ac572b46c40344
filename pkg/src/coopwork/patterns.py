"""Computation pattern generators: the lower-bound constructions and random patterns."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .compdag import CompDag, CompVertex
from .errors import InvalidArgument

KINDS = ("single_group", "isolated", "two_level_lb", "k_level_lb", "random")


@dataclass(frozen=True)
class PatternSpec:
    kind: str
    p: int = 1
    t: int = 1
    w: int = 1
    fractions: tuple[Fraction, ...] = (Fraction(1),)
    depth: int = 3
    merge_prob: float = 0.5
    max_quota: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown pattern kind {self.kind!r}")


def _exact_quota(frac, t: int, w: int) -> int:
    q = Fraction(frac) * t / w
    if q.denominator != 1:
        raise InvalidArgument(f"quota {frac}*{t}/{w} = {q} is not an integer")
    return int(q)


def gen_single_group(p: int, t: int) -> CompDag:
    if p < 1 or t < 1:
        raise InvalidArgument("p and t must be positive")
    return CompDag.build(p, t, [(0, t, range(1, p + 1))])


def gen_isolated(p: int, t: int) -> CompDag:
    if p < 1 or t < 1:
        raise InvalidArgument("p and t must be positive")
    return CompDag.build(p, t, [(i, t, [i + 1]) for i in range(p)])


def gen_k_level_lb(w: int, t: int, fractions: Sequence) -> CompDag:
    """Rounds of ``w`` isolated processors joined by an all-processor merge.

    Round ``i`` gives each singleton ``fractions[i] * t / w`` executions; the
    merge that closes each round carries no quota. After the last merge the
    processors split once more and each runs alone with quota ``t``.
    """
    if w < 1 or t < 1:
        raise InvalidArgument("w and t must be positive")
    fracs = [Fraction(f).limit_denominator(10**9) if isinstance(f, float) else Fraction(f) for f in fractions]
    if not fracs:
        raise InvalidArgument("at least one level fraction is required")
    if any(f <= 0 or f > 1 for f in fracs):
        raise InvalidArgument(f"fractions must lie in (0, 1], got {fracs}")
    if sum(fracs) != 1:
        raise InvalidArgument(f"fractions must sum to 1, got {sum(fracs)}")
    return _rounds(w, t, [_exact_quota(f, t, w) for f in fracs])


def _rounds(w: int, t: int, quotas: list[int]) -> CompDag:
    if t % w:
        raise InvalidArgument(f"t={t} is not a multiple of w={w}")
    everyone = frozenset(range(1, w + 1))
    vertices: list[CompVertex] = []
    edges: dict[tuple[int, int], frozenset[int]] = {}
    next_id = 0
    merge = None
    for q in quotas:
        ids = list(range(next_id, next_id + w))
        next_id += w
        for j, vid in enumerate(ids):
            vertices.append(CompVertex(vid, q, frozenset([j + 1])))
            if merge is not None:
                edges[(merge, vid)] = frozenset([j + 1])
        merge = next_id
        next_id += 1
        vertices.append(CompVertex(merge, 0, everyone))
        for j, vid in enumerate(ids):
            edges[(vid, merge)] = frozenset([j + 1])
    for j in range(w):
        vertices.append(CompVertex(next_id, t, frozenset([j + 1])))
        edges[(merge, next_id)] = frozenset([j + 1])
        next_id += 1
    return CompDag(p=w, t=t, vertices=tuple(vertices), edges=edges)


def gen_two_level_lb(w: int, t: int, alpha) -> CompDag:
    alpha = Fraction(alpha).limit_denominator(10**9) if isinstance(alpha, float) else Fraction(alpha)
    if not 0 < alpha <= 1:
        raise InvalidArgument(f"alpha must lie in (0, 1], got {alpha}")
    if w < 1 or t < 1:
        raise InvalidArgument("w and t must be positive")
    # alpha = 1 keeps the second round, with zero quota
    return _rounds(w, t, [_exact_quota(alpha, t, w), _exact_quota(1 - alpha, t, w)])


def merge_vertices(c: CompDag) -> list[int]:
    """Ids of the zero-quota all-processor merge vertices, in round order."""
    full = frozenset(range(1, c.p + 1))
    return [v.id for v in c.vertices if v.h == 0 and v.group == full and c.pred[c.index[v.id]]]


def _random_partition(rng, items: list[int]) -> list[list[int]]:
    """Split items into random nonempty blocks."""
    items = list(items)
    rng.shuffle(items)
    blocks: list[list[int]] = []
    for x in items:
        k = int(rng.integers(len(blocks) + 1))
        if k == len(blocks):
            blocks.append([x])
        else:
            blocks[k].append(x)
    return [sorted(b) for b in blocks]


def gen_random(spec: PatternSpec, seed: int) -> CompDag:
    """Layered random regrouping of ``p`` processors with random quotas.

    ``depth`` counts vertex layers (``depth=1`` is just the initial partition).
    At each later layer every current group joins the reconfiguration with
    probability ``merge_prob``; the processors of the joining groups are
    re-partitioned into new groups, with one edge per nonempty overlap.
    Quotas are uniform on ``[0, max_quota]``; afterwards terminal vertices are
    topped up so every maximal path carries at least ``t``.
    """
    p, t, depth = spec.p, spec.t, spec.depth
    if p < 1 or t < 1 or depth < 1:
        raise InvalidArgument("p, t and depth must be positive")
    if not 0 <= spec.merge_prob <= 1:
        raise InvalidArgument("merge_prob must lie in [0, 1]")
    max_quota = t if spec.max_quota is None else spec.max_quota
    if not 0 <= max_quota <= t:
        raise InvalidArgument("max_quota must lie in [0, t]")
    rng = np.random.default_rng(seed)

    groups: dict[int, frozenset[int]] = {}
    quota: dict[int, int] = {}
    edges: dict[tuple[int, int], frozenset[int]] = {}
    frontier: list[int] = []
    next_id = 0

    def new_vertex(members):
        nonlocal next_id
        vid = next_id
        next_id += 1
        groups[vid] = frozenset(members)
        quota[vid] = int(rng.integers(max_quota + 1))
        return vid

    for block in _random_partition(rng, list(range(1, p + 1))):
        frontier.append(new_vertex(block))
    for _ in range(depth - 1):
        joining = [v for v in frontier if rng.random() < spec.merge_prob]
        if not joining:
            continue
        pooled = sorted(x for v in joining for x in groups[v])
        created = [new_vertex(b) for b in _random_partition(rng, pooled)]
        for u in joining:
            for v in created:
                shared = groups[u] & groups[v]
                if shared:
                    edges[(u, v)] = shared
        frontier = [v for v in frontier if v not in joining] + created

    # pad sinks so the lightest path into each reaches t
    preds: dict[int, list[int]] = {v: [] for v in groups}
    has_succ = set()
    for u, v in edges:
        preds[v].append(u)
        has_succ.add(u)
    lightest: dict[int, int] = {}
    for v in sorted(groups):  # ids are created in topological order
        lightest[v] = quota[v] + min((lightest[u] for u in preds[v]), default=0)
    for v in groups:
        if v not in has_succ and lightest[v] < t:
            quota[v] += t - lightest[v]

    vertices = tuple(CompVertex(v, quota[v], groups[v]) for v in sorted(groups))
    return CompDag(p=p, t=t, vertices=vertices, edges=edges)


def generate(spec: PatternSpec, seed: int = 0) -> CompDag:
    if spec.kind == "single_group":
        return gen_single_group(spec.p, spec.t)
    if spec.kind == "isolated":
        return gen_isolated(spec.p, spec.t)
    if spec.kind == "two_level_lb":
        return gen_two_level_lb(spec.w, spec.t, spec.fractions[0])
    if spec.kind == "k_level_lb":
        return gen_k_level_lb(spec.w, spec.t, spec.fractions)
    return gen_random(spec, seed)
