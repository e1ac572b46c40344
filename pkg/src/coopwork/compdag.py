"""Computation patterns: DAGs of processor groups with work quotas.

A vertex is a group of processors that stays connected while it performs up
to ``h`` task executions; an edge ``(u, v)`` carries the processors ``phi``
that move from group ``u`` into group ``v`` at a reconfiguration.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from typing import Iterable, Mapping

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .errors import InvalidArgument, ValidationError


@dataclass(frozen=True)
class CompVertex:
    id: int
    h: int
    group: frozenset[int]


@dataclass(frozen=True, eq=False)
class CompDag:
    p: int
    t: int
    vertices: tuple[CompVertex, ...]
    edges: Mapping[tuple[int, int], frozenset[int]] = field(default_factory=dict)

    @classmethod
    def build(cls, p, t, vertices, edges=()) -> "CompDag":
        """Convenience constructor.

        ``vertices`` holds ``(id, h, group)`` triples and ``edges`` holds
        ``(from, to, phi)`` triples.
        """
        vs = tuple(CompVertex(int(i), int(h), frozenset(int(x) for x in g)) for i, h, g in vertices)
        es = {(int(u), int(v)): frozenset(int(x) for x in phi) for u, v, phi in edges}
        return cls(p=int(p), t=int(t), vertices=vs, edges=es)

    # index bookkeeping -------------------------------------------------

    @cached_property
    def index(self) -> dict[int, int]:
        return {v.id: i for i, v in enumerate(self.vertices)}

    @property
    def n(self) -> int:
        return len(self.vertices)

    @property
    def ids(self) -> list[int]:
        return [v.id for v in self.vertices]

    @cached_property
    def h(self) -> np.ndarray:
        return np.array([v.h for v in self.vertices], dtype=np.int64)

    @cached_property
    def _adjacency(self):
        succ = [[] for _ in self.vertices]
        pred = [[] for _ in self.vertices]
        for u, v in self.edges:
            iu, iv = self.index[u], self.index[v]
            succ[iu].append(iv)
            pred[iv].append(iu)
        return [sorted(s) for s in succ], [sorted(p) for p in pred]

    @property
    def succ(self) -> list[list[int]]:
        return self._adjacency[0]

    @property
    def pred(self) -> list[list[int]]:
        return self._adjacency[1]

    def vertex(self, vid: int) -> CompVertex:
        try:
            return self.vertices[self.index[vid]]
        except KeyError:
            raise InvalidArgument(f"unknown vertex {vid}") from None

    @cached_property
    def topo_order(self) -> list[int] | None:
        """Vertex positions in topological order, or None if the graph has a cycle."""
        indeg = [len(p) for p in self.pred]
        stack = [i for i in range(self.n) if indeg[i] == 0][::-1]
        order = []
        while stack:
            i = stack.pop()
            order.append(i)
            for j in reversed(self.succ[i]):
                indeg[j] -= 1
                if indeg[j] == 0:
                    stack.append(j)
        return order if len(order) == self.n else None

    def _require_acyclic(self) -> list[int]:
        order = self.topo_order
        if order is None:
            raise ValidationError(["graph contains a cycle"])
        return order

    @cached_property
    def descendants(self) -> list[int]:
        """Reachability bitsets: bit j of entry i is set iff i <= j (reflexive)."""
        order = self._require_acyclic()
        desc = [0] * self.n
        for i in reversed(order):
            bits = 1 << i
            for j in self.succ[i]:
                bits |= desc[j]
            desc[i] = bits
        return desc

    @cached_property
    def ancestors(self) -> list[int]:
        order = self._require_acyclic()
        anc = [0] * self.n
        for i in order:
            bits = 1 << i
            for j in self.pred[i]:
                bits |= anc[j]
            anc[i] = bits
        return anc

    def sources(self) -> list[int]:
        return [i for i in range(self.n) if not self.pred[i]]

    def sinks(self) -> list[int]:
        return [i for i in range(self.n) if not self.succ[i]]

    def induced(self, positions: Iterable[int]) -> "CompDag":
        keep = sorted(set(positions))
        ids = {self.vertices[i].id for i in keep}
        return CompDag(
            p=self.p,
            t=self.t,
            vertices=tuple(self.vertices[i] for i in keep),
            edges={e: phi for e, phi in self.edges.items() if e[0] in ids and e[1] in ids},
        )

    def total_work(self) -> int:
        return int(self.h.sum())

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "t": self.t,
            "vertices": [{"id": v.id, "h": v.h, "group": sorted(v.group)} for v in self.vertices],
            "edges": [
                {"from": u, "to": v, "phi": sorted(phi)} for (u, v), phi in self.edges.items()
            ],
        }


def _bits(mask: int):
    while mask:
        low = mask & -mask
        yield low.bit_length() - 1
        mask ^= low


def comp_from_dict(data: dict) -> CompDag:
    return CompDag.build(
        data["p"],
        data["t"],
        [(v["id"], v["h"], v["group"]) for v in data["vertices"]],
        [(e["from"], e["to"], e["phi"]) for e in data.get("edges", [])],
    )


def load_pattern(path) -> CompDag:
    with open(path) as fh:
        return comp_from_dict(json.load(fh))


def save_pattern(c: CompDag, path) -> None:
    with open(path, "w") as fh:
        json.dump(c.to_dict(), fh, indent=1)
        fh.write("\n")


def figure1_pattern(t: int | None = None) -> CompDag:
    """The 15-processor, 14-group example pattern shipped with the package."""
    text = resources.files("coopwork.data").joinpath("figure1.json").read_text()
    data = json.loads(text)
    if t is not None:
        old = data["t"]
        data["t"] = t
        for v in data["vertices"]:
            if v["h"] == old:
                v["h"] = t
    return comp_from_dict(data)


# validation -----------------------------------------------------------


@dataclass(frozen=True)
class Verdict:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok


def _disjoint_union(parts: list[frozenset[int]]):
    union: set[int] = set()
    overlap: set[int] = set()
    for part in parts:
        overlap |= union & part
        union |= part
    return frozenset(union), frozenset(overlap)


def min_path_weight(c: CompDag) -> dict[int, int]:
    """Smallest quota sum over source-to-v paths, for every sink position v."""
    order = c._require_acyclic()
    best = [0] * c.n
    for i in order:
        best[i] = c.vertices[i].h + min((best[j] for j in c.pred[i]), default=0)
    return {i: best[i] for i in c.sinks()}


def maximal_path_weights(c: CompDag) -> list[int]:
    """Quota sums of every maximal path (exponential; for checks on small patterns)."""
    c._require_acyclic()
    out = []

    def walk(i, acc):
        acc += c.vertices[i].h
        if not c.succ[i]:
            out.append(acc)
        for j in c.succ[i]:
            walk(j, acc)

    for s in c.sources():
        walk(s, 0)
    return out


def validate(c: CompDag) -> Verdict:
    errs: list[str] = []
    if c.p < 1 or c.t < 1:
        errs.append(f"p and t must be positive (p={c.p}, t={c.t})")
    if len(c.index) != c.n:
        errs.append("duplicate vertex ids")
        return Verdict(tuple(errs))
    universe = frozenset(range(1, c.p + 1))
    for v in c.vertices:
        if v.h < 0:
            errs.append(f"vertex {v.id}: negative quota {v.h}")
        if not v.group:
            errs.append(f"vertex {v.id}: empty group")
        elif not v.group <= universe:
            errs.append(f"vertex {v.id}: processors {sorted(v.group - universe)} outside [1, {c.p}]")
    for (u, v), phi in c.edges.items():
        if u not in c.index or v not in c.index:
            errs.append(f"edge ({u}, {v}) references an unknown vertex")
            return Verdict(tuple(errs))
        if not phi:
            errs.append(f"edge ({u}, {v}): empty flow")
    if c.topo_order is None:
        errs.append("graph contains a cycle")
        return Verdict(tuple(errs))

    initial = [c.vertices[i].group for i in c.sources()]
    union, overlap = _disjoint_union(initial)
    if overlap:
        errs.append(f"initial condition: processors {sorted(overlap)} in several initial groups")
    if union != universe:
        missing = sorted(universe - union)
        errs.append(f"initial condition: initial groups miss processors {missing}")

    for i, vert in enumerate(c.vertices):
        for side, nbrs in (("in", c.pred[i]), ("out", c.succ[i])):
            if not nbrs:
                continue
            flows = [
                c.edges[(c.vertices[j].id, vert.id) if side == "in" else (vert.id, c.vertices[j].id)]
                for j in nbrs
            ]
            union, overlap = _disjoint_union(flows)
            if overlap:
                errs.append(f"conservation ({side}) at {vert.id}: flows overlap on {sorted(overlap)}")
            if union != vert.group:
                errs.append(
                    f"conservation ({side}) at {vert.id}: flows give {sorted(union)}, "
                    f"group is {sorted(vert.group)}"
                )

    for i, w in min_path_weight(c).items():
        if w < c.t:
            errs.append(f"maximal path ending at {c.vertices[i].id} has weight {w} < t={c.t}")
    return Verdict(tuple(errs))


def require_valid(c: CompDag) -> None:
    verdict = validate(c)
    if not verdict.ok:
        raise ValidationError(verdict.violations)


# sub-patterns and width -------------------------------------------------


def predecessor_graph(c: CompDag, vid: int) -> CompDag:
    c.vertex(vid)
    return c.induced(_bits(c.ancestors[c.index[vid]]))


def successor_graph(c: CompDag, vid: int) -> CompDag:
    c.vertex(vid)
    return c.induced(_bits(c.descendants[c.index[vid]]))


def _width(positions: list[int], desc: list[int]) -> int:
    """Dilworth: n minus a maximum matching in the strict comparability graph."""
    n = len(positions)
    if n <= 1:
        return n
    local = {pos: k for k, pos in enumerate(positions)}
    rows, cols = [], []
    for k, pos in enumerate(positions):
        for other in _bits(desc[pos] & ~(1 << pos)):
            if other in local:
                rows.append(k)
                cols.append(local[other])
    if not rows:
        return n
    graph = csr_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return n - int((match >= 0).sum())


def poset_width(d: CompDag) -> int:
    """Size of a largest antichain of the reachability order."""
    return _width(list(range(d.n)), d.descendants)


def computation_width(c: CompDag) -> int:
    """Largest width among successor graphs.

    Each S(v) is a sub-order of S(s) for any source s <= v, so only sources
    need to be examined.
    """
    desc = c.descendants
    return max((_width(list(_bits(desc[s])), desc) for s in c.sources()), default=0)


# saturation and splitting ---------------------------------------------


@dataclass(frozen=True)
class SaturationReport:
    predecessor_work: dict[int, int]
    saturated: frozenset[int]
    unsaturated: frozenset[int]
    level1_unsaturated: frozenset[int] | None = None


def predecessor_work(c: CompDag) -> list[int]:
    """H(P(v)) for every vertex position: quota summed over v and all its ancestors."""
    h = [v.h for v in c.vertices]
    return [sum(h[j] for j in _bits(mask)) for mask in c.ancestors]


def classify_saturation(c: CompDag, g=None) -> SaturationReport:
    work = predecessor_work(c)
    sat = frozenset(c.vertices[i].id for i in range(c.n) if work[i] <= c.t)
    unsat = frozenset(v.id for v in c.vertices) - sat
    l1 = None
    if g is not None:
        threshold = g.level_fractions[0] * c.t
        l1 = frozenset(
            c.vertices[i].id for i in range(c.n) if work[i] <= c.t and work[i] >= threshold
        )
    return SaturationReport(
        predecessor_work={v.id: work[i] for i, v in enumerate(c.vertices)},
        saturated=sat,
        unsaturated=unsat,
        level1_unsaturated=l1,
    )


def normalize_split(c: CompDag) -> CompDag:
    """Split each unsaturated vertex whose strict ancestors hold less than ``t`` quota.

    The front half keeps the vertex id and the in-edges and absorbs exactly
    the quota that brings its ancestors' total to ``t``; the back half gets a
    fresh id and the out-edges.
    """
    require_valid(c)
    work = predecessor_work(c)
    next_id = max(c.ids) + 1
    vertices: list[CompVertex] = []
    renamed: dict[int, int] = {}
    extra_edges: dict[tuple[int, int], frozenset[int]] = {}
    for i, v in enumerate(c.vertices):
        before = work[i] - v.h
        if work[i] > c.t and before < c.t:
            front = c.t - before
            vertices.append(CompVertex(v.id, front, v.group))
            vertices.append(CompVertex(next_id, v.h - front, v.group))
            renamed[v.id] = next_id
            extra_edges[(v.id, next_id)] = v.group
            next_id += 1
        else:
            vertices.append(v)
    if not renamed:
        return c
    edges = {(renamed.get(u, u), v): phi for (u, v), phi in c.edges.items()}
    edges.update(extra_edges)
    return CompDag(p=c.p, t=c.t, vertices=tuple(vertices), edges=edges)
