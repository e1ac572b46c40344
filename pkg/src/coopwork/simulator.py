"""Run a scheduler over a computation pattern and account the work."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .compdag import CompDag, require_valid
from .errors import InvalidArgument, SchedulerDeadlock
from .scheduling import SchedulerPolicy, as_policy
from .taskgraph import TaskGraph

_POLICY_CODES = {
    "modified_rs": kernels.POLICY_MRS,
    "eligible_rs": kernels.POLICY_RS,
    "lowest_label_det": kernels.POLICY_DET,
}


@dataclass(frozen=True)
class VertexTrace:
    vertex: int
    executed: tuple[int, ...]
    knowledge_in: frozenset[int]
    knowledge_out: frozenset[int]


@dataclass(frozen=True)
class WorkReport:
    total_work: int
    traces: dict[int, VertexTrace]
    terminal_complete: bool
    seed: int

    def executed_counts(self) -> dict[int, int]:
        return {v: len(tr.executed) for v, tr in self.traces.items()}


def _prepare(c: CompDag, g: TaskGraph) -> kernels.TrialArrays:
    if c.t != g.t:
        raise InvalidArgument(f"pattern has t={c.t} but task graph has t={g.t}")
    require_valid(c)
    return kernels.TrialArrays(c, g)


def _check_status(status, policy):
    if status == kernels.STATUS_DEADLOCK:
        raise SchedulerDeadlock(f"{policy.kind}: incomplete tasks left but none selectable")


def run(c: CompDag, g: TaskGraph, policy, seed: int, backend: str | None = None) -> WorkReport:
    """One execution of ``policy`` over the pattern, with full per-vertex traces."""
    policy = as_policy(policy)
    arrays = _prepare(c, g)
    executed, _, flat, status = kernels.run_trial(
        arrays, _POLICY_CODES[policy.kind], seed, record=True, backend=backend
    )
    _check_status(status, policy)

    traces: dict[int, VertexTrace] = {}
    out_sets: list[frozenset[int]] = [frozenset()] * c.n
    cursor = 0
    for k, i in enumerate(arrays.order):
        vid = c.vertices[i].id
        run_tasks = tuple(int(x) for x in flat[cursor:cursor + executed[k]])
        cursor += executed[k]
        k_in = frozenset().union(*(out_sets[j] for j in c.pred[i]))
        k_out = k_in.union(run_tasks)
        out_sets[i] = k_out
        traces[vid] = VertexTrace(vid, run_tasks, k_in, k_out)
    total = int(executed.sum())
    everything = frozenset(range(g.t))
    terminal = all(out_sets[i] == everything for i in c.sinks())
    ordered = {v.id: traces[v.id] for v in c.vertices}
    return WorkReport(total_work=total, traces=ordered, terminal_complete=terminal, seed=int(seed))


def trial_seeds(seed: int, trials: int) -> np.ndarray:
    """Independent 64-bit seeds for each trial, derived from one master seed."""
    children = np.random.SeedSequence(seed).spawn(trials)
    return np.array([ch.generate_state(1, dtype=np.uint64)[0] for ch in children], dtype=np.uint64)


@dataclass
class MonteCarloSummary:
    policy: str
    seed: int
    seeds: np.ndarray
    work: np.ndarray
    executed: np.ndarray  # trials x vertices, columns in pattern vertex order
    known_in: np.ndarray  # trials x vertices
    terminal_complete: np.ndarray
    vertex_ids: list[int]

    @property
    def trials(self) -> int:
        return len(self.work)

    @property
    def mean(self) -> float:
        return float(self.work.mean())

    @property
    def std(self) -> float:
        return float(self.work.std(ddof=1)) if self.trials > 1 else 0.0

    @property
    def stderr(self) -> float:
        return self.std / np.sqrt(self.trials)

    @property
    def min(self) -> int:
        return int(self.work.min())

    @property
    def max(self) -> int:
        return int(self.work.max())

    def per_vertex_mean(self) -> dict[int, float]:
        means = self.executed.mean(axis=0)
        return {v: float(m) for v, m in zip(self.vertex_ids, means)}

    def column(self, vid: int) -> int:
        return self.vertex_ids.index(vid)


def monte_carlo(c: CompDag, g: TaskGraph, policy, trials: int, seed: int,
                backend: str | None = None) -> MonteCarloSummary:
    if trials < 1:
        raise InvalidArgument("trials must be at least 1")
    policy = as_policy(policy)
    arrays = _prepare(c, g)
    code = _POLICY_CODES[policy.kind]
    seeds = trial_seeds(seed, trials)
    work = np.zeros(trials, dtype=np.int64)
    executed = np.zeros((trials, c.n), dtype=np.int64)
    known_in = np.zeros((trials, c.n), dtype=np.int64)
    complete = np.zeros(trials, dtype=bool)
    sinks = [int(np.where(arrays.order == i)[0][0]) for i in c.sinks()]
    for r, s in enumerate(seeds):
        ex, kin, _, status = kernels.run_trial(arrays, code, int(s), backend=backend)
        _check_status(status, policy)
        executed[r, arrays.order] = ex
        known_in[r, arrays.order] = kin
        work[r] = ex.sum()
        complete[r] = all(kin[k] + ex[k] == g.t for k in sinks)
    return MonteCarloSummary(
        policy=policy.kind,
        seed=int(seed),
        seeds=seeds,
        work=work,
        executed=executed,
        known_in=known_in,
        terminal_complete=complete,
        vertex_ids=c.ids,
    )
