"""Per-trial execution kernels.

Two interchangeable backends run one trial of a pattern:

* ``numba`` -- the whole trial is a single ``@njit`` loop;
* ``numpy`` -- a Python loop over vertices with vectorised per-level work.

The backend is picked by the ``COOPWORK_BACKEND`` environment variable
(``numba`` or ``numpy``); the default is numba when it imports.

Randomness is counter based: the draw attached to ``(vertex, task)`` or
``(vertex, step)`` is a splitmix64 hash of the trial seed and that counter.
The draws therefore do not depend on evaluation order and both backends
produce identical traces for the same seed.

Random priority orders make m-RS cheap: picking uniformly among the
incomplete tasks of the lowest open level until the quota runs out is the
same as executing that level's incomplete tasks in a uniformly random
order, and a level is only ever drawn from once per vertex.  The eligible-RS
baseline has no such shortcut on general graphs and draws once per step.
"""
from __future__ import annotations

import os

import numpy as np

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

POLICY_MRS = 0
POLICY_RS = 1
POLICY_DET = 2

STATUS_OK = 0
STATUS_DEADLOCK = 1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_STEP_DOMAIN = np.uint64(0xD1B54A32D192ED03)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)


def available_backends() -> list[str]:
    return ["numba", "numpy"] if numba is not None else ["numpy"]


def default_backend() -> str:
    choice = os.environ.get("COOPWORK_BACKEND", "").strip().lower()
    if choice in ("numpy", "python", "off", "0"):
        return "numpy"
    if choice in ("", "numba", "jit", "1"):
        return "numba" if numba is not None else "numpy"
    raise ValueError(f"COOPWORK_BACKEND must be 'numba' or 'numpy', got {choice!r}")


# hashing ----------------------------------------------------------------


def _mix(z):
    """splitmix64 finaliser; works on numpy uint64 scalars and arrays."""
    z = (z ^ (z >> _S30)) * _M1
    z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def trial_streams(seed: int) -> tuple[np.uint64, np.uint64]:
    """Derive the priority-stream and step-stream keys of one trial."""
    with np.errstate(over="ignore"):
        s = np.uint64(seed & 0xFFFFFFFFFFFFFFFF)
        prio = _mix(s + _GOLDEN)
        step = _mix((s ^ _STEP_DOMAIN) + _GOLDEN)
    return prio, step


def priority_keys(stream, vertex: int, t: int, tasks: np.ndarray) -> np.ndarray:
    ctr = np.uint64(vertex) * np.uint64(t) + tasks.astype(np.uint64) + np.uint64(1)
    return _mix(stream + _GOLDEN * ctr)


# trial input ----------------------------------------------------------


class TrialArrays:
    """Flat arrays describing one (pattern, task graph) pair in topological order."""

    def __init__(self, c, g):
        order = c.topo_order
        pos = {old: new for new, old in enumerate(order)}
        self.order = np.asarray(order, dtype=np.int64)
        self.n = c.n
        self.t = g.t
        self.h = np.asarray([c.vertices[i].h for i in order], dtype=np.int64)
        preds = [sorted(pos[j] for j in c.pred[i]) for i in order]
        self.pred_ptr = np.zeros(self.n + 1, dtype=np.int64)
        self.pred_ptr[1:] = np.cumsum([len(p) for p in preds])
        self.pred_idx = np.asarray([j for p in preds for j in p], dtype=np.int64)
        self.level_ptr = g.level_offsets.astype(np.int64)
        self.level_tasks = g.tasks_by_level.astype(np.int64)
        self.task_level = np.asarray(g.labels, dtype=np.int64)
        self.leveled = bool(g.complete_leveled)
        if self.leveled:
            self.tsucc_ptr = np.zeros(1, dtype=np.int64)
            self.tsucc_idx = np.zeros(0, dtype=np.int64)
            self.npred = np.zeros(self.t, dtype=np.int64)
        else:
            succ = g.successors
            self.tsucc_ptr = np.zeros(self.t + 1, dtype=np.int64)
            self.tsucc_ptr[1:] = np.cumsum([len(s) for s in succ])
            self.tsucc_idx = np.asarray([y for s in succ for y in s], dtype=np.int64)
            self.npred = np.asarray([len(g.preds[x]) for x in range(self.t)], dtype=np.int64)
        self.capacity = int(np.minimum(self.h, self.t).sum())


# numpy backend ----------------------------------------------------------


def _priority_trial_numpy(a: TrialArrays, policy, seed, record):
    prio, _ = trial_streams(seed)
    n, t = a.n, a.t
    know = np.zeros((n, t), dtype=bool)
    executed = np.zeros(n, dtype=np.int64)
    known_in = np.zeros(n, dtype=np.int64)
    flat = np.zeros(a.capacity if record else 0, dtype=np.int64)
    cursor = 0
    nlev = len(a.level_ptr) - 1
    for v in range(n):
        preds = a.pred_idx[a.pred_ptr[v]:a.pred_ptr[v + 1]]
        row = know[v]
        if len(preds):
            np.logical_or.reduce(know[preds], axis=0, out=row)
        known_in[v] = row.sum()
        quota = a.h[v]
        for lev in range(nlev):
            if quota == 0:
                break
            tasks = a.level_tasks[a.level_ptr[lev]:a.level_ptr[lev + 1]]
            pool = tasks[~row[tasks]]
            m = len(pool)
            if m == 0:
                continue
            take = min(m, quota)
            if policy == POLICY_DET:
                chosen = pool[:take]
            elif take == m and not record:
                chosen = pool
            else:
                keys = priority_keys(prio, v, t, pool)
                if take < m:
                    kth = np.partition(keys, take - 1)[take - 1]
                    pick = keys < kth
                    ties = np.flatnonzero(keys == kth)[: take - pick.sum()]
                    pick[ties] = True
                    pool, keys = pool[pick], keys[pick]
                chosen = pool[np.argsort(keys, kind="stable")] if record else pool
            row[chosen] = True
            if record:
                flat[cursor:cursor + take] = chosen
            cursor += take
            quota -= take
            executed[v] += take
            if take < m:
                break
    return executed, known_in, flat[:cursor], STATUS_OK


def _stepwise_trial(n, t, h, pred_ptr, pred_idx, level_ptr, level_tasks, task_level,
                    leveled, tsucc_ptr, tsucc_idx, npred, stream, record, capacity):
    know = np.zeros((n, t), dtype=np.bool_)
    executed = np.zeros(n, dtype=np.int64)
    known_in = np.zeros(n, dtype=np.int64)
    flat = np.zeros(capacity if record else 0, dtype=np.int64)
    nlev = level_ptr.shape[0] - 1
    elig = np.zeros(t, dtype=np.int64)
    need = np.zeros(t, dtype=np.int64)
    unknown = np.zeros(nlev, dtype=np.int64)
    cursor = 0
    status = 0
    golden = np.uint64(0x9E3779B97F4A7C15)
    m1 = np.uint64(0xBF58476D1CE4E5B9)
    m2 = np.uint64(0x94D049BB133111EB)
    for v in range(n):
        for k in range(pred_ptr[v], pred_ptr[v + 1]):
            u = pred_idx[k]
            for x in range(t):
                if know[u, x]:
                    know[v, x] = True
        cnt = 0
        for x in range(t):
            if know[v, x]:
                cnt += 1
        known_in[v] = cnt
        if cnt == t or h[v] == 0:
            continue
        m = 0
        if leveled:
            for lev in range(nlev):
                unknown[lev] = 0
            for x in range(t):
                if not know[v, x]:
                    unknown[task_level[x]] += 1
            for lev in range(nlev):
                if lev == 0 or unknown[lev - 1] == 0:
                    for j in range(level_ptr[lev], level_ptr[lev + 1]):
                        x = level_tasks[j]
                        if not know[v, x]:
                            elig[m] = x
                            m += 1
        else:
            for x in range(t):
                need[x] = npred[x]
            for x in range(t):
                if know[v, x]:
                    for j in range(tsucc_ptr[x], tsucc_ptr[x + 1]):
                        need[tsucc_idx[j]] -= 1
            for x in range(t):
                if not know[v, x] and need[x] == 0:
                    elig[m] = x
                    m += 1
        quota = h[v]
        step = 0
        while quota > 0 and cnt < t:
            if m == 0:
                status = 1
                break
            ctr = np.uint64(v) * np.uint64(t) + np.uint64(step) + np.uint64(1)
            z = stream + golden * ctr
            z = (z ^ (z >> np.uint64(30))) * m1
            z = (z ^ (z >> np.uint64(27))) * m2
            z = z ^ (z >> np.uint64(31))
            idx = np.int64(((z >> np.uint64(32)) * np.uint64(m)) >> np.uint64(32))
            x = elig[idx]
            m -= 1
            elig[idx] = elig[m]
            know[v, x] = True
            cnt += 1
            quota -= 1
            step += 1
            if record:
                flat[cursor] = x
            cursor += 1
            executed[v] += 1
            if leveled:
                lev = task_level[x]
                unknown[lev] -= 1
                if unknown[lev] == 0 and lev + 1 < nlev:
                    for j in range(level_ptr[lev + 1], level_ptr[lev + 2]):
                        y = level_tasks[j]
                        if not know[v, y]:
                            elig[m] = y
                            m += 1
            else:
                for j in range(tsucc_ptr[x], tsucc_ptr[x + 1]):
                    y = tsucc_idx[j]
                    need[y] -= 1
                    if need[y] == 0 and not know[v, y]:
                        elig[m] = y
                        m += 1
        if status != 0:
            break
    return executed, known_in, flat[:cursor], status


# numba backend ----------------------------------------------------------


def _priority_trial(n, t, h, pred_ptr, pred_idx, level_ptr, level_tasks, policy,
                    stream, record, capacity):
    know = np.zeros((n, t), dtype=np.bool_)
    executed = np.zeros(n, dtype=np.int64)
    known_in = np.zeros(n, dtype=np.int64)
    flat = np.zeros(capacity if record else 0, dtype=np.int64)
    nlev = level_ptr.shape[0] - 1
    pool = np.zeros(t, dtype=np.int64)
    keys = np.zeros(t, dtype=np.uint64)
    cursor = 0
    golden = np.uint64(0x9E3779B97F4A7C15)
    m1 = np.uint64(0xBF58476D1CE4E5B9)
    m2 = np.uint64(0x94D049BB133111EB)
    for v in range(n):
        row = know[v]
        for k in range(pred_ptr[v], pred_ptr[v + 1]):
            u = pred_idx[k]
            for x in range(t):
                if know[u, x]:
                    row[x] = True
        cnt = 0
        for x in range(t):
            if row[x]:
                cnt += 1
        known_in[v] = cnt
        quota = h[v]
        base = np.uint64(v) * np.uint64(t) + np.uint64(1)
        for lev in range(nlev):
            if quota == 0:
                break
            m = 0
            for j in range(level_ptr[lev], level_ptr[lev + 1]):
                x = level_tasks[j]
                if not row[x]:
                    pool[m] = x
                    m += 1
            if m == 0:
                continue
            take = min(m, quota)
            if policy == 2:
                for i in range(take):
                    x = pool[i]
                    row[x] = True
                    if record:
                        flat[cursor + i] = x
            elif take == m and not record:
                for i in range(m):
                    row[pool[i]] = True
            else:
                for i in range(m):
                    z = stream + golden * (base + np.uint64(pool[i]))
                    z = (z ^ (z >> np.uint64(30))) * m1
                    z = (z ^ (z >> np.uint64(27))) * m2
                    keys[i] = z ^ (z >> np.uint64(31))
                n_pick = m
                if take < m:
                    kth = np.partition(keys[:m], take - 1)[take - 1]
                    below = 0
                    for i in range(m):
                        if keys[i] < kth:
                            below += 1
                    spare = take - below
                    n_pick = 0
                    for i in range(m):
                        if keys[i] < kth or (keys[i] == kth and spare > 0):
                            if keys[i] == kth:
                                spare -= 1
                            pool[n_pick] = pool[i]
                            keys[n_pick] = keys[i]
                            n_pick += 1
                if record:
                    order = np.argsort(keys[:n_pick], kind="mergesort")
                    for i in range(n_pick):
                        x = pool[order[i]]
                        row[x] = True
                        flat[cursor + i] = x
                else:
                    for i in range(n_pick):
                        row[pool[i]] = True
            cursor += take
            quota -= take
            executed[v] += take
            if take < m:
                break
    return executed, known_in, flat[:cursor], 0


_jit_cache: dict[str, object] = {}


def _jitted(name):
    fn = _jit_cache.get(name)
    if fn is None:
        py = {"priority": _priority_trial, "stepwise": _stepwise_trial}[name]
        fn = numba.njit(cache=True, nogil=True)(py)
        _jit_cache[name] = fn
    return fn


# dispatch ---------------------------------------------------------------


def run_trial(a: TrialArrays, policy: int, seed: int, record: bool = False, backend: str | None = None):
    """Execute one trial.

    Returns ``(executed, known_in, flat, status)``: per-vertex execution
    counts and entry-knowledge sizes (topological positions), the executed
    task ids concatenated in vertex order (empty unless ``record``), and a
    status code.
    """
    backend = backend or default_backend()
    if backend not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {backend!r}")
    if backend == "numba" and numba is None:
        raise RuntimeError("numba backend requested but numba is not importable")
    prio, step = trial_streams(seed)
    if policy == POLICY_RS:
        fn = _jitted("stepwise") if backend == "numba" else _stepwise_trial
        with np.errstate(over="ignore"):
            return fn(a.n, a.t, a.h, a.pred_ptr, a.pred_idx, a.level_ptr, a.level_tasks,
                      a.task_level, a.leveled, a.tsucc_ptr, a.tsucc_idx, a.npred, step,
                      record, a.capacity)
    if backend == "numba":
        return _jitted("priority")(a.n, a.t, a.h, a.pred_ptr, a.pred_idx, a.level_ptr,
                                   a.level_tasks, policy, prio, record, a.capacity)
    with np.errstate(over="ignore"):
        return _priority_trial_numpy(a, policy, seed, record)
