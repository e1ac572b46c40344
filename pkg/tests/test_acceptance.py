"""End-to-end acceptance checks, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with its measured values and
wall time. Run just this module with ``pytest tests/test_acceptance.py -v``.
"""
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from coopwork.analysis import (
    bound_two_level,
    concentration_check,
    empirical_ratio,
    lower_bound_two_level,
)
from coopwork.compdag import (
    CompDag,
    classify_saturation,
    computation_width,
    figure1_pattern,
    maximal_path_weights,
    normalize_split,
    poset_width,
    successor_graph,
    validate,
)
from coopwork.patterns import PatternSpec, gen_isolated, gen_random, gen_single_group, gen_two_level_lb
from coopwork.scheduling import expected_work_exact, opt_exact
from coopwork.simulator import monte_carlo, run
from coopwork.taskgraph import build_leveled

from oracles import dag_as_indices, max_antichain_size, random_dag


@pytest.fixture
def report(capsys, request):
    start = time.perf_counter()
    state = {}

    def emit(ok, detail, limit):
        elapsed = time.perf_counter() - start
        ok = ok and elapsed < limit
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] {request.node.name}: {detail} "
                  f"({elapsed:.2f}s, limit {limit:g}s)")
        state["ok"] = ok
        assert ok, detail

    return emit


def _random_patterns(count, seed, **bounds):
    """Valid random patterns with total quota and task count within the given limits."""
    rng = np.random.default_rng(seed)
    max_work, max_t = bounds.get("max_work", 10**9), bounds.get("max_t", 6)
    out, s = [], 0
    while len(out) < count:
        s += 1
        t = int(rng.integers(1, max_t + 1))
        spec = PatternSpec("random", p=int(rng.integers(1, 5)), t=t,
                           depth=int(rng.integers(1, 5)), max_quota=int(rng.integers(0, t + 1)),
                           merge_prob=float(rng.uniform(0.2, 0.8)))
        c = gen_random(spec, seed * 100_003 + s)
        if c.total_work() > max_work:
            continue
        cut = int(rng.integers(0, t))
        out.append((c, build_leveled([cut, t - cut] if cut else [t])))
    return out


def _random_merges(count, seed, max_work=12, max_t=4):
    """Random fan-in patterns: w groups work alone, then all merge into one group.

    Unlike the layered generator these almost always leave the merged group
    with a random amount of work, so they exercise the exact expectation.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        t = int(rng.integers(2, max_t + 1))
        w = int(rng.integers(2, 4))
        hs = [int(x) for x in rng.integers(1, t, size=w)]
        tail = t - min(hs)
        if sum(hs) + tail > max_work:
            continue
        vs = [(i, h, [i + 1]) for i, h in enumerate(hs)] + [(w, tail, list(range(1, w + 1)))]
        c = CompDag.build(w, t, vs, [(i, w, [i + 1]) for i in range(w)])
        cut = int(rng.integers(0, t))
        out.append((c, build_leveled([cut, t - cut] if cut else [t])))
    return out


def test_c01_connected_baseline(report):
    c, g = gen_single_group(8, 100), build_leveled([100])
    works = {run(c, g, "mrs", s).total_work for s in range(50)}
    report(works == {100}, f"work over 50 seeds = {sorted(works)}", 1)


def test_c02_disconnected_baseline(report):
    c, g = gen_isolated(5, 100), build_leveled([100])
    works = {run(c, g, pol, s).total_work for pol in ("mrs", "rs", "det") for s in range(10)}
    report(works == {500}, f"work over all policies = {sorted(works)}", 1)


def test_c03_width_oracle(report):
    rng = np.random.default_rng(2024)
    agree = 0
    for _ in range(500):
        n = int(rng.integers(1, 13))
        edges = random_dag(rng, n, float(rng.uniform(0, 0.5)))
        c = CompDag.build(1, 1, [(i, 0, [1]) for i in range(n)], [(u, v, [1]) for u, v in edges])
        agree += poset_width(c) == max_antichain_size(n, edges)
    report(agree == 500, f"{agree}/500 agree", 30)


def test_c04_figure1(report):
    c = figure1_pattern()
    ok = validate(c).ok
    cw = computation_width(c)
    brute = max(max_antichain_size(*dag_as_indices(successor_graph(c, v))) for v in c.ids)
    report(ok and cw == 3 and brute == 3, f"valid={ok} cw={cw} brute={brute}", 1)


def test_c05_concentration(report):
    rep = concentration_check(100, 10**4, 1, 200, 5)
    target = (1 - 1 / 100) ** 100
    ok = abs(rep.mean_fraction - target) <= 0.01 and rep.outside_band <= 0.01
    report(ok, f"mean fraction {rep.mean_fraction:.4f} (target {target:.4f}), "
               f"outside band {rep.outside_band:.3f}", 120)


def test_c06_independent_ratio(report):
    c, g = gen_two_level_lb(10, 10**4, 1), build_leveled([10**4])
    r = empirical_ratio(c, g, "mrs", 500, 6)
    target = 1 + 10 / math.e
    ok = r.denominator == 10**4 and abs(r.ratio - target) <= 0.05 * target
    report(ok, f"ratio {r.ratio:.4f}, target {target:.4f} +/-5%", 180)


def test_c07_dependent_envelope(report):
    c, g = gen_two_level_lb(10, 10**4, "1/2"), build_leveled([5000, 5000])
    r = empirical_ratio(c, g, "mrs", 500, 7)
    lo = lower_bound_two_level(10, 0.5) * 0.9
    hi = bound_two_level(10, 0.5, c=math.e) * 1.05
    report(lo <= r.ratio <= hi, f"ratio {r.ratio:.4f} in [{lo:.4f}, {hi:.4f}]", 180)


def test_c08_exact_expectation(report):
    cases = _random_patterns(50, 8, max_work=12, max_t=4) + _random_merges(50, 8)
    worst, bad_mc, bad_opt, random_work = 0.0, 0, 0, 0
    for k, (c, g) in enumerate(cases):
        ew = expected_work_exact(c, g, "mrs")
        opt = opt_exact(c, g)
        bad_opt += ew < opt
        s = monte_carlo(c, g, "mrs", 10**4, 1000 + k)
        if s.stderr == 0:
            bad_mc += s.mean != ew
        else:
            random_work += 1
            z = abs(s.mean - float(ew)) / s.stderr
            worst = max(worst, z)
            bad_mc += z > 4
    report(bad_mc == 0 and bad_opt == 0,
           f"MC misses {bad_mc}/100 (max |z| {worst:.2f} over {random_work} with random work), "
           f"E < OPT on {bad_opt}", 300)


def test_c09_saturated_identity(report):
    bad = 0
    for k, (c, g) in enumerate(_random_patterns(200, 9)):
        assert validate(c).ok
        rep = classify_saturation(c)
        r = run(c, g, "mrs", k)
        bad += sum(len(r.traces[v].executed) != c.vertex(v).h for v in rep.saturated)
    report(bad == 0, f"{bad} saturated vertices off quota", 60)


def test_c10_normalization(report):
    bad = 0
    for c, _ in _random_patterns(200, 10):
        out = normalize_split(c)
        bad += not (
            out.total_work() == c.total_work()
            and validate(out).ok
            and sorted(maximal_path_weights(out)) == sorted(maximal_path_weights(c))
            and normalize_split(out) is out
        )
    report(bad == 0, f"{bad}/200 patterns broke an invariant", 60)


def test_c11_cli_determinism(report, tmp_path):
    pat, tasks = tmp_path / "p.json", tmp_path / "g.json"
    cli = [sys.executable, "-m", "coopwork.cli"]
    subprocess.run(cli + ["gen", "--kind", "two-level", "--w", "5", "--t", "200", "--alpha", "1/2",
                          "--out", str(pat), "--tasks-out", str(tasks)], check=True, capture_output=True)
    outs = []
    for i in range(2):
        out = tmp_path / f"run{i}.csv"
        subprocess.run(cli + ["simulate", "--pattern", str(pat), "--tasks", str(tasks),
                              "--trials", "300", "--seed", "42", "--out", str(out)],
                       check=True, capture_output=True)
        outs.append(out.read_bytes())
    report(outs[0] == outs[1] and len(outs[0]) > 0, f"{len(outs[0])} bytes, identical={outs[0] == outs[1]}", 60)
