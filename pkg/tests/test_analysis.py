import math

import pytest

from coopwork.analysis import (
    C_ALT,
    C_LIMIT,
    a_sequence,
    bound_k_level,
    bound_report,
    bound_two_level,
    concentration_check,
    empirical_ratio,
    lower_bound_k_level,
    lower_bound_two_level,
    theoretical_bound,
)
from coopwork.errors import InvalidArgument
from coopwork.patterns import gen_isolated, gen_single_group, gen_two_level_lb
from coopwork.taskgraph import build_leveled, label_dag

from oracles import expected_left_two_level


def test_constants():
    assert C_LIMIT == math.e
    assert C_ALT == pytest.approx(1 / (1 / math.e + 1))


def test_independent_tasks_collapse():
    for cw in (1, 2, 10, 100):
        assert bound_two_level(cw, 1) == pytest.approx(1 + cw / math.e)
    assert bound_two_level(2, 1) == pytest.approx(1.7358, abs=1e-4)


def test_small_alpha_approaches_cw():
    assert bound_two_level(5, 1e-6) == pytest.approx(6, rel=1e-4)


def test_half_split_value():
    assert bound_two_level(1, 0.5) == pytest.approx(1.5 + 0.5 * math.exp(-(math.e + 1)))
    assert bound_two_level(1, 0.5) == pytest.approx(1.5122, abs=1e-4)


def test_bound_monotone_in_cw():
    for alpha in (0.1, 0.5, 0.9, 1.0):
        vals = [bound_two_level(cw, alpha) for cw in range(0, 20)]
        assert vals == sorted(vals)
        assert vals[0] == 1


def test_lower_not_above_upper():
    for cw in (1, 3, 10):
        for i in range(1, 21):
            alpha = i / 20
            for c in (C_LIMIT, C_ALT, 1.0, 2.0):
                assert lower_bound_two_level(cw, alpha) <= bound_two_level(cw, alpha, c) + 1e-12


def test_bound_argument_checks():
    with pytest.raises(InvalidArgument):
        bound_two_level(1, 0)
    with pytest.raises(InvalidArgument):
        bound_two_level(1, 1.5)
    with pytest.raises(InvalidArgument):
        bound_two_level(-1, 0.5)
    with pytest.raises(InvalidArgument):
        bound_k_level(1, [0.5, 0.4])


def test_a_sequence():
    c = math.e
    a = a_sequence([0.5, 0.25, 0.25], c)
    assert a[0] == 1
    assert a[1] == pytest.approx(c + 1)
    assert a[2] == pytest.approx(0.5 * c ** a[1] + a[1])


def test_k_level_values():
    fr = [0.5, 0.5]
    a = a_sequence(fr, math.e)
    expect = 1 + 3 * (0.5 + 0.5 * math.exp(-(math.e ** a[1] + a[1])))
    assert bound_k_level(3, fr) == pytest.approx(expect)
    assert lower_bound_k_level(3, fr) == pytest.approx(expect)
    # more levels only shrink the exponential term further
    assert bound_k_level(3, [0.25] * 4) < 1 + 3 * 0.75 + 1e-9


def test_bound_report_shows_both_formulas():
    rep = bound_report(4, [1])
    # at k = 1 the k-level formula keeps an e**-(c+1) term the two-level one does not
    assert rep["k_level"] == pytest.approx(1 + 4 * math.exp(-(math.e + 1)))
    assert rep["two_level"] == pytest.approx(1 + 4 / math.e)
    assert rep["k_minus_two"] == pytest.approx(rep["k_level"] - rep["two_level"])
    rep = bound_report(4, [0.25] * 4)
    assert "two_level" not in rep and len(rep["a"]) == 4


def test_theoretical_bound_dispatch():
    assert theoretical_bound(3, build_leveled([10])) == pytest.approx(bound_two_level(3, 1))
    assert theoretical_bound(3, build_leveled([5, 5])) == pytest.approx(bound_two_level(3, 0.5))
    assert theoretical_bound(3, build_leveled([2, 2, 4])) == pytest.approx(
        bound_k_level(3, [0.25, 0.25, 0.5]))
    assert theoretical_bound(3, label_dag(3, [(0, 1)])) is None


def test_ratio_single_group():
    r = empirical_ratio(gen_single_group(4, 20), build_leveled([20]), "mrs", 50, 0)
    assert r.ratio == 1.0 and r.denominator == 20


def test_ratio_isolated_exact_and_fallback():
    r = empirical_ratio(gen_isolated(2, 3), build_leveled([3]), "mrs", 20, 0)
    assert r.denominator_kind == "exact_opt" and r.ratio == 1.0
    r = empirical_ratio(gen_isolated(6, 10), build_leveled([10]), "mrs", 20, 0)
    assert r.denominator_kind == "lower_bound" and r.ratio == 1.0 and r.denominator == 60


def test_ratio_merge_pair():
    from test_scheduling import merge_pair

    r = empirical_ratio(merge_pair(), build_leveled([2]), "mrs", 20_000, 1)
    assert r.denominator == 2
    assert abs(r.mean_work - 2.5) <= 4 * r.stderr
    assert r.ratio == pytest.approx(1.25, abs=0.02)
    assert r.to_dict()["policy"] == "modified_rs"


def test_ratio_two_level_small():
    r = empirical_ratio(gen_two_level_lb(4, 40, 1), build_leveled([40]), "mrs", 300, 3)
    assert r.denominator == 40 and r.cw == 4
    assert r.bound == pytest.approx(1 + 4 / math.e)


def test_concentration_small():
    rep = concentration_check(10, 200, 1, 300, 5)
    assert rep.expected == pytest.approx(expected_left_two_level(200, 10))
    assert abs(rep.mean - rep.expected) < 3
    assert rep.outside_band <= 0.01
    s = rep.summary()
    assert s["c_hat"] == pytest.approx(1 / s["mean_fraction"])


def test_concentration_argument_checks():
    with pytest.raises(InvalidArgument):
        concentration_check(1, 100, 1, 200, 0)
    with pytest.raises(InvalidArgument):
        concentration_check(4, 100, 1, 10, 0)
