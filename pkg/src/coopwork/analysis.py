"""Closed-form competitive-ratio bounds and their empirical counterparts.

The bounds are asymptotic statements; at finite scale they are evaluated
with an explicit constant ``c`` standing in for ``1 / (1/e + o(1))``. Two
readings of that constant circulate, ``e`` (the limit) and ``1/(1/e + 1)``,
and both are exported so results can be reported under either.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .compdag import CompDag, computation_width
from .errors import InvalidArgument, ResourceLimitError
from .patterns import gen_two_level_lb, merge_vertices
from .scheduling import SearchLimits, as_policy, opt_exact, opt_lower_bound
from .simulator import monte_carlo
from .taskgraph import TaskGraph, build_leveled

C_LIMIT = math.e
C_ALT = 1.0 / (1.0 / math.e + 1.0)


def _check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha <= 1.0:
        raise InvalidArgument(f"alpha must lie in (0, 1], got {alpha}")
    return alpha


def _check_fractions(fractions) -> list[float]:
    fr = [float(f) for f in fractions]
    if not fr:
        raise InvalidArgument("at least one level fraction is required")
    if any(not 0.0 < f <= 1.0 for f in fr):
        raise InvalidArgument(f"fractions must lie in (0, 1], got {fr}")
    if not math.isclose(sum(fr), 1.0, rel_tol=1e-9, abs_tol=1e-12):
        raise InvalidArgument(f"fractions must sum to 1, got {sum(fr)}")
    return fr


def _check_cw(cw):
    if cw < 0:
        raise InvalidArgument(f"cw must be non-negative, got {cw}")


def _pow(c: float, x: float) -> float:
    # the a-sequence is a tower of exponentials; overflow just means the term vanishes later
    try:
        return c ** x
    except OverflowError:
        return math.inf


def a_sequence(fractions: Sequence, c: float) -> list[float]:
    """a_1 = 1, a_{i+1} = (alpha_i / alpha_1) * c**a_i + a_i; entries may be inf."""
    fr = _check_fractions(fractions)
    a = [1.0]
    for i in range(len(fr) - 1):
        a.append(fr[i] / fr[0] * _pow(c, a[i]) + a[i])
    return a


def bound_two_level(cw, alpha, c: float = C_LIMIT) -> float:
    """Upper bound on the competitive ratio of m-RS for two-level task graphs."""
    _check_cw(cw)
    alpha = _check_alpha(alpha)
    if c <= 0:
        raise InvalidArgument("c must be positive")
    return 1.0 + cw * ((1.0 - alpha) + alpha * math.exp(-((1.0 - alpha) / alpha * c + 1.0)))


def bound_k_level(cw, fractions: Sequence, c: float = C_LIMIT) -> float:
    _check_cw(cw)
    if c <= 0:
        raise InvalidArgument("c must be positive")
    fr = _check_fractions(fractions)
    a = a_sequence(fr, c)
    a_k = a[-1]
    expo = fr[-1] / fr[0] * _pow(c, a_k) + a_k
    return 1.0 + cw * ((1.0 - fr[0]) + fr[0] * math.exp(-expo))


def lower_bound_two_level(cw, alpha) -> float:
    return bound_two_level(cw, alpha, c=math.e)


def lower_bound_k_level(cw, fractions: Sequence) -> float:
    """k-level lower bound with every (1 - o(1)) factor set to 1, hence optimistic."""
    return bound_k_level(cw, fractions, c=math.e)


def bound_report(cw, fractions: Sequence, c: float = C_LIMIT) -> dict:
    """Evaluate every applicable bound on the same inputs, side by side.

    The k-level formula at ``k = 1`` does not reduce to the two-level formula
    at ``alpha = 1``, and at ``k = 2`` the two disagree in general; both
    values and their difference are always included.
    """
    fr = _check_fractions(fractions)
    out = {
        "cw": cw,
        "fractions": fr,
        "c": c,
        "a": a_sequence(fr, c),
        "k_level": bound_k_level(cw, fr, c),
        "k_level_lower": lower_bound_k_level(cw, fr),
    }
    if len(fr) <= 2:
        two = bound_two_level(cw, fr[0], c)
        out["two_level"] = two
        out["two_level_lower"] = lower_bound_two_level(cw, fr[0])
        out["k_minus_two"] = out["k_level"] - two
    return out


def theoretical_bound(cw, g: TaskGraph, c: float = C_LIMIT) -> float | None:
    """Upper bound matching the task graph, or None when the graph is not fully leveled."""
    if not g.is_complete_leveled():
        return None
    fr = g.level_fractions
    if len(fr) <= 2:
        return bound_two_level(cw, fr[0], c)
    return bound_k_level(cw, fr, c)


# empirical ratios -------------------------------------------------------


@dataclass
class RatioRecord:
    pattern: str
    policy: str
    trials: int
    seed: int
    mean_work: float
    stderr: float
    denominator: float
    denominator_kind: str
    ratio: float
    cw: int
    bound: float | None
    c: float

    def to_dict(self) -> dict:
        return asdict(self)


def empirical_ratio(c: CompDag, g: TaskGraph, policy, trials: int, seed: int,
                    pattern_id: str = "pattern", limits: SearchLimits = SearchLimits(),
                    const: float = C_LIMIT, backend: str | None = None) -> RatioRecord:
    """Mean simulated work over OPT (exact when the search fits, else the lower bound)."""
    policy = as_policy(policy)
    summary = monte_carlo(c, g, policy, trials, seed, backend=backend)
    try:
        denom, kind = opt_exact(c, g, limits), "exact_opt"
    except ResourceLimitError:
        denom, kind = opt_lower_bound(c, g).lower_bound, "lower_bound"
    cw = computation_width(c)
    return RatioRecord(
        pattern=pattern_id,
        policy=policy.kind,
        trials=trials,
        seed=int(seed),
        mean_work=summary.mean,
        stderr=summary.stderr,
        denominator=float(denom),
        denominator_kind=kind,
        ratio=summary.mean / denom,
        cw=cw,
        bound=theoretical_bound(cw, g, const),
        c=const,
    )


@dataclass
class ConcentrationReport:
    w: int
    t: int
    alpha: float
    trials: int
    seed: int
    left: np.ndarray  # level-1 tasks still unknown at the first merge, per trial
    expected: float
    band: float

    @property
    def mean(self) -> float:
        return float(self.left.mean())

    @property
    def mean_fraction(self) -> float:
        return self.mean / (self.alpha * self.t)

    @property
    def deviation(self) -> float:
        return self.mean - self.expected

    @property
    def outside_band(self) -> float:
        return float(np.mean(np.abs(self.left - self.mean) >= self.band))

    @property
    def c_hat(self) -> float:
        """Plug-in finite-scale constant 1 / mean(T / (alpha t))."""
        return 1.0 / self.mean_fraction if self.mean_fraction > 0 else math.inf

    def summary(self) -> dict:
        return {
            "w": self.w, "t": self.t, "alpha": self.alpha, "trials": self.trials,
            "seed": self.seed, "mean_left": self.mean, "mean_fraction": self.mean_fraction,
            "expected_left": self.expected, "deviation": self.deviation, "band": self.band,
            "outside_band": self.outside_band, "c_hat": self.c_hat,
        }


def concentration_check(w: int, t: int, alpha, trials: int, seed: int,
                        backend: str | None = None) -> ConcentrationReport:
    """Tasks of the first level left undone at the first merge of the two-level pattern."""
    if w < 2:
        raise InvalidArgument("w must be at least 2; a single processor has no redundancy")
    if trials < 100:
        raise InvalidArgument("at least 100 trials are required")
    alpha_q = Fraction(alpha).limit_denominator(10**9) if isinstance(alpha, float) else Fraction(alpha)
    pattern = gen_two_level_lb(w, t, alpha_q)
    n1 = int(alpha_q * t)
    levels = [n1] if n1 == t else [n1, t - n1]
    summary = monte_carlo(pattern, build_leveled(levels), "mrs", trials, seed, backend=backend)
    first_merge = merge_vertices(pattern)[0]
    known = summary.known_in[:, summary.column(first_merge)]
    a = float(alpha_q)
    return ConcentrationReport(
        w=w, t=t, alpha=a, trials=trials, seed=int(seed),
        left=(n1 - known).astype(np.int64),
        expected=a * t * (1.0 - 1.0 / w) ** w,
        band=4.0 * math.log(t) * math.sqrt(a * t),
    )
