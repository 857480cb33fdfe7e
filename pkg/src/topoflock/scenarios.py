"""The three one-dimensional counterexamples and the return map of the first.

Agents labelled -3..3 are stored at indices 0..6 in label order, so the
central agent 0 sits at index 3.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import AgentEnsemble, WeightFunction

LABELS = (-3, -2, -1, 0, 1, 2, 3)
CENTER = 3


def storage_index(label: int) -> int:
    return label + 3


def scenario_example1(c: float) -> tuple[AgentEnsemble, WeightFunction]:
    """Central agent launched at speed c between two rigid triplets.

    Every agent follows only its second-closest neighbour, so agent 0 is pulled
    towards whichever triplet lies on the far side of the origin.
    """
    if c <= 0:
        raise ValueError("launch speed c must be positive")
    if c - math.log1p(c) >= 1.0:
        warnings.warn(f"c = {c}: turning point {c - math.log1p(c):.3g} leaves the strip (-1, 1)",
                      stacklevel=2)
    x = [-10.0, -9.0, -6.0, 0.0, 6.0, 9.0, 10.0]
    v = [-1.0, -1.0, -1.0, c, 1.0, 1.0, 1.0]
    table = [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]
    return AgentEnsemble(x, v), WeightFunction.discrete(table)


def scenario_example2(scaling: str = "n") -> tuple[AgentEnsemble, WeightFunction]:
    """Each agent aligns with its two closest neighbours.

    With the default ``scaling="n"`` the rates are 1 on both neighbours and
    rows are divided by N = 7, so every agent relaxes towards the neighbour
    mean at rate 2/7. This reproduces the documented loss of strong
    connectivity near t = 10. With ``scaling="gamma"`` (rates 1/2, rows
    summing to 1) the relaxation is fast enough that the configuration stays
    strongly connected and all velocities reach consensus.
    """
    x = [-6.0, -3.0, -1.0, 0.0, 1.0, 3.0, 6.0]
    v = [-1.0, -1.0, -1.0, 0.0, 1.0, 1.0, 1.0]
    if scaling == "n":
        table = [0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]
    else:
        table = [0.0, 0.5, 0.5, 0.0, 0.0, 0.0, 0.0]
    return AgentEnsemble(x, v), WeightFunction.discrete(table, scaling=scaling)


def scenario_example3(n: int, rng: np.random.Generator | None = None
                      ) -> tuple[AgentEnsemble, WeightFunction]:
    """N-1 agents in [-1, 1] and one at distance 5; the farthest rank has weight 0.

    Positions of the inner agents are evenly spaced unless ``rng`` is given.
    Velocities are zero.
    """
    if n < 3:
        raise ValueError("example 3 needs N >= 3")
    if rng is None:
        inner = np.linspace(-1.0, 1.0, n - 1)
    else:
        inner = rng.uniform(-1.0, 1.0, n - 1)
    x = np.append(inner, 5.0)
    table = np.ones(n)
    table[0] = 0.0
    table[n - 1] = 0.0
    return AgentEnsemble(x, np.zeros(n)), WeightFunction.discrete(table)


def analytic_example1(t, c: float):
    """Closed-form (x_0, v_0) of the central agent during its first excursion."""
    t = np.asarray(t, dtype=float)
    em1 = np.expm1(-t)
    return -(c + 1.0) * em1 - t, (c + 1.0) * em1 + c


def _expm1_plus_t(tau: float) -> float:
    """exp(-tau) - 1 + tau without cancellation for small tau."""
    if tau < 0.5:
        total, term, k = 0.0, 1.0, 0
        while True:
            k += 1
            term *= -tau / k
            if k >= 2:
                total += term
                if abs(term) <= 1e-18 * abs(total):
                    return total
    return math.expm1(-tau) + tau


def _return_residual(tau: float, c: float) -> float:
    # x_0(tau) = (c+1)(1 - e^-tau) - tau, split so both parts stay accurate as c -> 0
    return -c * math.expm1(-tau) - _expm1_plus_t(tau)


def return_time(c: float, tol: float = 1e-12) -> float:
    """First positive root of (c+1)(1 - exp(-tau)) = tau, bisected on [c, 2c]."""
    if c <= 0:
        raise ValueError("c must be positive")
    lo, hi = c, 2.0 * c
    f_lo, f_hi = _return_residual(lo, c), _return_residual(hi, c)
    if not (f_lo > 0 > f_hi):
        raise ArithmeticError(f"root of the return equation not bracketed by [{lo}, {hi}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if not lo < mid < hi:
            break
        if _return_residual(mid, c) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def return_speed(c: float) -> float:
    """Speed of the central agent when it comes back to the origin."""
    return return_time(c) - c


@dataclass(frozen=True)
class ReturnMapRecord:
    c: float
    tau: float
    s: float
    t_turn: float
    x_turn: float

    @classmethod
    def at(cls, c: float) -> "ReturnMapRecord":
        tau = return_time(c)
        return cls(c, tau, tau - c, math.log1p(c), c - math.log1p(c))


def return_map_iterate(c0: float, k_max: int) -> tuple[list[ReturnMapRecord], np.ndarray]:
    """Successive excursions c -> s(c) and the running sums of their durations.

    Stops early once the speed underflows below 1e-300.
    """
    if c0 <= 0 or k_max < 1:
        raise ValueError("need c0 > 0 and k_max >= 1")
    records = []
    c = c0
    for _ in range(k_max):
        if c < 1e-300:
            break
        rec = ReturnMapRecord.at(c)
        records.append(rec)
        c = rec.s
    return records, np.cumsum([r.tau for r in records])
