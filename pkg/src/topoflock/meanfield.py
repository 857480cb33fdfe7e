"""Smoothed continuum separation, the kinetic alignment field and W1.

The sharp indicator in the continuum separation is replaced by the ramp
``psi_eps(s) = clip(s / eps, 0, 1)``. It vanishes for ``s <= 0``, so as
``eps -> 0`` the smoothed separation of an empirical measure tends to the
strict mass count of closer particles, i.e. to ``rank / N`` for uniform
masses and distinct distances.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import linear_sum_assignment

from .core import NORMALIZED, WeightFunction, distances_from, pairwise_distances
from .dynamics import SimulationError, Trajectory, _n_steps, _Recorder


def _as_2d(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a[:, None] if a.ndim == 1 else a


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Point masses at (positions[k], velocities[k]) with weights masses[k]."""

    positions: np.ndarray
    velocities: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        x, v = _as_2d(self.positions), _as_2d(self.velocities)
        m = np.asarray(self.masses, dtype=float).ravel()
        if x.shape != v.shape or x.ndim != 2 or len(m) != len(x) or len(m) == 0:
            raise ValueError("positions, velocities and masses must describe the same particles")
        if np.any(m <= 0):
            raise ValueError("masses must be positive")
        if abs(m.sum() - 1.0) > 1e-12:
            raise ValueError(f"total mass {m.sum()!r} is not 1")
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "velocities", v)
        object.__setattr__(self, "masses", m)

    @classmethod
    def uniform(cls, positions, velocities) -> "EmpiricalMeasure":
        x = _as_2d(positions)
        return cls(x, velocities, np.full(len(x), 1.0 / len(x)))

    @property
    def n_points(self) -> int:
        return len(self.masses)

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def refine(self, k: int) -> "EmpiricalMeasure":
        """The same measure with every atom split into ``k`` equal copies."""
        return EmpiricalMeasure(np.repeat(self.positions, k, axis=0),
                                np.repeat(self.velocities, k, axis=0),
                                np.repeat(self.masses / k, k))


@dataclass(frozen=True)
class Mollifier:
    """Ramp ``psi(s) = clip(s/eps, 0, 1)``; ``eps = 0`` is the sharp strict indicator."""

    epsilon: float

    def __post_init__(self):
        if not (self.epsilon >= 0 and np.isfinite(self.epsilon)):
            raise ValueError("epsilon must be finite and nonnegative")

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        if self.epsilon == 0:
            return (s > 0).astype(float)
        with np.errstate(over="ignore"):  # tiny eps: s/eps = +-inf clips correctly
            return np.clip(s / self.epsilon, 0.0, 1.0)

    @property
    def lipschitz(self) -> float:
        return np.inf if self.epsilon == 0 else 1.0 / self.epsilon

    @classmethod
    def for_positions(cls, positions, fraction: float = 0.05) -> "Mollifier":
        """Width ``fraction`` times the spatial diameter of the cloud."""
        x = _as_2d(positions)
        return cls(fraction * float(pairwise_distances(x).max()) if len(x) > 1 else 0.0)


def _separation_rows(dist: np.ndarray, masses: np.ndarray, eps: float) -> np.ndarray:
    """S[i, j] = sum_k m_k psi(dist[i, j] - dist[i, k]) for every row i.

    Rows are sorted once and psi is integrated with prefix sums of m and m*d.
    """
    n, m = dist.shape
    order = np.argsort(dist, axis=1, kind="stable")
    d_sorted = np.take_along_axis(dist, order, axis=1)
    zero = np.zeros((n, 1))
    mcum = np.hstack([zero, np.cumsum(masses[order], axis=1)])

    # hi = #{k : d_k < d_j}: first position of each run of equal sorted values
    pos = np.broadcast_to(np.arange(m), (n, m))
    starts = np.ones((n, m), dtype=bool)
    starts[:, 1:] = d_sorted[:, 1:] != d_sorted[:, :-1]
    first = np.maximum.accumulate(np.where(starts, pos, 0), axis=1)
    hi = np.empty((n, m), dtype=np.int64)
    np.put_along_axis(hi, order, first, axis=1)

    def take(a, idx):
        return np.take_along_axis(a, idx, axis=1)

    if eps == 0:
        return take(mcum, hi)
    # lo = #{k : d_k <= d_j - eps}, by one flat search over offset rows; psi
    # equals 1 on both sides of this cut, so rounding at it is harmless
    shift = (np.arange(n) * (2.0 * (d_sorted[:, -1].max() + eps) + 1.0))[:, None]
    flat = (d_sorted + shift).ravel()
    lo_sorted = np.searchsorted(flat, (d_sorted - eps + shift).ravel(), side="right")
    lo_sorted = np.clip(lo_sorted.reshape(n, m) - (np.arange(n) * m)[:, None], 0, m)
    lo = np.empty((n, m), dtype=np.int64)
    np.put_along_axis(lo, order, lo_sorted, axis=1)
    lo = np.minimum(lo, hi)
    mdcum = np.hstack([zero, np.cumsum(masses[order] * d_sorted, axis=1)])
    ramp = dist * (take(mcum, hi) - take(mcum, lo)) - (take(mdcum, hi) - take(mdcum, lo))
    return np.clip(take(mcum, lo) + ramp / eps, 0.0, 1.0)


def smoothed_separation(measure: EmpiricalMeasure, mollifier: Mollifier, x, y) -> float:
    """sum_k m_k psi(|y - x| - |z_k - x|)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    y = np.atleast_1d(np.asarray(y, dtype=float))
    dz = distances_from(x, measure.positions)
    return float(measure.masses @ mollifier(distances_from(x, y[None, :])[0] - dz))


def separations_from(measure: EmpiricalMeasure, mollifier: Mollifier, x) -> np.ndarray:
    """Smoothed separation of every atom position y_k as seen from ``x``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    dz = distances_from(x, measure.positions)
    return _separation_rows(dz[None, :], measure.masses, mollifier.epsilon)[0]


def _check_weights(weights: WeightFunction):
    if weights.mode != NORMALIZED:
        raise ValueError("the kinetic field needs a topological-normalized weight function")
    if weights.gamma <= 0:
        raise ValueError("gamma must be positive")


def kinetic_field(measure: EmpiricalMeasure, mollifier: Mollifier, weights: WeightFunction,
                  x, v) -> np.ndarray:
    """(1/gamma) sum_k m_k g(alpha(x, y_k)) (w_k - v)."""
    _check_weights(weights)
    v = np.atleast_1d(np.asarray(v, dtype=float))
    coef = measure.masses * weights(separations_from(measure, mollifier, x))
    return coef @ (measure.velocities - v) / weights.gamma


def self_field(positions, velocities, masses, mollifier: Mollifier,
               weights: WeightFunction) -> np.ndarray:
    """kinetic_field of the measure evaluated at each of its own atoms."""
    x, v = _as_2d(positions), _as_2d(velocities)
    m = np.asarray(masses, dtype=float)
    sep = _separation_rows(pairwise_distances(x), m, mollifier.epsilon)
    w = weights(sep) * m[None, :] / weights.gamma
    return w @ v - w.sum(axis=1)[:, None] * v


def simulate_meanfield_particles(n: int, sampler: Callable[[int], tuple], weights: WeightFunction,
                                 mollifier: Mollifier | None = None, dt: float = 1e-2,
                                 t_end: float = 1.0, sample_every: int = 1) -> Trajectory:
    """Self-consistent particle system x' = v, v' = G[f^N](x, v) with uniform masses.

    ``sampler(n)`` returns initial ``(positions, velocities)``. Without a
    mollifier the width is 5% of the initial spatial diameter, then frozen.
    """
    if n < 2:
        raise ValueError("need at least two particles")
    _check_weights(weights)
    x0, v0 = sampler(n)
    x, v = _as_2d(x0).copy(), _as_2d(v0).copy()
    if x.shape != v.shape or len(x) != n:
        raise ValueError("sampler returned arrays of the wrong shape")
    moll = Mollifier.for_positions(x) if mollifier is None else mollifier
    m = np.full(n, 1.0 / n)
    n_steps = _n_steps(dt, t_end)
    rec = _Recorder(x, v, sample_every)

    def f(xx, vv):
        return vv, self_field(xx, vv, m, moll, weights)

    for k in range(1, n_steps + 1):
        t_target = min(k * dt, t_end)
        h = t_target - min((k - 1) * dt, t_end)
        k1x, k1v = f(x, v)
        k2x, k2v = f(x + 0.5 * h * k1x, v + 0.5 * h * k1v)
        k3x, k3v = f(x + 0.5 * h * k2x, v + 0.5 * h * k2v)
        k4x, k4v = f(x + h * k3x, v + h * k3v)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise SimulationError(f"non-finite state at t = {t_target:.6g}")
        rec.maybe(k, n_steps, t_target, x, v)
    return rec.build(None)


def phase_cost(f: EmpiricalMeasure, h: EmpiricalMeasure) -> np.ndarray:
    """|x - y| + |v - w| between every pair of atoms."""
    dx = np.linalg.norm(f.positions[:, None, :] - h.positions[None, :, :], axis=2)
    dv = np.linalg.norm(f.velocities[:, None, :] - h.velocities[None, :, :], axis=2)
    return dx + dv


def wasserstein1(f: EmpiricalMeasure, h: EmpiricalMeasure) -> float:
    """W1 for the sum metric on phase space, between equal-size uniform clouds.

    The optimal plan between two uniform clouds of the same size can be taken
    to be a permutation, so this is an assignment problem.
    """
    if f.n_points != h.n_points:
        raise ValueError("W1 is only supported for clouds with the same number of atoms")
    n = f.n_points
    for mu in (f, h):
        if np.max(np.abs(mu.masses - 1.0 / n)) > 1e-12:
            raise ValueError("W1 is only supported for uniform masses")
    if f.dim != h.dim:
        raise ValueError("dimension mismatch")
    cost = phase_cost(f, h)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / n)


def wasserstein1_sorted(a, b) -> float:
    """W1 between two equal-size uniform samples on the real line."""
    a = np.sort(np.ravel(np.asarray(a, dtype=float)))
    b = np.sort(np.ravel(np.asarray(b, dtype=float)))
    if a.size != b.size or a.size == 0:
        raise ValueError("samples must be nonempty and of equal size")
    return float(np.mean(np.abs(a - b)))


def field_on(measure: EmpiricalMeasure, mollifier: Mollifier, weights: WeightFunction,
             probes_x, probes_v) -> np.ndarray:
    """kinetic_field at each probe point, shape (P, d)."""
    px, pv = _as_2d(probes_x), _as_2d(probes_v)
    return np.array([kinetic_field(measure, mollifier, weights, x, v) for x, v in zip(px, pv)])


def stability_ratio(f: EmpiricalMeasure, h: EmpiricalMeasure, mollifier: Mollifier,
                    weights: WeightFunction, probes_x, probes_v) -> float:
    """max over probes of |G[f] - G[h]| divided by W1(f, h)."""
    w1 = wasserstein1(f, h)
    if w1 == 0:
        return 0.0
    diff = field_on(f, mollifier, weights, probes_x, probes_v) - \
        field_on(h, mollifier, weights, probes_x, probes_v)
    return float(np.linalg.norm(diff, axis=1).max() / w1)


def stability_constant(weights: WeightFunction, mollifier: Mollifier, speed_spread: float) -> float:
    """(2 K |g|_Lip |psi|_Lip + |g|_inf) / gamma, with K a bound on |w - v|.

    Bounds the W1 stability ratio for probes and atoms whose velocities differ
    by at most ``speed_spread``.
    """
    if weights.lipschitz is None or weights.sup is None:
        raise ValueError("weight function needs known Lipschitz and sup constants")
    return (2.0 * speed_spread * weights.lipschitz * mollifier.lipschitz + weights.sup) / weights.gamma


def x_lipschitz_bound(weights: WeightFunction, mollifier: Mollifier, speed_spread: float) -> float:
    """Slope bound of the field in x: 2 K |g|_Lip |psi|_Lip / gamma."""
    return 2.0 * speed_spread * weights.lipschitz * mollifier.lipschitz / weights.gamma
