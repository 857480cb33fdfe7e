"""One-dimensional Lagrangian solver for the topological Euler-alignment system.

Each particle carries a fixed mass m_i, so the continuity equation holds by
construction. Velocities relax towards the local average

    ubar_i = (1/gamma) sum_j g(S_ij) m_j U_j,

where S_ij is the mass of the particles that agent i ranks closer than j.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import NORMALIZED, WeightFunction, pairwise_distances, rank_table
from .dynamics import SimulationError, _n_steps


@dataclass(frozen=True)
class HydroState:
    masses: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    g0: float | None = None  # lower bound of g on [0, 1], when the run relies on one

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=float).ravel()
        x = np.asarray(self.positions, dtype=float).ravel()
        u = np.asarray(self.velocities, dtype=float).ravel()
        if not (len(m) == len(x) == len(u) and len(m) > 0):
            raise ValueError("masses, positions and velocities must have equal nonzero length")
        if np.any(m <= 0):
            raise ValueError("masses must be positive")
        if abs(m.sum() - 1.0) > 1e-12:
            raise ValueError(f"masses sum to {m.sum()!r}, not 1")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
            raise ValueError("non-finite hydro state")
        if self.g0 is not None and self.g0 <= 0:
            raise ValueError("g0 must be positive")
        object.__setattr__(self, "masses", m)
        object.__setattr__(self, "positions", x)
        object.__setattr__(self, "velocities", u)

    @classmethod
    def uniform(cls, positions, velocities, g0=None) -> "HydroState":
        n = len(np.ravel(positions))
        return cls(np.full(n, 1.0 / n), positions, velocities, g0)

    @property
    def n_particles(self) -> int:
        return len(self.masses)


def mass_rank_matrix(positions, masses) -> np.ndarray:
    """S[i, j]: total mass ranked strictly before j from i, (distance, index) order."""
    x = np.asarray(positions, dtype=float).reshape(-1, 1)
    m = np.asarray(masses, dtype=float)
    ranks = rank_table(x, dist=pairwise_distances(x))
    order = np.argsort(ranks, axis=1)  # order[i, r] = agent of rank r
    before = np.cumsum(m[order], axis=1) - m[order]
    sep = np.empty_like(before)
    np.put_along_axis(sep, order, before, axis=1)
    return sep


def mass_rank_separation(state: HydroState, i: int, j: int) -> float:
    return float(mass_rank_matrix(state.positions, state.masses)[i, j])


def _check_weights(weights: WeightFunction):
    if weights.mode != NORMALIZED or weights.gamma <= 0:
        raise ValueError("local averages need a topological-normalized weight with gamma > 0")


def _averaging_matrix(positions, masses, weights: WeightFunction) -> np.ndarray:
    sep = mass_rank_matrix(positions, masses)
    return weights(sep) * np.asarray(masses)[None, :] / weights.gamma


def local_average(state: HydroState, weights: WeightFunction) -> np.ndarray:
    """ubar at every particle."""
    _check_weights(weights)
    return _averaging_matrix(state.positions, state.masses, weights) @ state.velocities


def kernel_mass(state: HydroState, weights: WeightFunction) -> np.ndarray:
    """(1/gamma) sum_j g(S_ij) m_j, which tends to 1 as the masses shrink."""
    _check_weights(weights)
    return _averaging_matrix(state.positions, state.masses, weights).sum(axis=1)


@dataclass(frozen=True)
class HydroTrajectory:
    times: np.ndarray
    masses: np.ndarray
    positions: np.ndarray   # (K, N)
    velocities: np.ndarray  # (K, N)
    g0: float | None = None

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> HydroState:
        return HydroState(self.masses, self.positions[k], self.velocities[k], self.g0)

    @property
    def d_x(self) -> np.ndarray:
        return self.positions.max(axis=1) - self.positions.min(axis=1)

    @property
    def d_u(self) -> np.ndarray:
        return self.velocities.max(axis=1) - self.velocities.min(axis=1)


def simulate_hydro(state0: HydroState, weights: WeightFunction, dt: float = 1e-2,
                   t_end: float = 1.0, sample_every: int = 1) -> HydroTrajectory:
    """RK4 on X' = U, U' = ubar - U with separations frozen within each step."""
    _check_weights(weights)
    if sample_every < 1:
        raise ValueError("sample_every must be >= 1")
    n_steps = _n_steps(dt, t_end)
    m = state0.masses
    x, u = state0.positions.copy(), state0.velocities.copy()
    ts, xs, us = [0.0], [x.copy()], [u.copy()]
    for k in range(1, n_steps + 1):
        t_target = min(k * dt, t_end)
        h = t_target - min((k - 1) * dt, t_end)
        a = _averaging_matrix(x, m, weights)

        def f(uu):
            return a @ uu - uu

        k1 = f(u)
        k2 = f(u + 0.5 * h * k1)
        k3 = f(u + 0.5 * h * k2)
        k4 = f(u + h * k3)
        x = x + (h / 6.0) * (u + 2 * (u + 0.5 * h * k1) + 2 * (u + 0.5 * h * k2) + (u + h * k3))
        u = u + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(u))):
            raise SimulationError(f"non-finite hydro state at t = {t_target:.6g}")
        if k % sample_every == 0 or k == n_steps:
            ts.append(t_target)
            xs.append(x.copy())
            us.append(u.copy())
    return HydroTrajectory(np.array(ts), m.copy(), np.array(xs), np.array(us), state0.g0)


@dataclass(frozen=True)
class EnvelopeReport:
    ok: bool
    worst_ratio: float    # max_t d_u(t) / (d_u(0) exp(-g0^2 t)); <= slack when ok
    sup_dx: float
    dx_bound: float       # d_x(0) + d_u(0) / g0^2, implied by the velocity envelope
    dx_ok: bool


def envelope_check(samples: HydroTrajectory, g0: float, slack: float = 1.05) -> EnvelopeReport:
    """Velocity diameter envelope d_u(t) <= slack d_u(0) exp(-g0^2 t) and sup d_x."""
    if g0 <= 0:
        raise ValueError("g0 must be positive")
    du, dx, t = samples.d_u, samples.d_x, samples.times
    envelope = du[0] * np.exp(-g0**2 * t)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(envelope > 0, du / envelope, np.where(du > 0, np.inf, 0.0))
    worst = float(ratio.max())
    sup_dx = float(dx.max())
    bound = float(dx[0] + slack * du[0] / g0**2)
    return EnvelopeReport(worst <= slack and np.isfinite(sup_dx), worst, sup_dx, bound,
                       sup_dx <= bound * (1 + 1e-12))


prop2_check = envelope_check  # name kept for the public API
