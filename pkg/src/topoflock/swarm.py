"""Self-propelled swarm with metric Morse repulsion and rank-based attraction.

    x_i' = v_i
    v_i' = (a - b|v_i|^2) v_i + (1/N) sum_j F_R(x_i - x_j)
           - (1/N) sum_j g_A(rank_ij / N) (x_i - x_j) / |x_i - x_j|

with F_R(y) = (C_R/l_R) exp(-|y|/l_R) y/|y| and g_A(s) = (C_A/l_A) exp(-s/l_A).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.sparse.csgraph import connected_components

from .core import AgentEnsemble, pairwise_distances, rank_table
from .dynamics import SimulationError, Trajectory, _n_steps, _Recorder


@dataclass(frozen=True)
class SwarmParams:
    a: float = 1.0
    b: float = 0.5
    C_R: float = 1.0
    l_R: float = 0.5
    C_A: float = 1.0
    l_A: float = 0.1

    def __post_init__(self):
        if min(self.a, self.b, self.C_R, self.C_A) < 0:
            raise ValueError("strengths and propulsion coefficients must be nonnegative")
        if min(self.l_R, self.l_A) <= 0:
            raise ValueError("interaction lengths must be positive")

    def replace(self, **kw) -> "SwarmParams":
        return replace(self, **kw)

    def g_A(self, s):
        return self.C_A / self.l_A * np.exp(-np.asarray(s, dtype=float) / self.l_A)

    @property
    def force_bound(self) -> float:
        """Upper bound on the summed interaction acceleration of one agent."""
        return self.C_R / self.l_R + self.C_A / self.l_A


def morse_potential(r, params: SwarmParams):
    r = np.asarray(r, dtype=float)
    return -params.C_A * np.exp(-r / params.l_A) + params.C_R * np.exp(-r / params.l_R)


def repulsion_potential(r, params: SwarmParams):
    return params.C_R * np.exp(-np.asarray(r, dtype=float) / params.l_R)


def repulsion_force(x_i, x_j, params: SwarmParams) -> np.ndarray:
    """-grad_{x_i} U_R(|x_i - x_j|); zero for coincident points."""
    y = np.atleast_1d(np.asarray(x_i, dtype=float) - np.asarray(x_j, dtype=float))
    r = float(np.linalg.norm(y))
    if r == 0:
        return np.zeros_like(y)
    return params.C_R / params.l_R * math.exp(-r / params.l_R) * y / r


def _units(x: np.ndarray):
    diff = x[:, None, :] - x[None, :, :]
    dist = pairwise_distances(x)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit = np.where(dist[..., None] > 0, diff / dist[..., None], 0.0)
    return dist, unit


def _interaction(x: np.ndarray, ranks: np.ndarray, params: SwarmParams):
    """Repulsion and attraction accelerations, each of shape (N, d)."""
    n = x.shape[0]
    dist, unit = _units(x)
    rep = params.C_R / params.l_R * np.exp(-dist / params.l_R)
    att = params.g_A(ranks / n)
    np.fill_diagonal(rep, 0.0)
    np.fill_diagonal(att, 0.0)
    rep_acc = np.einsum("ij,ijk->ik", rep, unit) / n
    att_acc = -np.einsum("ij,ijk->ik", att, unit) / n
    return rep_acc, att_acc


def _accel(x, v, ranks, params):
    rep, att = _interaction(x, ranks, params)
    speed2 = np.einsum("ij,ij->i", v, v)
    return (params.a - params.b * speed2)[:, None] * v + rep + att


def rhs_swarm(ensemble: AgentEnsemble, params: SwarmParams) -> tuple[np.ndarray, np.ndarray]:
    x, v = np.array(ensemble.positions), np.array(ensemble.velocities)
    return v.copy(), _accel(x, v, rank_table(x), params)


def interaction_terms(ensemble: AgentEnsemble, params: SwarmParams):
    """(repulsion, attraction) parts of v' separately."""
    x = np.array(ensemble.positions)
    return _interaction(x, rank_table(x), params)


def attraction_weights(ensemble: AgentEnsemble, params: SwarmParams) -> np.ndarray:
    """g_A(rank_ij / N) with the diagonal zeroed."""
    x = np.array(ensemble.positions)
    w = params.g_A(rank_table(x) / len(x))
    np.fill_diagonal(w, 0.0)
    return w


def summed_repulsion_potential(positions, params: SwarmParams) -> float:
    """(1/2N) sum_{i != j} U_R(|x_i - x_j|); its negative gradient is the repulsion block."""
    x = np.asarray(positions, dtype=float)
    d = pairwise_distances(x)
    u = repulsion_potential(d, params)
    np.fill_diagonal(u, 0.0)
    return float(u.sum() / (2 * len(x)))


def random_box_ensemble(n: int, seed, dim: int = 2) -> AgentEnsemble:
    """Uniform positions in the unit box and zero velocities."""
    rng = np.random.default_rng(seed)
    return AgentEnsemble(rng.uniform(0.0, 1.0, (n, dim)), np.zeros((n, dim)))


def simulate_swarm(ensemble0: AgentEnsemble | None = None, params: SwarmParams | None = None,
                   dt: float = 1e-2, t_end: float = 10.0, seed=None, n_agents: int = 100,
                   sample_every: int = 1) -> Trajectory:
    """RK4 with the rank table frozen within each step.

    Without ``ensemble0`` the start is ``random_box_ensemble(n_agents, seed)``.
    """
    params = SwarmParams() if params is None else params
    if ensemble0 is None:
        ensemble0 = random_box_ensemble(n_agents, seed)
    n_steps = _n_steps(dt, t_end)
    x, v = np.array(ensemble0.positions), np.array(ensemble0.velocities)
    rec = _Recorder(x, v, sample_every)
    for k in range(1, n_steps + 1):
        t_target = min(k * dt, t_end)
        h = t_target - min((k - 1) * dt, t_end)
        ranks = rank_table(x)
        k1x, k1v = v, _accel(x, v, ranks, params)
        x2, v2 = x + 0.5 * h * k1x, v + 0.5 * h * k1v
        k2x, k2v = v2, _accel(x2, v2, ranks, params)
        x3, v3 = x + 0.5 * h * k2x, v + 0.5 * h * k2v
        k3x, k3v = v3, _accel(x3, v3, ranks, params)
        x4, v4 = x + h * k3x, v + h * k3v
        k4x, k4v = v4, _accel(x4, v4, ranks, params)
        x = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
        v = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(v))):
            raise SimulationError(f"non-finite swarm state at t = {t_target:.6g}")
        rec.maybe(k, n_steps, t_target, x, v)
    return rec.build(None)


def speed_bound(params: SwarmParams, v0_max: float) -> float:
    """max(v0_max, S) with S the positive root of b S^3 - a S - F = 0.

    Above S self-propulsion and friction beat any interaction force of size
    at most F, so no speed can cross max(v0_max, S).
    """
    a, b, f = params.a, params.b, params.force_bound
    if b <= 0:
        raise ValueError("speed bound needs b > 0")
    lo, hi = 0.0, max(1.0, math.sqrt((a + f) / b))
    while b * hi**3 - a * hi - f < 0:
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if b * mid**3 - a * mid - f < 0:
            lo = mid
        else:
            hi = mid
    return max(v0_max, hi)


def pair_equilibrium(params: SwarmParams, tol: float = 1e-12) -> float:
    """Separation at which two agents feel zero net force, found by bisection on rhs_swarm."""
    def radial(r):
        ens = AgentEnsemble([[0.0, 0.0], [r, 0.0]], np.zeros((2, 2)))
        _, acc = rhs_swarm(ens, params.replace(a=0.0, b=0.0))
        return acc[1, 0]  # > 0: agent 1 pushed outwards

    lo, hi = 1e-9, params.l_R
    while radial(hi) > 0:
        hi *= 2
        if hi > 1e6:
            raise ArithmeticError("no attracting separation found")
    if radial(lo) <= 0:
        raise ArithmeticError("attraction dominates at contact; no equilibrium")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if radial(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass(frozen=True)
class PatternSeries:
    times: np.ndarray
    polarization: np.ndarray
    angular_momentum: np.ndarray  # sum (x_i - x_c) x v_i
    normalized_angular_momentum: np.ndarray  # divided by sum |x_i - x_c| |v_i|
    group_rotation: np.ndarray  # max over clusters of |normalized angular momentum|
    n_clusters: np.ndarray


def _cross2(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


def clusters(positions, cutoff: float) -> tuple[int, np.ndarray]:
    """Single-linkage clusters: agents closer than ``cutoff`` are linked."""
    d = pairwise_distances(np.asarray(positions, dtype=float))
    return connected_components(d < cutoff, directed=False)


def rotation(x: np.ndarray, v: np.ndarray) -> tuple[float, float]:
    """Angular momentum about the centre of mass, raw and normalized to [-1, 1]."""
    r = x - x.mean(axis=0)
    lz = float(_cross2(r, v).sum())
    scale = float((np.linalg.norm(r, axis=1) * np.linalg.norm(v, axis=1)).sum())
    return lz, (lz / scale if scale > 0 else 0.0)


def pattern_metrics(trajectory: Trajectory, cutoff: float | None = None,
                    params: SwarmParams | None = None, min_group: int = 3) -> PatternSeries:
    """Polarization, rotation and cluster count per sample (2-D only).

    ``cutoff`` defaults to 3 l_R. ``group_rotation`` ignores clusters with
    fewer than ``min_group`` agents.
    """
    if trajectory.dim != 2:
        raise ValueError("pattern metrics are defined for d = 2")
    if cutoff is None:
        cutoff = 3.0 * (params or SwarmParams()).l_R
    pol, lz, lzn, grp, ncl = [], [], [], [], []
    for x, v in zip(trajectory.positions, trajectory.velocities):
        total = np.linalg.norm(v, axis=1).sum()
        pol.append(float(np.linalg.norm(v.sum(axis=0)) / total) if total > 0 else 0.0)
        raw, norm = rotation(x, v)
        lz.append(raw)
        lzn.append(norm)
        k, labels = clusters(x, cutoff)
        ncl.append(k)
        best = 0.0
        for c in range(k):
            idx = labels == c
            if idx.sum() >= min_group:
                best = max(best, abs(rotation(x[idx], v[idx])[1]))
        grp.append(best)
    return PatternSeries(np.asarray(trajectory.times), np.array(pol), np.array(lz),
                         np.array(lzn), np.array(grp), np.array(ncl))
