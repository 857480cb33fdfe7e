"""Integration of the switching network x' = v, v' = (G - I) v.

The topology is rebuilt from the configuration before every step and held
fixed across the RK4 substeps. A change of the rank-table fingerprint between
consecutive steps is a switch event. With ``refine_switches`` the step is cut
at the crossing, located by bisection on the step length.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (AgentEnsemble, Topology, WeightFunction, pattern_fingerprint,
                   topology_from_arrays)
from .graph import strongly_connected_components


class SimulationError(RuntimeError):
    pass


class ChatteringError(SimulationError):
    pass


@dataclass(frozen=True)
class SwitchEvent:
    time: float
    old_hash: str
    new_hash: str


@dataclass
class SwitchLog:
    t_end: float
    initial_hash: str
    events: list[SwitchEvent] = field(default_factory=list)
    # fingerprint -> (strongly connected, weakly connected)
    connectivity: dict[str, tuple[bool, bool]] = field(default_factory=dict)
    # fingerprint -> hash of the edge pattern alone (rank reorderings share it)
    patterns: dict[str, str] = field(default_factory=dict)

    @property
    def intervals(self) -> list[tuple[float, float, str]]:
        out = []
        t0, h = 0.0, self.initial_hash
        for ev in self.events:
            out.append((t0, ev.time, h))
            t0, h = ev.time, ev.new_hash
        out.append((t0, self.t_end, h))
        return out

    @property
    def occupancy(self) -> dict[str, float]:
        occ: dict[str, float] = {}
        for t0, t1, h in self.intervals:
            occ[h] = occ.get(h, 0.0) + (t1 - t0)
        return occ

    @property
    def pattern_occupancy(self) -> dict[str, float]:
        """Occupied time per edge pattern, merging rank tables with equal patterns."""
        occ: dict[str, float] = {}
        for h, dur in self.occupancy.items():
            p = self.patterns.get(h, h)
            occ[p] = occ.get(p, 0.0) + dur
        return occ

    def connectivity_transitions(self) -> list[tuple[float, str, str]]:
        """(time, old, new) for events that change strong/weak connectivity."""
        def label(h):
            strong, weak = self.connectivity[h]
            return "strong" if strong else ("weak" if weak else "disconnected")

        out = []
        for ev in self.events:
            a, b = label(ev.old_hash), label(ev.new_hash)
            if a != b:
                out.append((ev.time, a, b))
        return out


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray          # (K,)
    positions: np.ndarray      # (K, N, d)
    velocities: np.ndarray     # (K, N, d)
    switch_log: SwitchLog | None = None

    def __len__(self) -> int:
        return len(self.times)

    @property
    def n_agents(self) -> int:
        return self.positions.shape[1]

    @property
    def dim(self) -> int:
        return self.positions.shape[2]

    def state(self, k: int) -> AgentEnsemble:
        return AgentEnsemble(self.positions[k], self.velocities[k])


def _vdot(w: np.ndarray, rowsum: np.ndarray, v: np.ndarray) -> np.ndarray:
    return w @ v - rowsum[:, None] * v


def _rk4(x, v, w, rowsum, h):
    k1x, k1v = v, _vdot(w, rowsum, v)
    v2 = v + 0.5 * h * k1v
    k2x, k2v = v2, _vdot(w, rowsum, v2)
    v3 = v + 0.5 * h * k2v
    k3x, k3v = v3, _vdot(w, rowsum, v3)
    v4 = v + h * k3v
    k4x, k4v = v4, _vdot(w, rowsum, v4)
    xn = x + (h / 6.0) * (k1x + 2 * k2x + 2 * k3x + k4x)
    vn = v + (h / 6.0) * (k1v + 2 * k2v + 2 * k3v + k4v)
    return xn, vn


def rhs(ensemble: AgentEnsemble, topology: Topology) -> tuple[np.ndarray, np.ndarray]:
    """(x', v') with v'_i = sum_j w_ij (v_j - v_i)."""
    w = topology.weights
    return ensemble.velocities.copy(), _vdot(w, w.sum(axis=1), ensemble.velocities)


def step(ensemble: AgentEnsemble, topology: Topology, dt: float) -> AgentEnsemble:
    """One classical RK4 step with the topology frozen."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    w = topology.weights
    xn, vn = _rk4(ensemble.positions, ensemble.velocities, w, w.sum(axis=1), dt)
    return AgentEnsemble(xn, vn)


def _n_steps(dt: float, t_end: float) -> int:
    if dt <= 0 or t_end <= 0:
        raise ValueError("dt and t_end must be positive")
    return max(1, math.ceil(t_end / dt - 1e-9))


class _Recorder:
    def __init__(self, x, v, sample_every):
        if sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        self.every = sample_every
        self.t, self.x, self.v = [0.0], [x.copy()], [v.copy()]

    def maybe(self, k, n_steps, t, x, v):
        if k % self.every == 0 or k == n_steps:
            self.t.append(t)
            self.x.append(x.copy())
            self.v.append(v.copy())

    def build(self, log) -> Trajectory:
        return Trajectory(np.array(self.t), np.array(self.x), np.array(self.v), log)


def simulate(ensemble0: AgentEnsemble, weights: WeightFunction, dt: float = 1e-3,
             t_end: float = 1.0, sample_every: int = 1, refine_switches: bool = False,
             switch_tol: float = 1e-9, max_switches: int = 10**6) -> Trajectory:
    """Integrate the rank-switching system from ``ensemble0`` up to ``t_end``.

    Sample times are ``k * dt`` (the last one clipped to ``t_end``). Topologies
    are built with radial-rate tie-breaking so that a tied configuration is
    assigned the ordering it has just after the current instant.
    """
    n_steps = _n_steps(dt, t_end)

    def build(x, v):
        return topology_from_arrays(x, v, weights)

    x = np.array(ensemble0.positions)
    v = np.array(ensemble0.velocities)
    topo = build(x, v)
    log = SwitchLog(float(t_end), topo.fingerprint)
    rec = _Recorder(x, v, sample_every)

    def note(tp):
        if tp.fingerprint not in log.connectivity:
            rep = strongly_connected_components(tp)
            log.connectivity[tp.fingerprint] = (rep.is_strong, rep.is_weak)
            log.patterns[tp.fingerprint] = pattern_fingerprint(tp.adjacency)

    note(topo)
    t = 0.0
    for k in range(1, n_steps + 1):
        t_target = min(k * dt, t_end)
        while t < t_target:
            w = topo.weights
            rowsum = w.sum(axis=1)
            h = t_target - t
            xn, vn = _rk4(x, v, w, rowsum, h)
            if not (np.all(np.isfinite(xn)) and np.all(np.isfinite(vn))):
                raise SimulationError(f"non-finite state at t = {t + h:.6g}")
            new = build(xn, vn)
            full = True
            if new.fingerprint != topo.fingerprint and refine_switches and h > switch_tol:
                lo, hi = 0.0, h
                cut = (xn, vn, new)
                while hi - lo > switch_tol:
                    mid = 0.5 * (lo + hi)
                    xm, vm = _rk4(x, v, w, rowsum, mid)
                    tm = build(xm, vm)
                    if tm.fingerprint != topo.fingerprint:
                        hi, cut = mid, (xm, vm, tm)
                    else:
                        lo = mid
                xn, vn, new = cut
                full = hi >= h
                h = hi
            t_new = t_target if full else t + h
            if new.fingerprint != topo.fingerprint:
                note(new)
                log.events.append(SwitchEvent(t_new, topo.fingerprint, new.fingerprint))
                if len(log.events) > max_switches:
                    raise ChatteringError(
                        f"more than {max_switches} topology switches by t = {t_new:.6g}; "
                        "switch times may accumulate (Zeno behaviour)")
            x, v, topo, t = xn, vn, new, t_new
        rec.maybe(k, n_steps, t_target, x, v)
    return rec.build(log)


def rk4_propagator(weights: np.ndarray, h: float) -> np.ndarray:
    """(2N x 2N) matrix of one RK4 step on the linear system z' = M z, z = [x; v].

    For a linear autonomous system RK4 is exactly the degree-4 Taylor
    polynomial of exp(hM).
    """
    w = np.asarray(weights, dtype=float)
    n = w.shape[0]
    m = np.zeros((2 * n, 2 * n))
    m[:n, n:] = np.eye(n)
    m[n:, n:] = w - np.diag(w.sum(axis=1))
    hm = h * m
    out = np.eye(2 * n)
    term = np.eye(2 * n)
    for k in range(1, 5):
        term = term @ hm / k
        out = out + term
    return out


def simulate_fixed_topology(ensemble0: AgentEnsemble, topology: Topology, dt: float = 1e-3,
                            t_end: float = 1.0, sample_every: int = 1) -> Trajectory:
    n_steps = _n_steps(dt, t_end)
    n = ensemble0.n_agents
    if topology.n_agents != n:
        raise ValueError("topology size does not match the ensemble")
    prop = rk4_propagator(topology.weights, dt)
    z = np.vstack([ensemble0.positions, ensemble0.velocities])
    rec = _Recorder(z[:n], z[n:], sample_every)
    for k in range(1, n_steps + 1):
        t_target = min(k * dt, t_end)
        if k * dt <= t_end:
            z = prop @ z
        else:
            z = rk4_propagator(topology.weights, t_end - (k - 1) * dt) @ z
        if not np.all(np.isfinite(z)):
            raise SimulationError(f"non-finite state at t = {t_target:.6g}")
        rec.maybe(k, n_steps, t_target, z[:n], z[n:])
    rep = strongly_connected_components(topology)
    log = SwitchLog(float(t_end), topology.fingerprint,
                    connectivity={topology.fingerprint: (rep.is_strong, rep.is_weak)},
                    patterns={topology.fingerprint: pattern_fingerprint(topology.adjacency)})
    return rec.build(log)
