import math

import numpy as np
import pytest

from topoflock.core import AgentEnsemble
from topoflock.dynamics import Trajectory
from topoflock.swarm import (SwarmParams, attraction_weights, clusters, interaction_terms,
                             morse_potential, pair_equilibrium, pattern_metrics,
                             random_box_ensemble, repulsion_force, rhs_swarm, rotation,
                             simulate_swarm, speed_bound, summed_repulsion_potential)

P = SwarmParams()


def test_params_validation():
    with pytest.raises(ValueError):
        SwarmParams(l_R=0.0)
    with pytest.raises(ValueError):
        SwarmParams(C_A=-1.0)
    assert P.force_bound == 12.0
    assert P.replace(a=2.0).a == 2.0 and P.a == 1.0


def test_morse_and_repulsion_force():
    assert morse_potential(0.0, P) == pytest.approx(P.C_R - P.C_A)
    assert np.all(repulsion_force([1.0, 2.0], [1.0, 2.0], P) == 0.0)
    f = repulsion_force([1.0, 0.0], [0.0, 0.0], P)
    assert f == pytest.approx([2.0 * math.exp(-2.0), 0.0])


def test_repulsion_is_minus_gradient_of_potential():
    rng = np.random.default_rng(0)
    x = rng.uniform(0, 1, (8, 2))
    rep, _ = interaction_terms(AgentEnsemble(x, np.zeros_like(x)), P)
    h = 1e-6
    grad = np.zeros_like(x)
    for i in range(8):
        for k in range(2):
            xp, xm = x.copy(), x.copy()
            xp[i, k] += h
            xm[i, k] -= h
            grad[i, k] = (summed_repulsion_potential(xp, P) - summed_repulsion_potential(xm, P)) / (2 * h)
    assert np.abs(rep + grad).max() <= 1e-6


def test_pair_forces_cancel_and_repulsion_sums_to_zero():
    e = AgentEnsemble([[0.0, 0.0], [0.3, 0.4]], np.zeros((2, 2)))
    rep, att = interaction_terms(e, P)
    assert np.abs((rep + att).sum(axis=0)).max() <= 1e-15
    rng = np.random.default_rng(1)
    x = rng.uniform(0, 1, (10, 2))
    rep, _ = interaction_terms(AgentEnsemble(x, np.zeros_like(x)), P)
    assert np.abs(rep.sum(axis=0)).max() <= 1e-13


def test_attraction_is_scale_free():
    rng = np.random.default_rng(2)
    x = rng.uniform(0, 1, (12, 2))
    a = AgentEnsemble(x, np.zeros_like(x))
    b = AgentEnsemble(5.0 * x, np.zeros_like(x))
    assert np.allclose(interaction_terms(a, P)[1], interaction_terms(b, P)[1], atol=1e-14)
    assert np.array_equal(attraction_weights(a, P), attraction_weights(b, P))
    assert not np.allclose(interaction_terms(a, P)[0], interaction_terms(b, P)[0])


def test_single_agent_speed_ode():
    s0 = 0.1
    e = AgentEnsemble([[0.0, 0.0]], [[s0, 0.0]])
    traj = simulate_swarm(e, P, dt=1e-2, t_end=10.0)
    a, b, t = P.a, P.b, traj.times
    exact = np.sqrt(a / (b + (a / s0**2 - b) * np.exp(-2 * a * t)))
    assert np.abs(np.linalg.norm(traj.velocities[:, 0], axis=1) - exact).max() <= 1e-8
    assert exact[-1] == pytest.approx(math.sqrt(2), abs=1e-5)


def test_speed_bound_holds_and_solves_cubic():
    s = speed_bound(P, 0.0)
    assert P.b * s**3 - P.a * s - P.force_bound == pytest.approx(0.0, abs=1e-9)
    assert speed_bound(P, 100.0) == 100.0
    traj = simulate_swarm(params=P, seed=3, n_agents=30, dt=1e-2, t_end=5.0)
    assert np.linalg.norm(traj.velocities, axis=2).max() <= s
    with pytest.raises(ValueError):
        speed_bound(P.replace(b=0.0), 1.0)


def test_pair_equilibrium_closed_form():
    r = pair_equilibrium(P)
    closed = P.l_R * math.log(P.C_R / (P.l_R * float(P.g_A(0.5))))
    assert r == pytest.approx(closed, abs=1e-9)
    _, acc = rhs_swarm(AgentEnsemble([[0.0, 0.0], [r, 0.0]], np.zeros((2, 2))), P.replace(a=0, b=0))
    assert np.abs(acc).max() <= 1e-9


def test_seed_repeatability():
    a = simulate_swarm(seed=7, n_agents=20, t_end=1.0)
    b = simulate_swarm(seed=7, n_agents=20, t_end=1.0)
    c = simulate_swarm(seed=8, n_agents=20, t_end=1.0)
    assert np.array_equal(a.positions, b.positions)
    assert not np.array_equal(a.positions, c.positions)
    e = random_box_ensemble(5, 0)
    assert np.all((e.positions >= 0) & (e.positions <= 1)) and np.all(e.velocities == 0)


def test_clusters_and_rotation():
    x = np.array([[0.0, 0.0], [0.1, 0.0], [5.0, 5.0], [5.1, 5.0]])
    k, labels = clusters(x, 1.0)
    assert k == 2 and labels[0] == labels[1] != labels[2]
    ring = np.array([[np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 9)[:-1]])
    spin = ring @ np.array([[0.0, 1.0], [-1.0, 0.0]])
    assert rotation(ring, spin)[1] == pytest.approx(1.0)
    assert rotation(ring, np.tile([1.0, 0.0], (8, 1)))[1] == pytest.approx(0.0, abs=1e-15)


def test_pattern_metrics():
    ring = np.array([[np.cos(t), np.sin(t)] for t in np.linspace(0, 2 * np.pi, 9)[:-1]])
    spin = ring @ np.array([[0.0, 1.0], [-1.0, 0.0]])
    traj = Trajectory(np.array([0.0]), ring[None], spin[None])
    pm = pattern_metrics(traj)
    assert pm.n_clusters[0] == 1 and pm.group_rotation[0] == pytest.approx(1.0)
    assert pm.polarization[0] == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        pattern_metrics(Trajectory(np.array([0.0]), np.zeros((1, 2, 1)), np.zeros((1, 2, 1))))
