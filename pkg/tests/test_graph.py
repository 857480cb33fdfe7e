import numpy as np
import pytest
import scipy.linalg

from topoflock.core import AgentEnsemble, Topology, WeightFunction, communication_matrix
from topoflock.dynamics import simulate, simulate_fixed_topology
from topoflock.graph import (ConsensusCertificate, left_null_vector, predict_consensus,
                             random_strongly_connected, strongly_connected_components, tarjan_scc)
from topoflock.scenarios import scenario_example1, scenario_example2, scenario_example3


def reach_closure(adj):
    n = len(adj)
    r = adj.copy() | np.eye(n, dtype=bool)
    for k in range(n):
        r |= r[:, [k]] & r[[k], :]
    return r


def brute_sccs(adj):
    r = reach_closure(adj)
    mutual = r & r.T
    return {tuple(np.flatnonzero(row)) for row in mutual}


def test_tarjan_matches_transitive_closure():
    rng = np.random.default_rng(0)
    for _ in range(500):
        n = int(rng.integers(1, 7))
        adj = rng.uniform(size=(n, n)) < rng.uniform(0.1, 0.6)
        np.fill_diagonal(adj, False)
        got = tarjan_scc(adj)
        assert {tuple(c) for c in got} == brute_sccs(adj)
        assert sorted(i for c in got for i in c) == list(range(n))


def test_tarjan_reverse_topological_order():
    # 0 -> 1 -> 2, with 2 a sink: sinks come first
    adj = np.zeros((3, 3), dtype=bool)
    adj[0, 1] = adj[1, 2] = True
    assert tarjan_scc(adj) == [[2], [1], [0]]


def test_tarjan_deep_chain_is_iterative():
    n = 5000
    adj = np.zeros((n, n), dtype=bool)
    adj[np.arange(n - 1), np.arange(1, n)] = True
    adj[n - 1, 0] = True
    assert len(tarjan_scc(adj)) == 1


def test_complete_graph_is_strong():
    rng = np.random.default_rng(1)
    e = AgentEnsemble(rng.normal(size=(6, 2)), np.zeros((6, 2)))
    rep = strongly_connected_components(communication_matrix(e, WeightFunction.discrete(np.ones(6))))
    assert rep.is_strong and rep.is_weak and rep.n_components == 1


@pytest.mark.parametrize("n", [3, 5, 10, 20])
def test_example3_not_strongly_connected(n):
    e, g = scenario_example3(n)
    rep = strongly_connected_components(communication_matrix(e, g))
    assert not rep.is_strong
    assert rep.n_components >= 2


def test_scc_depends_only_on_pattern():
    rng = np.random.default_rng(2)
    for _ in range(50):
        w = rng.uniform(size=(6, 6)) * (rng.uniform(size=(6, 6)) < 0.4)
        w2 = np.where(w > 0, rng.uniform(0.01, 5.0, w.shape), 0.0)
        a = strongly_connected_components(Topology.from_weights(w))
        b = strongly_connected_components(Topology.from_weights(w2))
        assert a == b


def test_strong_implies_weak():
    rng = np.random.default_rng(3)
    for _ in range(200):
        w = rng.uniform(size=(5, 5)) * (rng.uniform(size=(5, 5)) < 0.3)
        rep = strongly_connected_components(Topology.from_weights(w))
        assert rep.is_weak or not rep.is_strong


def test_example2_post_switch_components():
    e, g = scenario_example2()
    traj = simulate(e, g, dt=1e-2, t_end=12.0, refine_switches=True)
    final = communication_matrix(traj.state(-1), g)
    rep = strongly_connected_components(final)
    assert {tuple(c) for c in rep.scc_list} == {(0, 1, 2), (4, 5, 6), (3,)}
    assert rep.is_weak and not rep.is_strong


# ---------------------------------------------------------------- null vector

def test_two_agent_mutual():
    cert = left_null_vector(Topology.from_weights([[0.0, 1.0], [1.0, 0.0]]))
    assert cert.valid and np.allclose(cert.xi, [0.5, 0.5], atol=1e-12)
    assert predict_consensus(cert, [1.0, -1.0]) == pytest.approx([0.0], abs=1e-12)


def test_balanced_graph_uniform_xi():
    cert = left_null_vector(Topology.from_weights(np.full((5, 5), 0.2)))
    assert np.allclose(cert.xi, 0.2, atol=1e-12)


def test_example1_branch_kernel_against_dense_solve():
    e, g = scenario_example1(0.5)
    topo = communication_matrix(e, g, lookahead=True)
    cert = left_null_vector(topo)
    assert cert.residual <= 1e-10
    assert np.all(cert.xi >= 0) and cert.xi.sum() == pytest.approx(1.0)
    # dense oracle: null space of L^T
    ns = scipy.linalg.null_space(topo.laplacian.T)
    if ns.shape[1] == 1:
        ref = np.abs(ns[:, 0]) / np.abs(ns[:, 0]).sum()
        assert np.allclose(cert.xi, ref, atol=1e-10)
    assert cert.valid == strongly_connected_components(topo).is_strong


def test_disconnected_certificate_invalid():
    w = np.zeros((4, 4))
    w[0, 1] = w[1, 0] = w[2, 3] = w[3, 2] = 1.0
    cert = left_null_vector(Topology.from_weights(w))
    assert not cert.valid and cert.kernel_dim == 2
    assert cert.residual <= 1e-10
    with pytest.raises(ValueError):
        predict_consensus(cert, np.zeros(4))


def test_non_stochastic_rows_use_general_laplacian():
    e, g = scenario_example2()  # rows sum to 2/7
    topo = communication_matrix(e, g, lookahead=True)
    cert = left_null_vector(topo)
    assert cert.valid
    assert np.abs(cert.xi @ topo.laplacian).max() <= 1e-10


def test_example2_initial_tie_needs_lookahead():
    # agent at x = 3 sees x = 0 and x = 6 at distance 3; only the motion separates them
    e, g = scenario_example2()
    assert not strongly_connected_components(communication_matrix(e, g)).is_strong
    assert strongly_connected_components(communication_matrix(e, g, lookahead=True)).is_strong


def test_predict_consensus_convex_and_constant():
    cert = ConsensusCertificate(np.array([0.2, 0.3, 0.5]), True, 1, 0.0)
    assert predict_consensus(cert, [[2.0, 1.0]] * 3) == pytest.approx([2.0, 1.0])
    out = predict_consensus(cert, [-1.0, 0.0, 4.0])
    assert -1.0 <= out[0] <= 4.0


def test_prediction_matches_long_integration():
    rng = np.random.default_rng(7)
    topo = random_strongly_connected(8, rng)
    e = AgentEnsemble(rng.uniform(-1, 1, (8, 2)), rng.uniform(-1, 1, (8, 2)))
    cert = left_null_vector(topo)
    traj = simulate_fixed_topology(e, topo, dt=1e-3, t_end=50.0, sample_every=1000)
    assert np.abs(traj.velocities[-1] - predict_consensus(cert, e.velocities)).max() <= 1e-6


def test_random_strongly_connected_generator():
    rng = np.random.default_rng(8)
    for n in range(1, 11):
        topo = random_strongly_connected(n, rng)
        assert strongly_connected_components(topo).is_strong
        assert np.allclose(topo.weights.sum(axis=1), 1.0)
