import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from topoflock.core import AgentEnsemble, WeightFunction
from topoflock.diagnostics import (check_flocking, check_hull_contraction, check_position_bound,
                                   compute_series, convex_hull_2d, decay_rate, distance_to_hull_2d,
                                   in_convex_hull, momentum_drift, omega_monotone)
from topoflock.dynamics import Trajectory, simulate
from topoflock.scenarios import scenario_example1


def synthetic(velocities, positions=None, times=None):
    v = np.asarray(velocities, dtype=float)
    x = np.zeros_like(v) if positions is None else np.asarray(positions, dtype=float)
    t = np.arange(len(v), dtype=float) if times is None else np.asarray(times, dtype=float)
    return Trajectory(t, x, v)


@pytest.fixture(scope="module")
def complete_run():
    rng = np.random.default_rng(0)
    e = AgentEnsemble(rng.uniform(-1, 1, (6, 2)), rng.uniform(-1, 1, (6, 2)))
    return simulate(e, WeightFunction.discrete(np.ones(6)), dt=1e-2, t_end=30.0, sample_every=10)


def test_series_shapes_and_argmax_tie():
    traj = synthetic([[[1.0], [-1.0], [0.5]]])
    s = compute_series(traj)
    assert s.omega.tolist() == [1.0] and s.argmax_index.tolist() == [0]
    assert s.vel_diameter.tolist() == [2.0]
    assert s.momentum.shape == (1, 1)
    with pytest.raises(ValueError):
        compute_series(Trajectory(np.zeros(0), np.zeros((0, 1, 1)), np.zeros((0, 1, 1))))


def test_complete_graph_flocks(complete_run):
    s = compute_series(complete_run)
    verdict = check_flocking(s)
    assert verdict.flocked and verdict.t_flock < 30.0
    assert np.allclose(verdict.v_consensus, complete_run.velocities[0].mean(axis=0), atol=1e-9)
    assert omega_monotone(s)
    assert check_hull_contraction(complete_run)
    assert check_position_bound(complete_run)
    assert momentum_drift(complete_run) <= 1e-12


def test_flocking_needs_dwell():
    t = np.linspace(0, 10, 11)
    v = np.zeros((11, 2, 1))
    v[:, 1, 0] = np.r_[np.ones(10), 0.0]
    s = compute_series(synthetic(v, times=t))
    assert not check_flocking(s, dwell=1.0).flocked
    v[-3:, 1, 0] = 0.0
    s = compute_series(synthetic(v, times=t))
    verdict = check_flocking(s, dwell=1.0)
    assert verdict.flocked and verdict.t_flock == 8.0
    with pytest.raises(ValueError):
        check_flocking(s, tol=0.0)


def test_example1_never_flocks_but_omega_decreases():
    e, g = scenario_example1(0.5)
    traj = simulate(e, g, dt=1e-2, t_end=10.0)
    s = compute_series(traj)
    assert not check_flocking(s).flocked
    assert omega_monotone(s)
    assert check_position_bound(traj)


def test_violations_are_reported():
    s = compute_series(synthetic([[[1.0]], [[2.0]], [[1.5]]]))
    rep = omega_monotone(s)
    assert not rep and rep.index == 1 and rep.worst == pytest.approx(1.0)
    grow = synthetic([[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0.0, 0.0], [2.0, 0.0], [0.0, 1.0]]])
    assert not check_hull_contraction(grow)
    grow1d = synthetic([[[0.0], [1.0]], [[0.0], [1.5]]])
    assert check_hull_contraction(grow1d).index == 1
    fast = synthetic([[[0.0]], [[0.0]]], positions=[[[0.0]], [[5.0]]])
    assert not check_position_bound(fast)


def test_convex_hull_square():
    pts = np.array([[0, 0], [1, 0], [1, 1], [0, 1], [0.5, 0.5], [0.5, 0.0]], dtype=float)
    hull = convex_hull_2d(pts)
    assert len(hull) == 4
    assert distance_to_hull_2d([0.5, 0.5], hull) == 0.0
    assert distance_to_hull_2d([2.0, 0.5], hull) == pytest.approx(1.0)
    assert distance_to_hull_2d([2.0, 2.0], hull) == pytest.approx(np.sqrt(2))
    assert distance_to_hull_2d([3.0, 0.0], convex_hull_2d(pts[[0, 1]])) == pytest.approx(2.0)


@settings(max_examples=100, deadline=None)
@given(arrays(float, st.tuples(st.integers(1, 15), st.just(2)), elements=st.floats(-5, 5)))
def test_points_lie_in_their_hull(pts):
    hull = convex_hull_2d(pts)
    assert all(distance_to_hull_2d(p, hull) <= 1e-9 for p in pts)


def test_in_convex_hull_dimensions():
    assert in_convex_hull([0.5], [[0.0], [1.0]])
    assert not in_convex_hull(1.5, [0.0, 1.0])
    assert in_convex_hull([0.2, 0.2], [[0, 0], [1, 0], [0, 1]])
    assert not in_convex_hull([0.6, 0.6], [[0, 0], [1, 0], [0, 1]])
    assert in_convex_hull([0.1, 0.1, 0.1], np.eye(3))


def test_decay_rate():
    t = np.linspace(0, 5, 50)
    assert decay_rate(t, 3 * np.exp(-2 * t)) == pytest.approx(-2.0)
    assert decay_rate(t, np.zeros_like(t)) == -np.inf
