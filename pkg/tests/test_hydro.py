import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from topoflock.core import AgentEnsemble, WeightFunction, normalized_separation
from topoflock.hydro import (HydroState, kernel_mass, local_average, mass_rank_matrix,
                             mass_rank_separation, envelope_check, simulate_hydro)
from topoflock.meanfield import EmpiricalMeasure, Mollifier, kinetic_field

ONE = WeightFunction.constant(1.0)
AFFINE = WeightFunction.affine(1.5, 0.5)


def random_state(rng, n, uniform=True):
    x = rng.uniform(-1, 1, n)
    u = rng.uniform(-1, 1, n)
    if uniform:
        return HydroState.uniform(x, u)
    m = rng.uniform(0.5, 1.5, n)
    return HydroState(m / m.sum(), x, u)


def test_state_validation():
    with pytest.raises(ValueError):
        HydroState([0.5, 0.6], [0.0, 1.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        HydroState([1.0], [0.0, 1.0], [0.0])
    with pytest.raises(ValueError):
        HydroState.uniform([0.0], [np.nan])
    with pytest.raises(ValueError):
        HydroState.uniform([0.0], [0.0], g0=0.0)


def test_uniform_masses_give_normalized_separation():
    rng = np.random.default_rng(0)
    s = random_state(rng, 12)
    e = AgentEnsemble(s.positions[:, None], s.velocities[:, None])
    for i, j in [(0, 1), (3, 9), (5, 5), (11, 2)]:
        assert mass_rank_separation(s, i, j) == pytest.approx(normalized_separation(e, i, j), abs=1e-15)


def test_mass_rank_matrix_hand_case():
    sep = mass_rank_matrix([0.0, 1.0, 3.0], [0.5, 0.3, 0.2])
    assert sep[0].tolist() == pytest.approx([0.0, 0.5, 0.8])
    assert sep[2].tolist() == pytest.approx([0.5, 0.2, 0.0])


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 15), st.booleans())
def test_local_average_cross_check(seed, n, uniform):
    # ubar = (kinetic field with a sharp mollifier) + U * (kernel mass), by two routes
    rng = np.random.default_rng(seed)
    s = random_state(rng, n, uniform)
    mu = EmpiricalMeasure(s.positions, s.velocities, s.masses)
    ubar = local_average(s, AFFINE)
    km = kernel_mass(s, AFFINE)
    for i in range(n):
        field = kinetic_field(mu, Mollifier(0.0), AFFINE, [s.positions[i]], [s.velocities[i]])[0]
        assert field + s.velocities[i] * km[i] == pytest.approx(ubar[i], abs=1e-13)


def test_kernel_mass_bounds():
    rng = np.random.default_rng(1)
    s = random_state(rng, 50)
    assert np.allclose(kernel_mass(s, ONE), 1.0, atol=1e-14)
    km = kernel_mass(s, AFFINE)
    assert np.all(km >= 0.5) and np.abs(km - 1.0).max() < 0.05


def test_constant_kernel_closed_form():
    rng = np.random.default_rng(2)
    s = random_state(rng, 64)
    traj = simulate_hydro(s, ONE, dt=1e-2, t_end=20.0, sample_every=10)
    mean = s.masses @ s.velocities
    expect = mean + (s.velocities - mean)[None, :] * np.exp(-traj.times)[:, None]
    assert np.abs(traj.velocities - expect).max() <= 1e-8 * np.abs(s.velocities).max()
    du = traj.d_u
    assert np.all(np.abs(du / (du[0] * np.exp(-traj.times)) - 1.0) <= 1e-8)
    mom = traj.velocities @ s.masses
    assert np.abs(mom - mom[0]).max() <= 1e-12


def test_constant_kernel_velocity_hull():
    rng = np.random.default_rng(3)
    s = random_state(rng, 30, uniform=False)
    traj = simulate_hydro(s, ONE, dt=1e-2, t_end=5.0)
    assert np.all(traj.velocities.max(axis=1) <= s.velocities.max() + 1e-12)
    assert np.all(traj.velocities.min(axis=1) >= s.velocities.min() - 1e-12)


def test_affine_kernel_envelope():
    rng = np.random.default_rng(4)
    s = random_state(rng, 64)
    traj = simulate_hydro(s, AFFINE, dt=1e-2, t_end=20.0, sample_every=10)
    rep = envelope_check(traj, g0=0.5)
    assert rep.ok and rep.dx_ok
    assert rep.sup_dx <= rep.dx_bound
    assert traj.d_u[-1] < 1e-3 * traj.d_u[0]


def test_trajectory_accessors_and_errors():
    s = HydroState.uniform([0.0, 1.0], [1.0, -1.0], g0=1.0)
    traj = simulate_hydro(s, ONE, dt=0.1, t_end=0.3)
    assert len(traj) == 4 and traj.state(-1).g0 == 1.0
    with pytest.raises(ValueError):
        simulate_hydro(s, WeightFunction.discrete([1.0, 1.0]))
    with pytest.raises(ValueError):
        envelope_check(traj, g0=0.0)


def test_prop2_check_alias():
    from topoflock.hydro import prop2_check
    assert prop2_check is envelope_check
