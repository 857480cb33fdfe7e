"""Particle approximations of the kinetic equation at increasing N.

Runs the self-consistent particle system from nested samples of one initial
pool and measures W1 between the N and 2N clouds at t = 5. Sampling noise is
of the same size as the trend, so single pools often rise somewhere and even
the mean of three pools can stall; the test suite averages six pools.
"""

import numpy as np

from topoflock.core import WeightFunction
from topoflock.meanfield import EmpiricalMeasure, Mollifier, simulate_meanfield_particles, wasserstein1

g = WeightFunction.exponential(1.0, 0.5)
moll = Mollifier(0.1)
sizes = (25, 50, 100, 200)


def final_cloud(n, px, pv):
    traj = simulate_meanfield_particles(n, lambda k: (px[:k], pv[:k]), g, moll, dt=0.1, t_end=5.0,
                                        sample_every=1000)
    return EmpiricalMeasure.uniform(traj.positions[-1], traj.velocities[-1])


rows = []
for seed in range(3):
    rng = np.random.default_rng(seed)
    px, pv = rng.uniform(-1, 1, sizes[-1]), rng.uniform(-0.5, 0.5, sizes[-1])
    clouds = {n: final_cloud(n, px, pv) for n in sizes}
    rows.append([wasserstein1(clouds[n].refine(2), clouds[2 * n]) for n in sizes[:-1]])
    print(f"pool {seed}: " + "  ".join(f"W1(N={n}, 2N) = {w:.4f}" for n, w in zip(sizes, rows[-1])))
print("mean:  ", np.round(np.mean(rows, axis=0), 4))
