"""A flock that splits: two-nearest-neighbour coupling with 1/N weights.

The digraph starts strongly connected but the outer groups drift apart and
the middle agent loses its listeners; after that no common velocity is
reached.
"""

import numpy as np

from topoflock import scenarios as sc
from topoflock.core import communication_matrix
from topoflock.diagnostics import compute_series
from topoflock.dynamics import simulate
from topoflock.graph import strongly_connected_components

ens, g = sc.scenario_example2()
traj = simulate(ens, g, dt=1e-2, t_end=100.0, refine_switches=True)

for t, a, b in traj.switch_log.connectivity_transitions():
    print(f"t = {t:9.4f}: {a} -> {b}")

final = communication_matrix(traj.state(-1), g)
rep = strongly_connected_components(final)
print("\nfinal components:", rep.scc_list)
series = compute_series(traj)
for t in (0, 10, 50, 100):
    k = int(np.searchsorted(traj.times, t))
    print(f"t = {traj.times[k]:5.1f}  velocity diameter {series.vel_diameter[k]:.4f}")
print("centre velocity stays", float(np.abs(traj.velocities[:, sc.CENTER]).max()))
