"""Self-propelled agents with metric repulsion and rank-based attraction.

Prints polarization, rotation and the number of groups over time for a few
seeds. Group shapes depend on the random start; what is robust is that the
agents cruise near sqrt(a/b), split into several groups, and that some runs
settle into a steady turning motion.
"""

import numpy as np

from topoflock.swarm import SwarmParams, pattern_metrics, simulate_swarm, speed_bound

p = SwarmParams()
print("speed bound from a standing start:", round(speed_bound(p, 0.0), 3), " cruise speed", round(np.sqrt(p.a / p.b), 3))
for seed in (0, 2):
    traj = simulate_swarm(params=p, seed=seed, n_agents=100, dt=1e-2, t_end=10.0, sample_every=100)
    pm = pattern_metrics(traj, params=p)
    print(f"\nseed {seed}")
    print("   t   polarization  rotation  groups  mean speed")
    for k, t in enumerate(pm.times):
        speed = np.linalg.norm(traj.velocities[k], axis=1).mean()
        print(f"{t:4.0f}   {pm.polarization[k]:10.3f}  {pm.normalized_angular_momentum[k]:8.3f}"
              f"  {pm.n_clusters[k]:6d}  {speed:10.3f}")
