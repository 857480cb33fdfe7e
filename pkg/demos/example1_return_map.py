"""Central agent bouncing between two rigid triplets.

The centre listens only to its second-nearest neighbour, so it is pulled
back each time it crosses the midpoint. The crossing times are predicted by
iterating the scalar return map c -> s(c); the switching integrator should
find the same times.
"""

import numpy as np

from topoflock import scenarios as sc
from topoflock.dynamics import simulate

c0 = 0.5
ens, g = sc.scenario_example1(c0)
traj = simulate(ens, g, dt=1e-3, t_end=6.0, refine_switches=True)

records, sums = sc.return_map_iterate(c0, 40)
found = [ev.time for ev in traj.switch_log.events]

print(f"{'k':>3} {'speed c_k':>12} {'tau(c_k)':>12} {'predicted':>12} {'integrated':>12}")
for k, (rec, t_pred) in enumerate(zip(records, sums)):
    if t_pred > traj.times[-1]:
        break
    t_num = found[k] if k < len(found) else float("nan")
    print(f"{k:3d} {rec.c:12.8f} {rec.tau:12.8f} {t_pred:12.8f} {t_num:12.8f}")

# speeds shrink like 3 / (2k): the centre slows down but never stops in finite time
cs = np.array([r.c for r in records])
print("\nc_k * k for the last few k:", np.round(cs[-5:] * np.arange(len(cs) - 5, len(cs)), 4))
print("position stays in (-1, 1):", bool(np.all(np.abs(traj.positions[:, sc.CENTER, 0]) < 1)))
