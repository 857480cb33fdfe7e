"""Velocity alignment in the 1-D Lagrangian Euler-alignment model.

With g = 1 the velocity spread decays exactly like exp(-t). With a kernel that
only stays above g0 the spread still decays at least like exp(-g0^2 t).
"""

import numpy as np

from topoflock.core import WeightFunction
from topoflock.diagnostics import decay_rate
from topoflock.hydro import HydroState, envelope_check, simulate_hydro

rng = np.random.default_rng(4)
state = HydroState.uniform(rng.uniform(-1, 1, 100), rng.uniform(-1, 1, 100), g0=0.5)

for label, w in [("g = 1", WeightFunction.constant(1.0)), ("affine 1.5 -> 0.5", WeightFunction.affine(1.5, 0.5))]:
    traj = simulate_hydro(state, w, dt=1e-2, t_end=20.0, sample_every=10)
    rep = envelope_check(traj, g0=0.5)
    rate = decay_rate(traj.times, traj.d_u)
    print(f"{label:18s} decay rate {rate:7.3f}  worst envelope ratio {rep.worst_ratio:.3f}"
          f"  sup d_x {rep.sup_dx:.3f} (bound {rep.dx_bound:.3f})")
