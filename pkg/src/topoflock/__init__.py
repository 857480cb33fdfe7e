"""Flocking with rank-based (topological) interactions."""

from .core import (AgentEnsemble, Topology, WeightFunction, communication_matrix,
                   normalized_separation, rank_all, rank_table, relative_separation)
from .diagnostics import (DiagnosticsSeries, check_flocking, check_hull_contraction,
                          check_position_bound, compute_series, momentum_drift)
from .dynamics import (ChatteringError, SimulationError, SwitchLog, Trajectory, rhs,
                       simulate, simulate_fixed_topology, step)
from .graph import (ConnectivityReport, ConsensusCertificate, left_null_vector,
                    predict_consensus, strongly_connected_components)
from .hydro import HydroState, local_average, mass_rank_separation, envelope_check, prop2_check, simulate_hydro
from .meanfield import (EmpiricalMeasure, Mollifier, kinetic_field, simulate_meanfield_particles,
                        smoothed_separation, wasserstein1)
from .scenarios import (ReturnMapRecord, analytic_example1, return_map_iterate, return_time,
                        scenario_example1, scenario_example2, scenario_example3)
from .swarm import (SwarmParams, morse_potential, pattern_metrics, repulsion_force, rhs_swarm,
                    simulate_swarm)

__version__ = "0.1.0"
