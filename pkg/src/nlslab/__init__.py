"""nlslab: a numerical laboratory for a two-component nonlinear Schroedinger
energy with transverse harmonic confinement.

Grids and fields live in fields; the coupled functional and its gradient in
energy; per-column rearrangements in rearrange; constrained minimization and
its probes in variational; confined-operator ground energies in spectral;
time propagation and the stability experiment in dynamics; property suites in
checks; configuration, persistence and the CLI in harness and cli.
"""

from .descent import SolverOptions
from .dynamics import PropagatorConfig, Trajectory, evolve, stability_experiment
from .energy import (EnergyBreakdown, GNExponent, ModelParams, Multipliers,
                     el_gradient, energy_pair, energy_single, gn_ratio,
                     multipliers, validate)
from .errors import NumericalError, ValidationError
from .fields import (GridSpec, ScalarField, StatePair, dirichlet_energy,
                     h_norm_sq, h_seminorm_sq, is_boundary_clean, load_field,
                     lp_norm_p, mass, mixed_integral, potential_moment,
                     recenter_x3, save_field, strip_masses, translate_x3)
from .harness import RunConfig, RunRecord, run, sweep
from .rearrange import coupled_x3, rearrangement_report, steiner_x3
from .spectral import GroundState, TransverseGrid, ground_2d, ground_3d
from .variational import (MinimizationResult, ScalingCurve, component_bound_check,
                          minimize_pair, minimize_single, project_mass,
                          scaling_probe, subadd_probe, theta_scaling_check)

__version__ = "0.1.0"
