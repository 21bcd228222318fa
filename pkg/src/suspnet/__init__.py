"""Discrete network approximation of the viscous dissipation rate of dense
2D disk suspensions in Stokes flow.

The pipeline: `geometry` builds the neck/cell network of a disk
configuration, `network_qp` assembles the per-neck lubrication dissipation
form and the weak incompressibility constraints, `solver` minimizes the form
over the admissible states, and `scenarios` drives the reference experiments
(hexagonal arrays, boundary layers, pinning fields, delta sweeps).  The
`lubrication` module holds the underlying per-neck trial fields, quadrature
oracles and dual lower bounds from which every closed-form coefficient in
`coefficients` was derived and is re-verified.
"""

from .coefficients import CoefficientTable, coeff_B, coeff_C
from .geometry import (DiskConfig, DiskNetwork, DomainRect, build_network,
                       interparticle_gap, local_frame, validate_close_packing)
from .lubrication import (GapFunction, TrialFieldSpec, closed_form_W,
                          dual_bound_quadrature, gap,
                          trial_dissipation_quadrature, verify_coefficients)
from .network_qp import (BoundaryData, DiscreteState, assemble_Q,
                         assemble_constraints, beta_transform,
                         beta_transform_inverse, boundary_flux,
                         boundary_values, evaluate_Q, microflow_split)
from .scenarios import (ExponentFit, Scenario, SweepTable, fit_exponent,
                        gen_hexagonal, gen_jittered_hex, gen_pinning_strip,
                        gen_single_disk_boundary_layer, korn_check, run_sweep)
from .solver import (SolveResult, check_positive_definite, pinned_solve,
                     solve, solve_network)

__version__ = "0.1.0"
