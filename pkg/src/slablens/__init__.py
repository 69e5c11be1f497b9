"""Design of periodic dielectric slabs that focus a point source below
the diffraction limit.

Quasi-periodic Helmholtz transmission problems on one period of the slab
are solved with bilinear finite elements and Fourier-diagonal
transparent boundary maps; an image-mismatch objective over the Floquet
parameter is minimized by projected gradient descent with discrete
adjoint gradients.
"""

from .adjoint import (GradientField, directional_derivative,
                      fd_gradient_check, gradient, solve_adjoint)
from .analysis import (EnergyBalance, ImageMetrics, coercivity_constant,
                       energy_balance, evanescent_overlap,
                       evanescent_spectrum, focal_line, h1_bound,
                       reconstruct_below, spot_size)
from .config import (ConfigError, ExperimentConfig, parse_config,
                     parse_config_text, problem_from_config)
from .domain import (AdmissibleBounds, DesignField, Grid, initial_design,
                     load_design, project_to_admissible, save_design,
                     symmetrize_x)
from .dtn import DtnMatrix, build_dtn, default_n_trunc
from .numerics import (ModeExponent, WoodAnomalyError, beta, beta_array,
                       hankel1_0, hat_trace_fourier, where_wood)
from .objective import (AlphaQuadrature, evaluate_J, make_quadrature,
                        reduce_records)
from .optimize import (OptimizerState, descent_step, kkt_residual,
                       kkt_violation_field, run)
from .pipeline import (AlphaRecord, ProblemSetup, build_setup, forward_sweep,
                       gradient_sweep)
from .solver import (AssembledSystem, FloquetSolution, SolverError, assemble,
                     extract_trace, h1_norm, l2_norm, load_field, mass_matrix,
                     save_field, solve_forward, stiffness_matrix)
from .source import (ModalTrace, incident_dirichlet_trace,
                     incident_neumann_trace, load_trace, save_trace,
                     synthesize, synthesize_fold, target_dirichlet_trace,
                     trace_norm)

__version__ = "0.1.0"

__all__ = [
    "AdmissibleBounds", "AlphaQuadrature", "AlphaRecord", "AssembledSystem",
    "ConfigError", "DesignField", "DtnMatrix", "EnergyBalance",
    "ExperimentConfig", "FloquetSolution", "GradientField", "Grid",
    "ImageMetrics", "ModalTrace", "ModeExponent", "OptimizerState",
    "ProblemSetup", "SolverError", "WoodAnomalyError", "assemble",
    "beta", "beta_array", "build_dtn", "build_setup", "coercivity_constant",
    "default_n_trunc", "descent_step", "directional_derivative",
    "energy_balance", "evaluate_J",
    "evanescent_overlap", "evanescent_spectrum", "extract_trace",
    "fd_gradient_check", "focal_line", "forward_sweep", "gradient",
    "gradient_sweep", "h1_bound", "h1_norm", "hankel1_0",
    "hat_trace_fourier", "incident_dirichlet_trace", "incident_neumann_trace",
    "initial_design", "kkt_residual", "kkt_violation_field", "l2_norm",
    "load_design", "load_field", "load_trace", "make_quadrature",
    "mass_matrix", "parse_config", "parse_config_text",
    "problem_from_config", "project_to_admissible", "reconstruct_below",
    "reduce_records", "run", "save_design", "save_field", "save_trace",
    "solve_adjoint",
    "solve_forward", "spot_size", "stiffness_matrix", "symmetrize_x",
    "synthesize", "synthesize_fold", "target_dirichlet_trace", "trace_norm",
    "where_wood",
]
