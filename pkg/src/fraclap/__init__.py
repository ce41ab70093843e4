"""Monotone two-scale finite differences for the integral fractional Laplacian."""

from .analysis import (ConvergenceReport, SchemeConfig, exact_solution_ball, expected_rate, fit_rate,
                       nodal_error, optimal_alpha, optimal_mu, run_convergence_study)
from .mesh import (Mesh, MeshError, MeshFormatError, NodeClassification, ShapeReport, build_disk_mesh,
                   build_interval_mesh, classify_nodes, compute_shape_constants, export_mesh, import_mesh,
                   locate_point)
from .operator import (OperatorMatrix, assemble, clip_triangle_minus_square, interval_kernel_moment,
                       kappa_constant, polygon_kernel_moment, singular_stencil_row, tail_kernel_mass,
                       tail_row, verify_monotone)
from .solver import DiscreteSolution, SolverError, solve_direct, solve_iterative

__version__ = "0.1.0"
