"""Monotone two-scale discretisation of the integral fractional Laplacian."""

from .assembly import (
    AssemblyError,
    MonotonicityReport,
    OperatorMatrix,
    assemble,
    dump_matrix,
    load_matrix,
    singular_stencil_row,
    tail_row,
    tail_weight_block,
    verify_monotone,
)
from .constants import KernelConstants, c_ns, kappa_constant, tail_kernel_mass
from .moments import (
    clip_triangle_minus_square,
    interval_kernel_moment,
    interval_tail_weights,
    polygon_area,
    polygon_kernel_moment,
    radial_moments,
)

__all__ = [
    "AssemblyError", "KernelConstants", "MonotonicityReport", "OperatorMatrix", "assemble",
    "c_ns", "clip_triangle_minus_square", "dump_matrix", "interval_kernel_moment",
    "interval_tail_weights", "kappa_constant", "load_matrix", "polygon_area",
    "polygon_kernel_moment", "radial_moments", "singular_stencil_row", "tail_kernel_mass",
    "tail_row", "tail_weight_block", "verify_monotone",
]
