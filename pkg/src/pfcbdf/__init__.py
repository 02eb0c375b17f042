"""BDF-k time stepping for the phase field crystal equation, with tools that check
the kernel identities, gradient structures and eigenvalue bounds behind it."""
from .kernels import InvalidOrderError, bdf_kernels, doc_kernels, verify_orthogonality
from .gradient_structure import SIGMA_L, structure, verify_identity
from .spectral import Grid2D
from .solver import PFCSolver, SolverConfig, run

__version__ = "0.1.0"

__all__ = [
    "InvalidOrderError", "bdf_kernels", "doc_kernels", "verify_orthogonality",
    "SIGMA_L", "structure", "verify_identity", "Grid2D",
    "PFCSolver", "SolverConfig", "run",
]
