"""exactlie: exact rational computations for graded Lie algebra prolongations,
presymplectic Grassmannians and their model projective varieties."""

from .exactq import Fraction, Matrix, Subspace, kernel_basis, column_space, rank

__all__ = [
    "Fraction",
    "Matrix",
    "Subspace",
    "kernel_basis",
    "column_space",
    "rank",
]

__version__ = "0.1.0"
