"""Dense linear algebra: pivoted LU solves and spectral helpers.

Everything in this package is desk scale (a few hundred unknowns), so
dense factorizations are the uniform backend.
"""

import warnings

import numpy as np
import scipy.linalg

from .errors import SingularMatrixError

PIVOT_TOLERANCE = 1e-14


class DenseLU:
    """LU factorization with partial pivoting, reusable for repeated solves.

    Raises :class:`SingularMatrixError` when a pivot magnitude falls below
    the absolute tolerance 1e-14.
    """

    def __init__(self, A):
        A = np.asarray(A, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError("expected a square matrix")
        self.shape = A.shape
        with warnings.catch_warnings():
            # the pivot check below turns exact singularity into our own error
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            self.lu, self.piv = scipy.linalg.lu_factor(A, check_finite=False)
        pivots = np.abs(np.diag(self.lu))
        if self.shape[0] and pivots.min() < PIVOT_TOLERANCE:
            raise SingularMatrixError(
                f"pivot {pivots.min():.3e} below tolerance {PIVOT_TOLERANCE:g} "
                f"in {self.shape[0]}x{self.shape[1]} system"
            )

    def solve(self, b, transpose=False):
        b = np.asarray(b, dtype=float)
        return scipy.linalg.lu_solve(
            (self.lu, self.piv), b, trans=1 if transpose else 0, check_finite=False
        )


def dense_solve(A, b):
    """Solve A x = b by pivoted LU."""
    return DenseLU(A).solve(b)


def spd_inverse_sqrt(G, tol=1e-12):
    """G^{-1/2} of a symmetric positive definite Gram matrix.

    Raises ``ValueError`` when G is not (numerically) positive definite.
    """
    G = np.asarray(G, dtype=float)
    evals, evecs = scipy.linalg.eigh(G)
    if evals.min() <= tol * max(evals.max(), 1e-300):
        raise ValueError("Gram matrix is not positive definite")
    return (evecs / np.sqrt(evals)) @ evecs.T


def range_complement(B, tol=1e-12):
    """Orthonormal basis of the orthogonal complement of range(B).

    Rank is revealed by a column-pivoted QR with relative tolerance.
    """
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if B.shape[1] == 0:
        return np.eye(B.shape[0])
    Q, R, _ = scipy.linalg.qr(B, pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > tol * max(diag[0], 1e-300))) if diag.size else 0
    return Q[:, rank:]


def nullspace(B, tol=1e-12):
    """Orthonormal basis of the null space {x : Bx = 0}."""
    return range_complement(np.atleast_2d(np.asarray(B, dtype=float)).T, tol)
