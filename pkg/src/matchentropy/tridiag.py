"""Tridiagonal linear solves by direct elimination (LAPACK banded solver)."""

import numpy as np
import scipy.linalg

from .errors import NumericalError


def solve_tridiagonal(sub: np.ndarray, diag: np.ndarray, sup: np.ndarray,
                      rhs: np.ndarray) -> np.ndarray:
    """Solve the system with subdiagonal `sub`, diagonal `diag`, superdiagonal `sup`.

    sub[i] couples row i+1 to column i; sup[i] couples row i to column i+1.
    All systems in this package are strictly diagonally dominant M-matrices,
    so elimination is unconditionally stable; a zero pivot is still checked.
    """
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = sup
    ab[1, :] = diag
    ab[2, :-1] = sub
    try:
        return scipy.linalg.solve_banded((1, 1), ab, rhs, check_finite=False)
    except scipy.linalg.LinAlgError as exc:  # pragma: no cover - defensive
        raise NumericalError(f"tridiagonal solve failed (zero pivot?): {exc}") from exc
