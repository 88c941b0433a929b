"""Dense linear-algebra kernels shared by every solver in the package.

Thin, contract-bearing wrappers around LAPACK (through ``numpy.linalg``):
linear solve, least squares, SVD, orthonormal nullspace extraction and the
dense eigenvalue decomposition.  All failures surface as package exceptions
so callers never have to catch numpy's.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError

DEFAULT_RANK_RTOL = 1e-8
EIG_RESIDUAL_TOL = 1e-8


@dataclass(frozen=True)
class NullspaceResult:
    """Orthonormal nullspace basis of a matrix.

    ``basis`` has one column per kernel direction; ``singular_values`` are all
    singular values of the input; ``rank_tolerance`` is the absolute cutoff
    that was applied (``rtol * sigma_max``).
    """

    basis: np.ndarray
    singular_values: np.ndarray
    rank_tolerance: float

    @property
    def dimension(self) -> int:
        return self.basis.shape[1]


def _as_matrix(M) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise InputError(f"expected a nonempty 2-d matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NumericalError("matrix contains NaN or Inf entries")
    return M


def solve_linear(A, b) -> np.ndarray:
    """Solve the square system A z = b."""
    A = _as_matrix(A)
    b = np.asarray(b, dtype=float)
    try:
        return np.linalg.solve(A, b)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"linear solve failed: {exc}") from None


def least_squares(A, b) -> np.ndarray:
    """Minimum-norm least-squares solution of A z = b."""
    A = _as_matrix(A)
    b = np.asarray(b, dtype=float)
    try:
        z, *_ = np.linalg.lstsq(A, b, rcond=None)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"least squares failed: {exc}") from None
    return z


def svd(M):
    """Full singular value decomposition U, s, Vh."""
    M = _as_matrix(M)
    try:
        return np.linalg.svd(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD failed: {exc}") from None


def nullspace(M, rtol: float = DEFAULT_RANK_RTOL) -> NullspaceResult:
    """Orthonormal basis of the kernel of M.

    Singular values at or below ``rtol * sigma_max`` count as zero, so the
    returned dimension is ``n_columns - rank``.
    """
    M = _as_matrix(M)
    _, s, Vh = svd(M)
    sigma_max = s[0] if s.size else 0.0
    cutoff = rtol * sigma_max
    rank = int(np.count_nonzero(s > cutoff))
    basis = Vh[rank:].T
    return NullspaceResult(basis=np.ascontiguousarray(basis), singular_values=s, rank_tolerance=cutoff)


@dataclass(frozen=True)
class Eigenpair:
    """One eigenvalue with its (unit-norm) right eigenvector."""

    value: complex
    vector: np.ndarray


def _eig_sort_key(value: complex):
    # descending real part; conjugate pairs adjacent with +imag first
    return (-value.real, -value.imag)


def dense_eigs(M) -> list[Eigenpair]:
    """Full eigendecomposition with verified residuals.

    Returns pairs sorted by descending real part.  Each residual
    ``||M v - lambda v|| / ||v||`` is checked against ``1e-8``; a violation
    raises :class:`NumericalError` rather than returning bad pairs.
    """
    M = _as_matrix(M)
    try:
        values, vectors = np.linalg.eig(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from None
    order = sorted(range(values.size), key=lambda k: _eig_sort_key(values[k]))
    pairs = []
    for k in order:
        v = vectors[:, k]
        residual = float(np.linalg.norm(M @ v - values[k] * v) / np.linalg.norm(v))
        if residual > EIG_RESIDUAL_TOL:
            raise NumericalError(
                f"eigenpair residual {residual:.3e} exceeds tolerance for eigenvalue {values[k]}"
            )
        pairs.append(Eigenpair(value=complex(values[k]), vector=v))
    return pairs


def dense_eigvals(M) -> np.ndarray:
    """Eigenvalues only (no residual contract), sorted by descending real part.

    Used where eigenvalues merely seed a downstream refinement.
    """
    M = _as_matrix(M)
    try:
        values = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigenvalue computation failed: {exc}") from None
    return np.array(sorted(values, key=_eig_sort_key))
