"""Characteristic roots of the linearization at a steady state.

The linearization at a steady state has characteristic matrix

    M(lam) = lam I - A_0 - sum_i A_i exp(-lam tau_i)

with the delays frozen at their steady-state values (state dependence of a
delay contributes nothing at an equilibrium).  Roots are located in two
stages: a Chebyshev collocation of the solution operator's generator on
``[-tau_max, 0]`` supplies eigenvalue seeds, and each seed is polished by a
damped Newton iteration on ``det M(lam) = 0``.  The Newton step uses the
trace identity ``(det M)' / det M = tr(M^{-1} M')`` so no determinant
differencing is ever needed; acceptance is monotone in ``|det|``.

Only roots to the right of ``-2 / tau_max`` are reported: collocation
eigenvalues further left are unreliable at moderate grid sizes.
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError, NumericalError, RootRefinementWarning
from .model import DerivativeBundle
from .numkernel import dense_eigs, dense_eigvals
from .steady import SteadyPoint

DEFAULT_ORDER = 20
DET_TOL = 1e-8
MERGE_DISTANCE = 1e-6
_IMAG_CUTOFF = 1e-8  # below this, a root counts as real for pair selection


@dataclass(frozen=True)
class CharRoot:
    """One characteristic root with its eigenvector and residual.

    ``vector`` is normalized so the stacked real and imaginary parts have
    unit Euclidean norm; ``residual`` is ``||M(value) vector||``.
    """

    value: complex
    vector: np.ndarray
    residual: float


def characteristic_matrix(A, taus, lam: complex) -> np.ndarray:
    """Evaluate M(lam) = lam I - sum_i A_i exp(-lam tau_i)."""
    n = A[0].shape[0]
    M = lam * np.eye(n, dtype=complex)
    for Ai, tau in zip(A, taus):
        M -= Ai * np.exp(-lam * tau)
    return M


def characteristic_determinant(A, taus, lam: complex) -> complex:
    """det M(lam); the defining scalar equation for characteristic roots."""
    return complex(np.linalg.det(characteristic_matrix(A, taus, lam)))


def _characteristic_derivative_matrix(A, taus, lam: complex) -> np.ndarray:
    """d/dlam of the characteristic matrix."""
    n = A[0].shape[0]
    Mp = np.eye(n, dtype=complex)
    for Ai, tau in zip(A, taus):
        Mp += tau * Ai * np.exp(-lam * tau)
    return Mp


def _chebyshev_nodes_diff(order: int, span: float):
    """Chebyshev-Lobatto nodes mapped to [-span, 0] and the differentiation
    matrix on them (first node is 0)."""
    k = np.arange(order + 1)
    x = np.cos(np.pi * k / order)
    c = np.hstack([2.0, np.ones(order - 1), 2.0]) * (-1.0) ** k
    X = np.tile(x, (order + 1, 1)).T
    dX = X - X.T
    D = np.outer(c, 1.0 / c) / (dX + np.eye(order + 1))
    D -= np.diag(D.sum(axis=1))
    theta = (x - 1.0) * span / 2.0
    return theta, D * (2.0 / span)


def _interp_weights(theta: np.ndarray, target: float) -> np.ndarray:
    """Barycentric interpolation weights evaluating at ``target``."""
    N = theta.size - 1
    w = (-1.0) ** np.arange(N + 1)
    w[0] *= 0.5
    w[N] *= 0.5
    diff = target - theta
    exact = np.nonzero(np.abs(diff) <= 1e-14 * max(1.0, abs(target)))[0]
    if exact.size:
        out = np.zeros(N + 1)
        out[exact[0]] = 1.0
        return out
    terms = w / diff
    return terms / terms.sum()


def _collocation_matrix(A, taus, order: int) -> np.ndarray:
    """Generator discretization whose eigenvalues seed the root search."""
    n = A[0].shape[0]
    span = float(np.max(taus))
    theta, D = _chebyshev_nodes_diff(order, span)
    size = n * (order + 1)
    M = np.zeros((size, size))
    # interior and left-end rows: differentiation of the history segment
    M[n:, :] = np.kron(D[1:, :], np.eye(n))
    # first block row: the delay-differential right-hand side at theta = 0
    for Ai, tau in zip(A, taus):
        weights = _interp_weights(theta, -tau)
        for j, w in enumerate(weights):
            if w != 0.0:
                M[:n, j * n : (j + 1) * n] += w * Ai
    return M


def _refine_root(A, taus, seed: complex, max_iter: int = 50) -> complex | None:
    """Damped Newton on det M(lam) = 0; returns None on divergence."""
    lam = complex(seed)
    det = characteristic_determinant(A, taus, lam)
    for _ in range(max_iter):
        if abs(det) == 0.0:
            return lam
        M = characteristic_matrix(A, taus, lam)
        Mp = _characteristic_derivative_matrix(A, taus, lam)
        try:
            trace = np.trace(np.linalg.solve(M, Mp))
        except np.linalg.LinAlgError:
            # exactly singular: lam already is a root to machine precision
            return lam
        if trace == 0.0 or not np.isfinite(trace):
            return None
        step = -1.0 / trace
        # backtrack until |det| decreases
        t = 1.0
        for _ in range(25):
            trial = lam + t * step
            trial_det = characteristic_determinant(A, taus, trial)
            if abs(trial_det) < abs(det):
                break
            t *= 0.5
        else:
            # no decrease possible: converged to numerical floor
            return lam if abs(step) <= 1e-9 * (1.0 + abs(lam)) else None
        lam, det = trial, trial_det
        if abs(t * step) <= 1e-13 * (1.0 + abs(lam)):
            return lam
    return lam if abs(det) <= DET_TOL else None


def _null_vector(M: np.ndarray):
    """Smallest right singular vector and singular value of a complex matrix."""
    try:
        _, s, Vh = np.linalg.svd(M)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD of characteristic matrix failed: {exc}") from None
    v = Vh[-1].conj()
    return v / np.linalg.norm(v), float(s[-1])


def char_roots(point: SteadyPoint, bundle: DerivativeBundle, order: int = DEFAULT_ORDER) -> list[CharRoot]:
    """Characteristic roots within the reliability window.

    Parameters
    ----------
    point : SteadyPoint
        Supplies the frozen delay values.
    bundle : DerivativeBundle
        Supplies the per-argument Jacobians at the steady state.
    order : int
        Chebyshev grid order (>= 5).  Roots are refined afterwards, so the
        returned values are grid-independent to roughly machine precision.

    Returns
    -------
    list of CharRoot, sorted by descending real part.
    """
    if order < 5:
        raise InputError(f"collocation order must be at least 5, got {order}")
    A = [np.asarray(Ai, dtype=float) for Ai in bundle.A]
    taus = np.asarray(point.tau_values, dtype=float)
    tau_max = float(np.max(taus))

    if tau_max <= 1e-14:
        # no effective delay: ordinary eigenvalue problem for sum(A)
        pairs = dense_eigs(np.sum(A, axis=0))
        roots = []
        for p in pairs:
            v = p.vector / np.linalg.norm(p.vector)
            res = float(np.linalg.norm(characteristic_matrix(A, taus, p.value) @ v))
            roots.append(CharRoot(value=p.value, vector=v, residual=res))
        return roots

    window = -2.0 / tau_max
    seeds = [complex(z) for z in dense_eigvals(_collocation_matrix(A, taus, order)) if z.real > window]

    refined: list[complex] = []
    for seed in seeds:
        lam = _refine_root(A, taus, seed)
        if lam is None or not np.isfinite(lam):
            warnings.warn(
                f"dropped characteristic-root seed {seed:.6g}: refinement diverged",
                RootRefinementWarning,
                stacklevel=2,
            )
            continue
        if lam.real <= window:
            continue
        if abs(characteristic_determinant(A, taus, lam)) > DET_TOL:
            warnings.warn(
                f"dropped characteristic-root seed {seed:.6g}: refinement stalled",
                RootRefinementWarning,
                stacklevel=2,
            )
            continue
        refined.append(lam)

    # merge duplicates
    merged: list[complex] = []
    for lam in sorted(refined, key=lambda z: (-z.real, -z.imag)):
        if all(abs(lam - known) > MERGE_DISTANCE for known in merged):
            merged.append(lam)

    roots = []
    for lam in merged:
        v, sigma_min = _null_vector(characteristic_matrix(A, taus, lam))
        if sigma_min > DET_TOL:
            warnings.warn(
                f"dropped root {lam:.6g}: eigenvector residual {sigma_min:.3e}",
                RootRefinementWarning,
                stacklevel=2,
            )
            continue
        roots.append(CharRoot(value=lam, vector=v, residual=sigma_min))
    roots.sort(key=lambda r: (-r.value.real, -r.value.imag))
    return roots


def leading_pair(roots: list[CharRoot], tie_tol: float = 1e-10) -> CharRoot:
    """The rightmost oscillatory root, represented with positive imaginary part.

    Among roots with ``Im > 1e-8``, picks the one with the largest real part;
    real-part ties within ``tie_tol`` are broken by the smaller imaginary
    part (the slowest oscillation).
    """
    candidates = [r for r in roots if r.value.imag > _IMAG_CUTOFF]
    if not candidates:
        raise DomainError("spectrum has no oscillatory root; no leading pair exists")
    best_re = max(r.value.real for r in candidates)
    tied = [r for r in candidates if r.value.real >= best_re - tie_tol]
    return min(tied, key=lambda r: r.value.imag)
