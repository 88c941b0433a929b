"""Parameter-space normals of the margin manifold, and closest-point search.

At a regular margin point the transposed Jacobian has full column rank while
its non-parameter rows (the kernel matrix K) have a one-dimensional
nullspace.  Projecting that kernel vector through the parameter rows yields
the unique direction in parameter space orthogonal to the manifold — the
gradient direction of the leading real part.  The closest-point solver then
couples the defining equations, the kernel/projection equations and the
connection ``alpha_nominal = alpha + l * r`` into one square system whose
unknown ``l`` is the signed distance to the boundary.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateNormalError,
    DomainError,
    InputError,
    NonConvergenceError,
    NumericalError,
    RegularityError,
)
from .hopf_manifold import BMatrix, HopfSolution, _assemble, augmented_residual
from .model import ModelSpec, bundle_derivatives
from .numkernel import nullspace, solve_linear

SIGN_CONVENTION = "largest-magnitude-component-positive"
KERNEL_RTOL = 1e-8
DEGENERATE_NORM = 1e-12
CLOSEST_TOL = 1e-9
CLOSEST_MAX_ITER = 80


@dataclass(frozen=True)
class NormalVector:
    """Unit normal of the margin manifold in parameter space.

    ``kappa`` is the kernel vector it was projected from; the sign is fixed
    by making the largest-magnitude component of ``r`` positive (ties broken
    at the lowest index).
    """

    kappa: np.ndarray
    r: np.ndarray
    kernel_dim: int
    sign_convention: str = SIGN_CONVENTION


def _canonical_sign(r: np.ndarray) -> float:
    idx = int(np.argmax(np.abs(r)))
    return -1.0 if r[idx] < 0.0 else 1.0


def normal_vector(B: BMatrix, rtol: float = KERNEL_RTOL) -> NormalVector:
    """Kernel -> projection -> normalization, with the sign convention applied.

    Raises
    ------
    RegularityError
        If the kernel of the non-parameter rows is not one-dimensional.
    DegenerateNormalError
        If the projected direction is numerically zero.
    """
    ns = nullspace(B.kernel_rows(), rtol=rtol)
    if ns.dimension != 1:
        raise RegularityError(
            f"kernel of the reduced transposed Jacobian has dimension {ns.dimension}, "
            "expected 1; the point is not a regular margin point"
        )
    kappa = ns.basis[:, 0]
    r_raw = B.alpha_rows() @ kappa
    norm = float(np.linalg.norm(r_raw))
    if norm < DEGENERATE_NORM:
        raise DegenerateNormalError(
            "projected normal has numerically zero length; the manifold is "
            "degenerate in parameter space at this point"
        )
    sign = _canonical_sign(r_raw / norm)
    return NormalVector(
        kappa=sign * kappa,
        r=sign * r_raw / norm,
        kernel_dim=ns.dimension,
    )


def normal_at(model: ModelSpec, sol: HopfSolution) -> NormalVector:
    """Convenience wrapper: assemble the transposed Jacobian and project."""
    bundle = bundle_derivatives(model, sol.x_tilde, sol.alpha)
    return normal_vector(_assemble(bundle, sol.omega, sol.a, sol.b, sol.sigma))


@dataclass(frozen=True)
class ClosestPoint:
    """Result of the closest-boundary-point search.

    ``distance`` is the signed multiple of the unit normal connecting the
    boundary point to the nominal parameters: ``alpha_nominal =
    solution.alpha + distance * normal.r``.
    """

    solution: HopfSolution
    normal: NormalVector
    distance: float


def _closest_residual(model, sigma, alpha_nominal, y):
    """Stacked residual of the combined closest-point system."""
    n, n_alpha = model.n, model.n_alpha
    k = 3 * n + 2
    pos = 0
    x = y[pos : pos + n]; pos += n
    alpha = y[pos : pos + n_alpha]; pos += n_alpha
    omega = float(y[pos]); pos += 1
    a = y[pos : pos + n]; pos += n
    b = y[pos : pos + n]; pos += n
    kappa = y[pos : pos + k]; pos += k
    r = y[pos : pos + n_alpha]; pos += n_alpha
    ell = float(y[pos])

    bundle = bundle_derivatives(model, x, alpha)
    res = augmented_residual(model, x, alpha, omega, a, b, sigma, bundle=bundle)
    B = _assemble(bundle, omega, a, b, sigma)
    return np.concatenate(
        [
            res,
            B.kernel_rows() @ kappa,
            B.alpha_rows() @ kappa - r,
            [r @ r - 1.0],
            alpha_nominal - alpha - ell * r,
        ]
    )


def closest_boundary_point(
    model: ModelSpec,
    sigma: float,
    alpha_nominal,
    seed: HopfSolution,
    tol: float = CLOSEST_TOL,
    max_iter: int = CLOSEST_MAX_ITER,
) -> ClosestPoint:
    """Locally closest margin point to a nominal parameter vector.

    Solves the square system coupling the defining equations, the kernel and
    projection equations for the normal, the normalization ``r.r = 1`` and
    the connection ``alpha_nominal = alpha + l r`` by a damped Newton
    iteration with a finite-difference Jacobian.  The seed fixes which sheet
    and which stationary point of the distance the iteration lands on.

    Returns
    -------
    ClosestPoint
        With ``distance`` signed along the returned unit normal.
    """
    n, n_alpha = model.n, model.n_alpha
    alpha_nominal = np.asarray(alpha_nominal, dtype=float).reshape(n_alpha)

    bundle = bundle_derivatives(model, seed.x_tilde, seed.alpha)
    nv = normal_vector(_assemble(bundle, seed.omega, seed.a, seed.b, seed.sigma))
    ell0 = float(nv.r @ (alpha_nominal - seed.alpha))
    y = np.concatenate(
        [seed.x_tilde, seed.alpha, [seed.omega], seed.a, seed.b, nv.kappa, nv.r, [ell0]]
    )

    size = y.size
    F = _closest_residual(model, sigma, alpha_nominal, y)
    for _ in range(max_iter):
        norm = float(np.linalg.norm(F, np.inf))
        if norm <= tol:
            return _closest_result(model, sigma, alpha_nominal, y)
        J = np.empty((size, size))
        for j in range(size):
            h = 1e-6 * (1.0 + abs(y[j]))
            yp, ym = y.copy(), y.copy()
            yp[j] += h
            ym[j] -= h
            J[:, j] = (
                _closest_residual(model, sigma, alpha_nominal, yp)
                - _closest_residual(model, sigma, alpha_nominal, ym)
            ) / (2 * h)
        try:
            step = solve_linear(J, -F)
        except NumericalError:
            raise RegularityError("singular Jacobian in closest-point iteration") from None
        base = float(np.linalg.norm(F))
        t = 1.0
        while t >= 2.0 ** -30:
            try:
                trial = _closest_residual(model, sigma, alpha_nominal, y + t * step)
            except DomainError:
                t *= 0.5
                continue
            if float(np.linalg.norm(trial)) <= (1.0 - 1e-4 * t) * base:
                break
            t *= 0.5
        else:
            raise NonConvergenceError("closest-point line search stalled", residual=norm)
        y = y + t * step
        F = trial
    raise NonConvergenceError(
        f"closest-point Newton did not converge within {max_iter} iterations",
        residual=float(np.linalg.norm(F, np.inf)),
    )


def _closest_result(model, sigma, alpha_nominal, y) -> ClosestPoint:
    n, n_alpha = model.n, model.n_alpha
    k = 3 * n + 2
    pos = 0
    x = y[pos : pos + n].copy(); pos += n
    alpha = y[pos : pos + n_alpha].copy(); pos += n_alpha
    omega = float(y[pos]); pos += 1
    a = y[pos : pos + n].copy(); pos += n
    b = y[pos : pos + n].copy(); pos += n
    kappa = y[pos : pos + k].copy(); pos += k
    r = y[pos : pos + n_alpha].copy(); pos += n_alpha
    ell = float(y[pos])

    sign = _canonical_sign(r)
    kappa, r, ell = sign * kappa, sign * r, sign * ell

    res = augmented_residual(model, x, alpha, omega, a, b, sigma)
    sol = HopfSolution(
        x_tilde=x,
        alpha=alpha,
        sigma=float(sigma),
        omega=omega,
        a=a,
        b=b,
        residual_norm=float(np.linalg.norm(res, np.inf)),
    )
    # confirm regularity of the converged point before reporting the normal
    bundle = bundle_derivatives(model, x, alpha)
    B = _assemble(bundle, omega, a, b, sigma)
    ns = nullspace(B.kernel_rows())
    if ns.dimension != 1:
        raise RegularityError(
            f"closest point converged on a non-regular point (kernel dimension {ns.dimension})"
        )
    nv = NormalVector(kappa=kappa, r=r, kernel_dim=1)
    return ClosestPoint(solution=sol, normal=nv, distance=ell)
