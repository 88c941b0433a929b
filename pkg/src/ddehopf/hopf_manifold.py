"""Margin points: steady states whose leading eigenpair has a prescribed
real part, and curves of such points in parameter space.

A margin point at level ``sigma`` bundles a steady state ``x_tilde``, a
frequency ``omega > 0`` and a real/imaginary eigenvector split ``(a, b)``
such that ``sigma + i omega`` is a characteristic root with eigenvector
``a + i b``.  Writing ``s_i = exp(-sigma tau_i) sin(omega tau_i)`` and
``c_i = exp(-sigma tau_i) cos(omega tau_i)``, the defining residual stacks

* the steady-state equations        ``f(x, ..., x, alpha) = 0``          (n)
* the real eigen-equations          ``sigma a - omega b - sum_i A_i (c_i a + s_i b) = 0``   (n)
* the imaginary eigen-equations     ``omega a + sigma b - sum_i A_i (c_i b - s_i a) = 0``   (n)
* the normalization                 ``a.a + b.b - 1 = 0``                 (1)
* the phase anchor                  ``a.b = 0``                           (1)

in the unknowns ``(x_tilde, alpha, omega, a, b)``.  With ``n_alpha``
parameters the solution set is generically a manifold of dimension
``n_alpha - 1``.

:class:`BMatrix` holds the transposed Jacobian of this residual in closed
form.  Its rows are grouped by variable (x, a, b, omega, alpha) and its
columns by equation; every block is assembled from the derivative bundle, so
the only model information needed beyond first derivatives is the pair of
second-derivative contractions.  The first ``3n + 1`` rows (everything but
the parameter rows) form the kernel matrix whose one-dimensional nullspace
yields the parameter-space normal (see :mod:`ddehopf.normalvec`).
"""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    ContinuationStalledError,
    DomainError,
    InputError,
    LeadingPairDriftWarning,
    NonConvergenceError,
    NumericalError,
    RegularityError,
)
from .model import DerivativeBundle, ModelSpec, bundle_derivatives
from .numkernel import least_squares, nullspace, solve_linear, svd
from .spectrum import char_roots, leading_pair
from .steady import SteadyPoint, solve_steady

HOPF_TOL = 1e-12
HOPF_MAX_ITER = 50
CORRECTOR_MAX_ITER = 20
MIN_STEP_FRACTION = 1.0 / 64.0
DRIFT_TOL = 1e-6


@dataclass(frozen=True)
class TrigWeights:
    """Exponentially damped trig factors, one per delay.

    ``s[i] = exp(-sigma tau_i) sin(omega tau_i)`` and likewise ``c[i]`` with
    the cosine; the zero delay always contributes ``s[0] = 0, c[0] = 1``
    exactly.  They satisfy ``s^2 + c^2 = exp(-2 sigma tau)``.
    """

    s: np.ndarray
    c: np.ndarray


def trig_weights(sigma: float, omega: float, taus) -> TrigWeights:
    taus = np.asarray(taus, dtype=float)
    decay = np.exp(-sigma * taus)
    return TrigWeights(s=decay * np.sin(omega * taus), c=decay * np.cos(omega * taus))


@dataclass(frozen=True)
class HopfSolution:
    """A converged margin point."""

    x_tilde: np.ndarray
    alpha: np.ndarray
    sigma: float
    omega: float
    a: np.ndarray
    b: np.ndarray
    residual_norm: float


def augmented_residual(
    model: ModelSpec,
    x_tilde,
    alpha,
    omega: float,
    a,
    b,
    sigma: float,
    bundle: DerivativeBundle | None = None,
) -> np.ndarray:
    """Stacked defining residual; length ``3 n + 2``.

    The optional ``bundle`` skips re-evaluating derivatives when the caller
    already holds them for this exact point.
    """
    x = np.asarray(x_tilde, dtype=float).reshape(model.n)
    alpha = np.asarray(alpha, dtype=float).reshape(model.n_alpha)
    a = np.asarray(a, dtype=float).reshape(model.n)
    b = np.asarray(b, dtype=float).reshape(model.n)
    if bundle is None:
        bundle = bundle_derivatives(model, x, alpha)
    tw = trig_weights(sigma, omega, bundle.tau_values)

    from .model import evaluate_rhs

    steady = evaluate_rhs(model, [x] * (model.m + 1), alpha)
    eig_re = sigma * a - omega * b
    eig_im = omega * a + sigma * b
    for Ai, si, ci in zip(bundle.A, tw.s, tw.c):
        eig_re -= Ai @ (ci * a + si * b)
        eig_im -= Ai @ (ci * b - si * a)
    return np.concatenate(
        [steady, eig_re, eig_im, [a @ a + b @ b - 1.0], [a @ b]]
    )


_BLOCK_NAMES = (
    ("B11", "B12", "B13", "B14", "B15"),
    ("B21", "B22", "B23", "B24", "B25"),
    ("B31", "B32", "B33", "B34", "B35"),
    ("B41", "B42", "B43", "B44", "B45"),
    ("B51", "B52", "B53", "B54", "B55"),
)


@dataclass(frozen=True)
class BMatrix:
    """Transposed Jacobian of the defining residual, stored blockwise.

    Block rows follow the variables ``(x, a, b, omega, alpha)`` and block
    columns the equations (steady, real eigen, imaginary eigen,
    normalization, phase).  ``B{r}{c}`` names row ``r`` and column ``c``,
    both 1-based.
    """

    B11: np.ndarray
    B12: np.ndarray
    B13: np.ndarray
    B14: np.ndarray
    B15: np.ndarray
    B21: np.ndarray
    B22: np.ndarray
    B23: np.ndarray
    B24: np.ndarray
    B25: np.ndarray
    B31: np.ndarray
    B32: np.ndarray
    B33: np.ndarray
    B34: np.ndarray
    B35: np.ndarray
    B41: np.ndarray
    B42: np.ndarray
    B43: np.ndarray
    B44: np.ndarray
    B45: np.ndarray
    B51: np.ndarray
    B52: np.ndarray
    B53: np.ndarray
    B54: np.ndarray
    B55: np.ndarray
    n: int
    n_alpha: int

    def block(self, row: int, col: int) -> np.ndarray:
        return getattr(self, f"B{row}{col}")

    @property
    def assembled(self) -> np.ndarray:
        """The full (3n + n_alpha + 1) x (3n + 2) matrix."""
        return np.block([[self.block(r + 1, c + 1) for c in range(5)] for r in range(5)])

    def kernel_rows(self) -> np.ndarray:
        """Rows for (x, a, b, omega): the matrix whose nullspace gives the
        parameter-space normal direction."""
        return self.assembled[: 3 * self.n + 1, :]

    def alpha_rows(self) -> np.ndarray:
        """The parameter rows used to project the kernel into alpha space."""
        return self.assembled[3 * self.n + 1 :, :]


def assemble_B(bundle: DerivativeBundle, sol: HopfSolution) -> BMatrix:
    """Assemble the transposed Jacobian at a margin point.

    ``bundle`` must be evaluated at ``(sol.x_tilde, sol.alpha)``.  The block
    formulas are exact derivatives of :func:`augmented_residual` at any
    point, so this is also the Newton matrix used by the solvers.
    """
    return _assemble(bundle, sol.omega, sol.a, sol.b, sol.sigma)


def _assemble(bundle: DerivativeBundle, omega: float, a, b, sigma: float) -> BMatrix:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    n = a.size
    n_alpha = bundle.grad_alpha_f.shape[0]
    taus = bundle.tau_values
    tw = trig_weights(sigma, omega, taus)

    eye = np.eye(n)
    B22 = sigma * eye.copy()
    B23 = omega * eye.copy()
    B42 = -b.copy()
    B43 = a.copy()
    B12 = np.zeros((n, n))
    B13 = np.zeros((n, n))
    B52 = np.zeros((n_alpha, n))
    B53 = np.zeros((n_alpha, n))

    for i, (Ai, si, ci, tau) in enumerate(zip(bundle.A, tw.s, tw.c, taus)):
        At = Ai.T
        B22 -= ci * At
        B23 += si * At
        # row vectors (A_i (c a + s b))', (A_i (s a - c b))', etc.
        u = Ai @ (ci * a + si * b)
        w = Ai @ (si * a - ci * b)
        p = Ai @ (ci * b - si * a)
        q = Ai @ (si * b + ci * a)
        B42 += tau * w
        B43 += tau * q
        gx = bundle.grad_x_tau[i]
        ga = bundle.grad_alpha_tau[i]
        B12 += np.outer(gx, sigma * u + omega * w)
        B13 += np.outer(gx, sigma * p + omega * q)
        B52 += np.outer(ga, sigma * u + omega * w)
        B53 += np.outer(ga, sigma * p + omega * q)
        B12 -= ci * bundle.hess_x(a, i) + si * bundle.hess_x(b, i)
        B13 -= ci * bundle.hess_x(b, i) - si * bundle.hess_x(a, i)
        B52 -= ci * bundle.hess_alpha(a, i) + si * bundle.hess_alpha(b, i)
        B53 -= ci * bundle.hess_alpha(b, i) - si * bundle.hess_alpha(a, i)

    zeros_n1 = np.zeros((n, 1))
    return BMatrix(
        B11=bundle.grad_x_f.copy(),
        B12=B12,
        B13=B13,
        B14=zeros_n1.copy(),
        B15=zeros_n1.copy(),
        B21=np.zeros((n, n)),
        B22=B22,
        B23=B23,
        B24=(2.0 * a).reshape(n, 1),
        B25=b.reshape(n, 1).copy(),
        B31=np.zeros((n, n)),
        B32=-B23.copy(),
        B33=B22.copy(),
        B34=(2.0 * b).reshape(n, 1),
        B35=a.reshape(n, 1).copy(),
        B41=np.zeros((1, n)),
        B42=B42.reshape(1, n),
        B43=B43.reshape(1, n),
        B44=np.zeros((1, 1)),
        B45=np.zeros((1, 1)),
        B51=bundle.grad_alpha_f.copy(),
        B52=B52,
        B53=B53,
        B54=np.zeros((n_alpha, 1)),
        B55=np.zeros((n_alpha, 1)),
        n=n,
        n_alpha=n_alpha,
    )


# ---------------------------------------------------------------------------
# point solver
# ---------------------------------------------------------------------------


def _rotate_eigvec(vector: np.ndarray):
    """Split a complex eigenvector into (a, b) with a.b = 0 and unit joint norm.

    The rotation angle solves ``tan(2 theta) = 2 a.b / (a.a - b.b)``; when the
    vector is already balanced the angle degenerates to zero.
    """
    a0 = vector.real.astype(float)
    b0 = vector.imag.astype(float)
    theta = 0.5 * np.arctan2(2.0 * (a0 @ b0), (a0 @ a0) - (b0 @ b0))
    a = a0 * np.cos(theta) + b0 * np.sin(theta)
    b = b0 * np.cos(theta) - a0 * np.sin(theta)
    scale = np.sqrt(a @ a + b @ b)
    return a / scale, b / scale


def _pack(x, a, b, omega, alpha):
    return np.concatenate([x, a, b, [omega], alpha])


def _unpack(z, n, n_alpha):
    return (
        z[:n],
        z[n : 2 * n],
        z[2 * n : 3 * n],
        float(z[3 * n]),
        z[3 * n + 1 : 3 * n + 1 + n_alpha],
    )


def _canonical_omega(x, alpha, omega, a, b):
    """Flip the sign pattern so omega > 0 (conjugate pair symmetry)."""
    if omega < 0.0:
        return x, alpha, -omega, a, -b
    return x, alpha, omega, a, b


def _residual_scale(x, a, b) -> float:
    return 1.0 + float(np.linalg.norm(x)) + float(np.linalg.norm(a)) + float(np.linalg.norm(b))


def solve_hopf(
    model: ModelSpec,
    sigma: float,
    seed,
    free_index=None,
    tol: float = HOPF_TOL,
    max_iter: int = HOPF_MAX_ITER,
) -> HopfSolution:
    """Newton iteration for one margin point at the given level ``sigma``.

    Parameters
    ----------
    model : ModelSpec
    sigma : float
        Prescribed real part of the leading pair.
    seed : (SteadyPoint, CharRoot) or HopfSolution
        Either a steady state with an oscillatory root of its spectrum, or a
        previously converged point.
    free_index : int or str, optional
        The single parameter released to the Newton iteration (default: the
        last one).  All other parameters stay at their seed values.
    tol : float
        Residual tolerance, scaled by ``1 + ||x|| + ||a|| + ||b||``.

    Returns
    -------
    HopfSolution

    Raises
    ------
    NonConvergenceError, RegularityError
    """
    n, n_alpha = model.n, model.n_alpha
    free = model.alpha_index(free_index) if free_index is not None else n_alpha - 1

    if isinstance(seed, HopfSolution):
        x = np.asarray(seed.x_tilde, dtype=float).copy()
        alpha = np.asarray(seed.alpha, dtype=float).copy()
        omega = float(seed.omega)
        a = np.asarray(seed.a, dtype=float).copy()
        b = np.asarray(seed.b, dtype=float).copy()
    else:
        try:
            point, root = seed
        except (TypeError, ValueError):
            raise InputError(
                "seed must be a HopfSolution or a (SteadyPoint, CharRoot) pair"
            ) from None
        x = np.asarray(point.x_tilde, dtype=float).copy()
        alpha = np.asarray(point.alpha, dtype=float).copy()
        omega = abs(float(root.value.imag))
        if omega <= 0.0:
            raise InputError("seed root has no oscillatory part")
        vec = root.vector if root.value.imag > 0 else root.vector.conj()
        a, b = _rotate_eigvec(np.asarray(vec, dtype=complex))

    cols = list(range(3 * n + 1)) + [3 * n + 1 + free]
    last_norm = np.inf
    for _ in range(max_iter):
        bundle = bundle_derivatives(model, x, alpha)
        res = augmented_residual(model, x, alpha, omega, a, b, sigma, bundle=bundle)
        scale = _residual_scale(x, a, b)
        norm = float(np.linalg.norm(res, np.inf))
        last_norm = norm
        if norm <= tol * scale:
            x, alpha, omega, a, b = _canonical_omega(x, alpha, omega, a, b)
            res = augmented_residual(model, x, alpha, omega, a, b, sigma)
            J = _assemble(bundle_derivatives(model, x, alpha), omega, a, b, sigma).assembled.T
            J_sq = J[:, cols]
            _, s, _ = svd(J_sq)
            if s[-1] <= 1e-8 * s[0]:
                raise RegularityError(
                    f"not a regular solution: square Jacobian is rank-deficient "
                    f"(singular values {s[0]:.3e} .. {s[-1]:.3e})"
                )
            return HopfSolution(
                x_tilde=x.copy(),
                alpha=alpha.copy(),
                sigma=float(sigma),
                omega=float(omega),
                a=a.copy(),
                b=b.copy(),
                residual_norm=float(np.linalg.norm(res, np.inf)),
            )

        J = _assemble(bundle, omega, a, b, sigma).assembled.T
        try:
            step = solve_linear(J[:, cols], -res)
        except NumericalError:
            raise RegularityError("singular Jacobian in margin-point Newton iteration") from None

        base = float(np.linalg.norm(res))
        t = 1.0
        while t >= 2.0 ** -30:
            x_t = x + t * step[:n]
            a_t = a + t * step[n : 2 * n]
            b_t = b + t * step[2 * n : 3 * n]
            omega_t = omega + t * step[3 * n]
            alpha_t = alpha.copy()
            alpha_t[free] += t * step[3 * n + 1]
            try:
                trial = augmented_residual(model, x_t, alpha_t, omega_t, a_t, b_t, sigma)
            except DomainError:
                t *= 0.5
                continue
            if float(np.linalg.norm(trial)) <= (1.0 - 1e-4 * t) * base:
                break
            t *= 0.5
        else:
            raise NonConvergenceError(
                "margin-point line search stalled", residual=norm
            )
        x, a, b, omega, alpha = x_t, a_t, b_t, omega_t, alpha_t

    raise NonConvergenceError(
        f"margin-point Newton did not converge within {max_iter} iterations",
        residual=last_norm,
    )


def margin_point_from_alpha(
    model: ModelSpec,
    sigma: float,
    alpha,
    x_guess=None,
    free_index=None,
    order: int = 20,
) -> HopfSolution:
    """Convenience pipeline: steady state -> spectrum -> leading pair -> solve.

    Starts from the given parameter vector, releases ``free_index`` and moves
    it until the leading pair sits at real part ``sigma``.
    """
    point = solve_steady(model, alpha, x_guess)
    bundle = bundle_derivatives(model, point.x_tilde, point.alpha)
    roots = char_roots(point, bundle, order=order)
    root = leading_pair(roots)
    return solve_hopf(model, sigma, (point, root), free_index=free_index)


# ---------------------------------------------------------------------------
# continuation
# ---------------------------------------------------------------------------


def _full_jacobian(model: ModelSpec, z: np.ndarray, sigma: float) -> np.ndarray:
    x, a, b, omega, alpha = _unpack(z, model.n, model.n_alpha)
    bundle = bundle_derivatives(model, x, alpha)
    return _assemble(bundle, omega, a, b, sigma).assembled.T


def _tangent(model: ModelSpec, z: np.ndarray, sigma: float, reference: np.ndarray) -> np.ndarray:
    """Unit tangent of the manifold at z best aligned with ``reference``."""
    J = _full_jacobian(model, z, sigma)
    ns = nullspace(J)
    expected = model.n_alpha - 1
    if ns.dimension != expected:
        raise RegularityError(
            f"tangent space has dimension {ns.dimension}, expected {expected}"
        )
    coeffs = ns.basis.T @ reference
    t = ns.basis @ coeffs
    norm = float(np.linalg.norm(t))
    if norm < 1e-12:
        raise InputError("continuation direction is orthogonal to the manifold tangent space")
    return t / norm


def _corrector(model, sigma, z_pred, t, tol):
    """Newton on the residual plus the arclength plane constraint."""
    n, n_alpha = model.n, model.n_alpha
    z = z_pred.copy()
    for _ in range(CORRECTOR_MAX_ITER):
        x, a, b, omega, alpha = _unpack(z, n, n_alpha)
        res = augmented_residual(model, x, alpha, omega, a, b, sigma)
        arc = float(t @ (z - z_pred))
        F = np.concatenate([res, [arc]])
        scale = _residual_scale(x, a, b)
        if float(np.linalg.norm(F, np.inf)) <= tol * scale:
            return z
        J = _full_jacobian(model, z, sigma)
        J_aug = np.vstack([J, t.reshape(1, -1)])
        # square when n_alpha == 2; minimum-norm Gauss-Newton otherwise
        step = least_squares(J_aug, -F)
        z = z + step
    return None


def continue_manifold(
    model: ModelSpec,
    sigma: float,
    start: HopfSolution,
    direction,
    steps: int,
    h: float,
    check_leading: bool = True,
    tol: float = HOPF_TOL,
) -> list[HopfSolution]:
    """Pseudo-arclength trace of the margin manifold.

    Parameters
    ----------
    model : ModelSpec
        Must expose at least two parameters (freeze others first with
        :func:`ddehopf.model.fix_parameters` to trace a slice).
    sigma : float
        The level held fixed along the branch.
    start : HopfSolution
        A converged point on the manifold.
    direction : array_like, length n_alpha
        Desired initial motion in parameter space; the actual tangent is its
        projection onto the manifold's tangent space.
    steps : int
        Number of points to append (0 returns ``[start]``).
    h : float
        Arclength step; halved locally down to ``h / 64`` when the corrector
        fails.
    check_leading : bool
        Re-check at every accepted point that the tracked pair is still the
        rightmost one; emits :class:`LeadingPairDriftWarning` when it drifts.

    Returns
    -------
    list of HopfSolution, starting with ``start``.

    Raises
    ------
    ContinuationStalledError
        When the corrector keeps failing; carries the partial branch.
    """
    if model.n_alpha < 2:
        raise InputError("continuation needs at least two parameters")
    direction = np.asarray(direction, dtype=float).reshape(model.n_alpha)
    if not np.linalg.norm(direction):
        raise InputError("continuation direction must be nonzero")

    n, n_alpha = model.n, model.n_alpha
    z = _pack(start.x_tilde, start.a, start.b, start.omega, start.alpha)
    reference = _pack(np.zeros(n), np.zeros(n), np.zeros(n), 0.0, direction)
    points = [start]

    for _ in range(int(steps)):
        t = _tangent(model, z, sigma, reference)
        accepted = None
        h_try = float(h)
        while h_try >= h * MIN_STEP_FRACTION * (1.0 - 1e-12):
            z_pred = z + h_try * t
            try:
                accepted = _corrector(model, sigma, z_pred, t, tol)
            except (DomainError, NumericalError, RegularityError):
                accepted = None
            if accepted is not None:
                break
            h_try *= 0.5
        if accepted is None:
            raise ContinuationStalledError(
                f"corrector failed at every step size down to h/64 near alpha = "
                f"{_unpack(z, n, n_alpha)[4].tolist()}",
                points,
            )
        z = accepted
        x, a, b, omega, alpha = _unpack(z, n, n_alpha)
        if omega <= 0.0:
            raise ContinuationStalledError(
                "frequency reached zero along the branch; the oscillatory pair degenerated",
                points,
            )
        res = augmented_residual(model, x, alpha, omega, a, b, sigma)
        sol = HopfSolution(
            x_tilde=x.copy(),
            alpha=alpha.copy(),
            sigma=float(sigma),
            omega=float(omega),
            a=a.copy(),
            b=b.copy(),
            residual_norm=float(np.linalg.norm(res, np.inf)),
        )
        points.append(sol)
        reference = t
        if check_leading:
            _warn_on_drift(model, sol)
    return points


def _warn_on_drift(model: ModelSpec, sol: HopfSolution):
    bundle = bundle_derivatives(model, sol.x_tilde, sol.alpha)
    point = SteadyPoint(
        x_tilde=sol.x_tilde,
        alpha=sol.alpha,
        tau_values=bundle.tau_values,
        residual_norm=0.0,
    )
    try:
        lead = leading_pair(char_roots(point, bundle))
    except (DomainError, NumericalError):
        return
    if abs(lead.value.real - sol.sigma) > DRIFT_TOL:
        warnings.warn(
            f"tracked pair is no longer leading at alpha = {sol.alpha.tolist()}: "
            f"rightmost real part {lead.value.real:.6g} vs level {sol.sigma:.6g}",
            LeadingPairDriftWarning,
            stacklevel=3,
        )
