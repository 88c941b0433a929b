"""Steady states of delay models.

A steady state satisfies ``f(x, ..., x, alpha) = 0``; the delays drop out
because a constant history makes every state argument identical.  For the
same reason the Newton matrix of the steady-state map is simply the sum of
the per-argument Jacobians, and state-dependent delays do not perturb the
linearization at an equilibrium (their contribution is multiplied by the
vanishing time derivative of the state).
"""

from dataclasses import dataclass

import numpy as np

from .errors import NonConvergenceError, NumericalError, RegularityError
from .model import ModelSpec, delay_values, evaluate_rhs
from .numkernel import solve_linear

STEADY_TOL = 1e-10
MAX_ITER = 50
ARMIJO_FACTOR = 0.5
MIN_STEP = 2.0 ** -30


@dataclass(frozen=True)
class SteadyPoint:
    """A converged steady state with its delay values."""

    x_tilde: np.ndarray
    alpha: np.ndarray
    tau_values: np.ndarray
    residual_norm: float
    newton_increments: tuple[float, ...] = ()


def _steady_residual(model: ModelSpec, x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    return evaluate_rhs(model, [x] * (model.m + 1), alpha)


def _steady_jacobian(model: ModelSpec, x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    if model.providers["jacobian"] == "analytic":
        A = model.analytic.jacobians([x] * (model.m + 1), alpha)
        return np.sum([np.asarray(Ai, dtype=float) for Ai in A], axis=0)
    # central differences moving every argument at once
    from .model import _fd_grad_x_f

    return _fd_grad_x_f(model, x, alpha).T


def solve_steady(model: ModelSpec, alpha, x_guess=None, tol: float = STEADY_TOL) -> SteadyPoint:
    """Damped Newton iteration for a steady state.

    Parameters
    ----------
    model : ModelSpec
    alpha : array_like
        Parameter vector.
    x_guess : array_like, optional
        Starting state (defaults to the origin).
    tol : float
        Convergence is ``||f||_inf <= tol * (1 + ||x||_inf)``.

    Returns
    -------
    SteadyPoint

    Raises
    ------
    RegularityError
        If the Newton matrix is singular.
    NonConvergenceError
        If the iteration does not meet tolerance within 50 steps.
    """
    alpha = np.asarray(alpha, dtype=float).reshape(model.n_alpha)
    x = np.zeros(model.n) if x_guess is None else np.asarray(x_guess, dtype=float).reshape(model.n).copy()

    increments: list[float] = []
    res = _steady_residual(model, x, alpha)
    for _ in range(MAX_ITER):
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(res))):
            raise NumericalError(
                f"steady-state iterate became non-finite for model {model.name!r}"
            )
        norm = float(np.linalg.norm(res, np.inf))
        if norm <= tol * (1.0 + float(np.linalg.norm(x, np.inf))):
            taus = delay_values(model, x, alpha)
            return SteadyPoint(
                x_tilde=x.copy(),
                alpha=alpha.copy(),
                tau_values=taus,
                residual_norm=norm,
                newton_increments=tuple(increments),
            )
        J = _steady_jacobian(model, x, alpha)
        try:
            step = solve_linear(J, -res)
        except NumericalError:
            raise RegularityError(
                f"singular Newton matrix for model {model.name!r} at x = {x.tolist()}"
            ) from None
        # Armijo backtracking on the residual norm
        t = 1.0
        base = float(np.linalg.norm(res))
        while t >= MIN_STEP:
            trial = x + t * step
            trial_res = _steady_residual(model, trial, alpha)
            if float(np.linalg.norm(trial_res)) <= (1.0 - 1e-4 * t) * base:
                break
            t *= ARMIJO_FACTOR
        else:
            raise NonConvergenceError(
                f"steady-state line search stalled for model {model.name!r}", residual=base
            )
        increments.append(float(np.linalg.norm(t * step)))
        x = x + t * step
        res = trial_res

    raise NonConvergenceError(
        f"steady-state Newton did not converge for model {model.name!r}",
        residual=float(np.linalg.norm(res, np.inf)),
    )
