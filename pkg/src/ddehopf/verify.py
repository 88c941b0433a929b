"""Built-in verification oracles.

Every oracle here is independent of the closed-form machinery it checks:
Jacobians are re-derived by central finite differences of the residual
alone, tangent bases come from the finite-difference Jacobian, and the
leading-real-part gradient is measured by re-solving the eigenvalue problem
at perturbed parameters.  A report collects named checks with measured
values and tolerances and serializes to JSON.
"""

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NumericalError, RegularityError
from .hopf_manifold import BMatrix, HopfSolution, _BLOCK_NAMES, augmented_residual, trig_weights
from .model import ModelSpec, bundle_derivatives
from .normalvec import NormalVector
from .numkernel import nullspace
from .spectrum import char_roots, characteristic_determinant, leading_pair
from .steady import SteadyPoint, solve_steady

FD_REL_TOL = 1e-5
FD_ABS_FLOOR = 1e-8
TANGENT_TOL = 1e-8
COSINE_TOL = 1e-5
EIG_GRAD_STEP = 1e-5


@dataclass(frozen=True)
class CheckResult:
    """One named check: passes when ``measured < tolerance``."""

    name: str
    measured: float
    tolerance: float
    passed: bool
    note: str = ""

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            # NaN marks an inconclusive measurement; JSON has no NaN, use null
            "measured": self.measured if math.isfinite(self.measured) else None,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }
        if self.note:
            out["note"] = self.note
        return out


@dataclass(frozen=True)
class VerificationReport:
    """A bundle of checks with an overall verdict."""

    checks: tuple

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def worst_relative_error(self) -> float:
        finite = [c.measured for c in self.checks if math.isfinite(c.measured)]
        return max(finite, default=0.0)

    def to_dict(self) -> dict:
        return {
            "checks": [c.to_dict() for c in self.checks],
            "worst_relative_error": self.worst_relative_error,
            "passed": self.passed,
        }

    def to_json(self, indent: int = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)

    def merged_with(self, other: "VerificationReport") -> "VerificationReport":
        return VerificationReport(checks=self.checks + other.checks)


def fd_residual_jacobian(model: ModelSpec, sol: HopfSolution, step0: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of the defining residual at a point.

    Differentiates w.r.t. the full variable vector (x, a, b, omega, alpha) —
    the same ordering as the rows of :class:`BMatrix` — touching nothing but
    the residual evaluation itself.
    """
    n, n_alpha = model.n, model.n_alpha
    z = np.concatenate([sol.x_tilde, sol.a, sol.b, [sol.omega], sol.alpha])

    def residual_at(zv):
        return augmented_residual(
            model,
            zv[:n],
            zv[3 * n + 1 :],
            float(zv[3 * n]),
            zv[n : 2 * n],
            zv[2 * n : 3 * n],
            sol.sigma,
        )

    J = np.empty((3 * n + 2, z.size))
    for j in range(z.size):
        h = step0 * (1.0 + abs(z[j]))
        zp, zm = z.copy(), z.copy()
        zp[j] += h
        zm[j] -= h
        J[:, j] = (residual_at(zp) - residual_at(zm)) / (2 * h)
    return J


def _block_slices(n: int, n_alpha: int):
    rows = [slice(0, n), slice(n, 2 * n), slice(2 * n, 3 * n), slice(3 * n, 3 * n + 1),
            slice(3 * n + 1, 3 * n + 1 + n_alpha)]
    cols = [slice(0, n), slice(n, 2 * n), slice(2 * n, 3 * n), slice(3 * n, 3 * n + 1),
            slice(3 * n + 1, 3 * n + 2)]
    return rows, cols


def fd_jacobian_check(model: ModelSpec, sol: HopfSolution, B: BMatrix) -> VerificationReport:
    """Compare every closed-form block against the finite-difference Jacobian.

    An entry passes when its deviation is below ``1e-5`` relative or below
    the absolute floor ``1e-8``; the per-block measured value folds both into
    one number (deviation divided by ``max(|entry|, 1e-3)``).
    """
    fd = fd_residual_jacobian(model, sol).T  # transposed: same layout as B
    full = B.assembled
    rows, cols = _block_slices(model.n, model.n_alpha)
    floor_den = FD_ABS_FLOOR / FD_REL_TOL
    checks = []
    for ri in range(5):
        for ci in range(5):
            analytic = full[rows[ri], cols[ci]]
            numeric = fd[rows[ri], cols[ci]]
            denom = np.maximum(np.abs(analytic), floor_den)
            measured = float(np.max(np.abs(analytic - numeric) / denom))
            checks.append(
                CheckResult(
                    name=_BLOCK_NAMES[ri][ci],
                    measured=measured,
                    tolerance=FD_REL_TOL,
                    passed=measured < FD_REL_TOL,
                )
            )
    return VerificationReport(checks=tuple(checks))


def tangent_orthogonality_check(
    model: ModelSpec, sol: HopfSolution, nv: NormalVector
) -> VerificationReport:
    """Check that the normal is orthogonal to every manifold tangent.

    Tangents come from the nullspace of the finite-difference Jacobian, so
    this oracle shares nothing with the closed-form assembly that produced
    the normal.
    """
    n, n_alpha = model.n, model.n_alpha
    J = fd_residual_jacobian(model, sol)
    ns = nullspace(J)
    expected = n_alpha - 1
    if ns.dimension != expected:
        raise RegularityError(
            f"manifold tangent space has dimension {ns.dimension}, expected {expected}"
        )
    if expected == 0:
        return VerificationReport(
            checks=(
                CheckResult(
                    name="tangent-orthogonality",
                    measured=0.0,
                    tolerance=TANGENT_TOL,
                    passed=True,
                    note="zero-dimensional manifold; check is vacuous",
                ),
            )
        )
    checks = []
    for k in range(expected):
        t_alpha = ns.basis[3 * n + 1 :, k]
        measured = float(abs(nv.r @ t_alpha))
        checks.append(
            CheckResult(
                name=f"tangent-orthogonality[{k}]",
                measured=measured,
                tolerance=TANGENT_TOL,
                passed=measured < TANGENT_TOL,
            )
        )
    return VerificationReport(checks=tuple(checks))


def eig_gradient_check(
    model: ModelSpec,
    sol: HopfSolution,
    nv: NormalVector,
    step: float = EIG_GRAD_STEP,
    order: int = 20,
) -> VerificationReport:
    """Compare the normal against the measured gradient of the leading real part.

    For each parameter the leading pair is recomputed at a central pair of
    perturbed parameter vectors (steady state re-solved each time).  The
    check passes when the cosine between the measured gradient and the
    normal exceeds ``1 - 1e-5``; if the leading pair switches branches under
    perturbation the check reports an inconclusive (non-failing) result.
    """
    n_alpha = model.n_alpha
    g = np.empty(n_alpha)
    inconclusive = ""
    for j in range(n_alpha):
        h = step * (1.0 + abs(sol.alpha[j]))
        sigmas = []
        for sign in (+1.0, -1.0):
            alpha = sol.alpha.copy()
            alpha[j] += sign * h
            try:
                point = solve_steady(model, alpha, x_guess=sol.x_tilde)
                bundle = bundle_derivatives(model, point.x_tilde, point.alpha)
                lead = leading_pair(char_roots(point, bundle, order=order))
            except (DomainError, NumericalError) as exc:
                return VerificationReport(
                    checks=(
                        CheckResult(
                            name="leading-gradient-cosine",
                            measured=float("nan"),
                            tolerance=COSINE_TOL,
                            passed=True,
                            note=f"inconclusive: perturbation failed ({exc})",
                        ),
                    )
                )
            if abs(lead.value.imag - sol.omega) > 0.3 * (1.0 + abs(sol.omega)):
                inconclusive = (
                    f"leading pair switched branches at parameter {j} "
                    f"(frequency {lead.value.imag:.6g} vs {sol.omega:.6g})"
                )
            sigmas.append(lead.value.real)
        g[j] = (sigmas[0] - sigmas[1]) / (2 * h)

    gnorm = float(np.linalg.norm(g))
    if gnorm == 0.0:
        return VerificationReport(
            checks=(
                CheckResult(
                    name="leading-gradient-cosine",
                    measured=float("nan"),
                    tolerance=COSINE_TOL,
                    passed=True,
                    note="inconclusive: measured gradient is zero",
                ),
            )
        )
    cosine = float(abs(g @ nv.r) / gnorm)
    if inconclusive:
        return VerificationReport(
            checks=(
                CheckResult(
                    name="leading-gradient-cosine",
                    measured=1.0 - cosine,
                    tolerance=COSINE_TOL,
                    passed=True,
                    note=f"inconclusive: {inconclusive}",
                ),
            )
        )
    return VerificationReport(
        checks=(
            CheckResult(
                name="leading-gradient-cosine",
                measured=1.0 - cosine,
                tolerance=COSINE_TOL,
                passed=(1.0 - cosine) < COSINE_TOL,
            ),
        )
    )


def invariant_checks(model: ModelSpec, sol: HopfSolution, nv: NormalVector | None = None) -> VerificationReport:
    """Direct identities every converged point must satisfy."""
    bundle = bundle_derivatives(model, sol.x_tilde, sol.alpha)
    tw = trig_weights(sol.sigma, sol.omega, bundle.tau_values)
    trig_err = float(
        np.max(np.abs(tw.s**2 + tw.c**2 - np.exp(-2.0 * sol.sigma * bundle.tau_values)))
    )
    res = augmented_residual(model, sol.x_tilde, sol.alpha, sol.omega, sol.a, sol.b, sol.sigma)
    scale = 1.0 + float(np.linalg.norm(sol.x_tilde)) + float(np.linalg.norm(sol.a)) + float(
        np.linalg.norm(sol.b)
    )
    lam = sol.sigma + 1j * sol.omega
    det_here = abs(characteristic_determinant(bundle.A, bundle.tau_values, lam))
    det_conj = abs(characteristic_determinant(bundle.A, bundle.tau_values, lam.conjugate()))
    checks = [
        CheckResult("trig-identity", trig_err, 1e-12, trig_err < 1e-12),
        CheckResult(
            "residual-scaled",
            float(np.linalg.norm(res, np.inf)) / scale,
            1e-10,
            float(np.linalg.norm(res, np.inf)) / scale <= 1e-10,
        ),
        CheckResult(
            "eigvec-normalization",
            abs(float(sol.a @ sol.a + sol.b @ sol.b - 1.0)),
            1e-10,
            abs(float(sol.a @ sol.a + sol.b @ sol.b - 1.0)) <= 1e-10,
        ),
        CheckResult(
            "eigvec-phase",
            abs(float(sol.a @ sol.b)),
            1e-10,
            abs(float(sol.a @ sol.b)) <= 1e-10,
        ),
        CheckResult("char-det-at-root", det_here, 1e-8, det_here < 1e-8),
        CheckResult("char-det-at-conjugate", det_conj, 1e-8, det_conj < 1e-8),
    ]
    if nv is not None:
        from .hopf_manifold import _assemble

        B = _assemble(bundle, sol.omega, sol.a, sol.b, sol.sigma)
        K = B.kernel_rows()
        kres = float(np.linalg.norm(K @ nv.kappa, np.inf)) / max(
            1e-300, float(np.linalg.norm(K, 2))
        )
        rnorm_err = abs(float(np.linalg.norm(nv.r)) - 1.0)
        checks += [
            CheckResult("kernel-residual", kres, 1e-8, kres < 1e-8),
            CheckResult("normal-unit-length", rnorm_err, 1e-12, rnorm_err <= 1e-12),
        ]
    return VerificationReport(checks=tuple(checks))


def full_verification(model: ModelSpec, sol: HopfSolution) -> VerificationReport:
    """Run every oracle against one converged point."""
    from .hopf_manifold import _assemble
    from .normalvec import normal_vector

    bundle = bundle_derivatives(model, sol.x_tilde, sol.alpha)
    B = _assemble(bundle, sol.omega, sol.a, sol.b, sol.sigma)
    nv = normal_vector(B)
    report = fd_jacobian_check(model, sol, B)
    report = report.merged_with(tangent_orthogonality_check(model, sol, nv))
    report = report.merged_with(eig_gradient_check(model, sol, nv))
    report = report.merged_with(invariant_checks(model, sol, nv))
    return report
