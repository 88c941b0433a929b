"""The verification oracles themselves: they must pass at genuine points and
fail loudly when fed corrupted inputs."""

import dataclasses
import json
import math

import numpy as np
import pytest

from ddehopf import (
    CheckResult,
    NormalVector,
    RegularityError,
    VerificationReport,
    assemble_B,
    bundle_derivatives,
    eig_gradient_check,
    fd_jacobian_check,
    fix_parameters,
    full_verification,
    get_model,
    invariant_checks,
    margin_point_from_alpha,
    normal_at,
    tangent_orthogonality_check,
)


def _b_matrix(model, sol):
    return assemble_B(bundle_derivatives(model, sol.x_tilde, sol.alpha), sol)


# ---------------------------------------------------------------------------
# finite-difference Jacobian check
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name", ["hayes", "quadratic"])
def test_fd_jacobian_check_passes(models, hopf_points, name):
    model, sol = models[name], hopf_points[name]
    report = fd_jacobian_check(model, sol, _b_matrix(model, sol))
    assert report.passed
    assert len(report.checks) == 25
    assert {c.name for c in report.checks} == {f"B{r}{c}" for r in range(1, 6) for c in range(1, 6)}
    assert report.worst_relative_error < 1e-5


def test_fd_jacobian_check_flags_corrupted_block(models, hayes_point):
    model, sol = models["hayes"], hayes_point
    B = _b_matrix(model, sol)
    broken = dataclasses.replace(B, B22=B.B22 + 1e-3)
    report = fd_jacobian_check(model, sol, broken)
    assert not report.passed
    failing = [c.name for c in report.checks if not c.passed]
    assert failing == ["B22"]


# ---------------------------------------------------------------------------
# tangent orthogonality
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("name, dim", [("hayes", 2), ("sd-source", 4)])
def test_tangent_orthogonality(models, hopf_points, name, dim):
    model, sol = models[name], hopf_points[name]
    report = tangent_orthogonality_check(model, sol, normal_at(model, sol))
    assert report.passed
    assert len(report.checks) == dim
    for check in report.checks:
        assert check.measured < 1e-8
        assert check.name.startswith("tangent-orthogonality[")


def test_tangent_check_vacuous_on_one_parameter_slice():
    model = fix_parameters(get_model("hayes"), {"a_p": 0.0, "tau": 1.0})
    sol = margin_point_from_alpha(model, 0.0, [1.5])
    nv = normal_at(model, sol)
    report = tangent_orthogonality_check(model, sol, nv)
    assert report.passed
    assert len(report.checks) == 1
    assert "vacuous" in report.checks[0].note


def test_tangent_check_rotated_normal_fails(models, hayes_point, hayes_normal):
    rotated = NormalVector(
        kappa=hayes_normal.kappa,
        r=hayes_normal.r[[1, 2, 0]],  # permuted: no longer orthogonal
        kernel_dim=1,
    )
    report = tangent_orthogonality_check(models["hayes"], hayes_point, rotated)
    assert not report.passed


# ---------------------------------------------------------------------------
# leading-real-part gradient
# ---------------------------------------------------------------------------


def test_eig_gradient_cosine(models, hopf_points):
    for name in ("hayes", "sd-source"):
        model, sol = models[name], hopf_points[name]
        report = eig_gradient_check(model, sol, normal_at(model, sol))
        assert report.passed
        (check,) = report.checks
        assert check.name == "leading-gradient-cosine"
        assert check.measured < 1e-5
        assert not check.note


def test_eig_gradient_rejects_wrong_direction(models, hayes_point, hayes_normal):
    wrong = NormalVector(
        kappa=hayes_normal.kappa,
        r=hayes_normal.r[[1, 2, 0]],
        kernel_dim=1,
    )
    report = eig_gradient_check(models["hayes"], hayes_point, wrong)
    assert not report.passed
    assert report.checks[0].measured > 1e-2


# ---------------------------------------------------------------------------
# invariants and report mechanics
# ---------------------------------------------------------------------------


def test_invariants_at_every_builtin_point(models, hopf_points):
    for name, sol in hopf_points.items():
        nv = normal_at(models[name], sol)
        report = invariant_checks(models[name], sol, nv)
        assert report.passed, name
        names = {c.name for c in report.checks}
        assert {
            "trig-identity",
            "residual-scaled",
            "eigvec-normalization",
            "eigvec-phase",
            "char-det-at-root",
            "char-det-at-conjugate",
            "kernel-residual",
            "normal-unit-length",
        } == names


def test_invariants_without_normal_skip_kernel_checks(models, hayes_point):
    report = invariant_checks(models["hayes"], hayes_point)
    names = {c.name for c in report.checks}
    assert "kernel-residual" not in names
    assert report.passed


def test_report_serialization_roundtrip(models, hayes_point):
    report = full_verification(models["hayes"], hayes_point)
    assert report.passed
    assert len(report.checks) == 36  # 25 blocks + 2 tangents + 1 gradient + 8 invariants
    data = json.loads(report.to_json())
    assert data["passed"] is True
    assert len(data["checks"]) == 36
    for entry in data["checks"]:
        assert set(entry) >= {"name", "measured", "tolerance", "pass"}
    assert data["worst_relative_error"] == report.worst_relative_error


def test_report_merge_and_nan_handling():
    conclusive = CheckResult(name="a", measured=0.5, tolerance=1.0, passed=True)
    inconclusive = CheckResult(
        name="b", measured=float("nan"), tolerance=1.0, passed=True, note="inconclusive"
    )
    merged = VerificationReport(checks=(conclusive,)).merged_with(
        VerificationReport(checks=(inconclusive,))
    )
    assert merged.passed
    assert len(merged.checks) == 2
    # NaN never wins the worst-error aggregation and serializes as null
    assert merged.worst_relative_error == 0.5
    data = json.loads(merged.to_json())
    assert data["checks"][1]["measured"] is None
    assert data["checks"][1]["note"] == "inconclusive"


def test_failed_check_fails_report():
    bad = CheckResult(name="x", measured=2.0, tolerance=1.0, passed=False)
    report = VerificationReport(checks=(bad,))
    assert not report.passed
    assert math.isfinite(report.worst_relative_error)
