"""Acceptance gate: one test — and one printed pass/fail line — per criterion.

Each test enforces its stated tolerance exactly; a test prints its line only
after every assertion in it has held, so the printed PASS lines and the
pytest verdicts always agree.
"""

import json
import shutil
import subprocess
import sys
import time

import numpy as np
import pytest

import ddehopf as dh

HAYES_SEED = [0.0, 1.5, 1.0]


def _announce(k, text):
    print(f"criterion {k}: {text}: PASS")


# ---------------------------------------------------------------------------
# 1. analytic fixture through the CLI, under a wall-clock budget
# ---------------------------------------------------------------------------


def test_criterion_1_hayes_analytic_fixture():
    exe = shutil.which("ddehopf")
    cmd = [exe] if exe else [sys.executable, "-m", "ddehopf.cli"]
    cmd += ["find-hopf", "--model", "hayes", "--alpha", "0,1.5,1",
            "--sigma", "0", "--free", "1"]
    t0 = time.perf_counter()
    proc = subprocess.run(cmd, capture_output=True, text=True)
    elapsed = time.perf_counter() - t0
    assert proc.returncode == 0, proc.stderr
    data = json.loads(proc.stdout)
    assert abs(data["alpha"][1] - np.pi / 2.0) < 1e-8
    assert abs(data["omega"] - np.pi / 2.0) < 1e-8
    assert elapsed < 1.0, f"took {elapsed:.3f}s"
    _announce(1, f"b_p, omega = pi/2 within 1e-8 in {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# 2. finite-difference Jacobian agreement on every block, every model,
#    three sigma levels
# ---------------------------------------------------------------------------

# (model, sigma, free parameter, seed alpha) — every combination converges
# and together they exercise the constant-delay blocks, the delay-gradient
# terms and the second-derivative contractions
FD_MATRIX = [
    ("hayes", 0.0, 1, [0.0, 1.5, 1.0]),
    ("hayes", -0.1, 1, [0.0, 1.5, 1.0]),
    ("hayes", 0.05, 1, [0.0, 1.5, 1.0]),
    ("sd-source", 0.0, 2, [1.0, 1.0, 2.0, 1.0, 0.2]),
    ("sd-source", -0.1, 2, [1.0, 1.0, 2.0, 1.0, 0.2]),
    ("sd-source", 0.05, 2, [1.0, 1.0, 2.0, 1.0, 0.2]),
    ("quadratic", 0.0, 1, [0.0, -1.4]),
    ("quadratic", -0.1, 1, [0.0, -1.4]),
    ("quadratic", 0.05, 1, [0.0, -1.4]),
    ("osc2", 0.0, 0, [0.12, 0.1, 1.0]),
    ("osc2", -0.1, 1, [0.102, 0.3, 1.0]),
    ("osc2", 0.05, 0, [0.2, 0.1, 1.0]),
]


def test_criterion_2_fd_jacobian_on_all_models_and_sigmas():
    t0 = time.perf_counter()
    worst = 0.0
    all_blocks = {f"B{r}{c}" for r in range(1, 6) for c in range(1, 6)}
    for name, sigma, free, alpha in FD_MATRIX:
        model = dh.get_model(name)
        sol = dh.margin_point_from_alpha(model, sigma, alpha, free_index=free)
        B = dh.assemble_B(dh.bundle_derivatives(model, sol.x_tilde, sol.alpha), sol)
        report = dh.fd_jacobian_check(model, sol, B)
        assert {c.name for c in report.checks} == all_blocks
        assert report.passed, f"{name} sigma={sigma}: worst {report.worst_relative_error:.3e}"
        worst = max(worst, report.worst_relative_error)
    elapsed = time.perf_counter() - t0
    assert worst < 1e-5
    assert elapsed < 10.0, f"took {elapsed:.3f}s"
    _announce(2, f"12 points, worst blockwise error {worst:.2e} in {elapsed:.2f}s")


# ---------------------------------------------------------------------------
# 3. normal is orthogonal to the (FD-derived) tangent space
# ---------------------------------------------------------------------------


def test_criterion_3_tangent_orthogonality(models, hopf_points):
    worst = 0.0
    for name, dim in (("hayes", 2), ("sd-source", 4)):
        model, sol = models[name], hopf_points[name]
        nv = dh.normal_at(model, sol)
        report = dh.tangent_orthogonality_check(model, sol, nv)
        assert len(report.checks) == dim
        for check in report.checks:
            assert check.measured < 1e-8, f"{name}: {check.name} = {check.measured:.3e}"
        worst = max(worst, report.worst_relative_error)
    _announce(3, f"max |r.t_alpha| = {worst:.2e} over tangent dims 2 and 4")


# ---------------------------------------------------------------------------
# 4. normal direction equals the measured gradient of the leading real part
# ---------------------------------------------------------------------------


def test_criterion_4_leading_gradient_cosine(models, hopf_points):
    worst = 0.0
    for name in ("hayes", "sd-source"):
        model, sol = models[name], hopf_points[name]
        report = dh.eig_gradient_check(model, sol, dh.normal_at(model, sol))
        (check,) = report.checks
        assert not check.note, f"{name}: inconclusive ({check.note})"
        assert check.measured < 1e-5, f"{name}: 1 - cosine = {check.measured:.3e}"
        worst = max(worst, check.measured)
    _announce(4, f"cosine exceeds 1 - {worst:.2e} on hayes and sd-source")


# ---------------------------------------------------------------------------
# 5. continuation secant defect is second order in the step size
# ---------------------------------------------------------------------------


def test_criterion_5_secant_defect_second_order(models, hayes_point):
    model = models["hayes"]

    def defects(h):
        branch = dh.continue_manifold(
            model, 0.0, hayes_point, (0.0, 0.0, 1.0), 20, h, check_leading=False
        )
        out = []
        for k in range(len(branch) - 1):
            r = dh.normal_at(model, branch[k]).r
            out.append(abs(r @ (branch[k + 1].alpha - branch[k].alpha)))
        return np.asarray(out)

    ratio = float(np.median(defects(0.05)) / np.median(defects(0.025)))
    assert 3.0 <= ratio <= 5.0, f"halving the step changed the defect by {ratio:.3f}"
    _announce(5, f"defect shrank by {ratio:.3f} when the step halved")


# ---------------------------------------------------------------------------
# 6. closest point agrees with a brute-force densely traced boundary
# ---------------------------------------------------------------------------


def test_criterion_6_closest_point_vs_brute_force(hayes_tau_fixed):
    # nominal (0, 1.2, 1): the delay is pinned at 1, so the search and the
    # brute-force trace both live on the tau = 1 slice of the boundary
    model, sol = hayes_tau_fixed
    nominal = np.array([0.0, 1.2])

    left = dh.continue_manifold(model, 0.0, sol, (-1.0, 0.0), 400, 1e-3, check_leading=False)
    right = dh.continue_manifold(model, 0.0, sol, (1.0, 0.0), 200, 1e-3, check_leading=False)
    boundary = np.array([p.alpha for p in left[::-1]] + [p.alpha for p in right[1:]])
    dist = np.linalg.norm(boundary - nominal, axis=1)
    k = int(np.argmin(dist))
    assert 0 < k < len(dist) - 1, "brute-force minimum must be interior to the trace"

    cp = dh.closest_boundary_point(model, 0.0, nominal, sol)
    gap = abs(abs(cp.distance) - float(dist[k]))
    assert gap < 1e-4, f"newton vs brute force differ by {gap:.3e}"

    on_manifold = dh.closest_boundary_point(model, 0.0, cp.solution.alpha, cp.solution)
    assert abs(on_manifold.distance) < 1e-9
    _announce(6, f"distance matches brute force within {gap:.1e}; zero case |l| < 1e-9")


# ---------------------------------------------------------------------------
# 7. spectrum is grid-independent and every root satisfies the determinant
# ---------------------------------------------------------------------------


def test_criterion_7_spectrum_convergence(models, hopf_points):
    worst_gap = 0.0
    worst_det = 0.0
    for name, sol in hopf_points.items():
        model = models[name]
        point = dh.solve_steady(model, sol.alpha, x_guess=sol.x_tilde)
        bundle = dh.bundle_derivatives(model, point.x_tilde, point.alpha)
        lead20 = dh.leading_pair(dh.char_roots(point, bundle, order=20))
        lead32 = dh.leading_pair(dh.char_roots(point, bundle, order=32))
        gap = abs(lead20.value - lead32.value)
        assert gap < 1e-9, f"{name}: N=20 vs N=32 leading roots differ by {gap:.3e}"
        worst_gap = max(worst_gap, gap)
        for root in dh.char_roots(point, bundle, order=20):
            det = abs(dh.characteristic_determinant(bundle.A, point.tau_values, root.value))
            assert det < 1e-8, f"{name}: root {root.value:.6g} has |det| = {det:.3e}"
            worst_det = max(worst_det, det)
    _announce(7, f"grid gap {worst_gap:.1e}, worst |det| {worst_det:.1e}")


# ---------------------------------------------------------------------------
# 8. invariant suite at every converged solution
# ---------------------------------------------------------------------------


def test_criterion_8_invariant_suite(models, hopf_points):
    rng = np.random.default_rng(2024)
    # trig identities across random (sigma, omega) draws
    for _ in range(50):
        sigma, omega = rng.uniform(-0.5, 0.5), rng.uniform(0.05, 6.0)
        taus = np.concatenate([[0.0], rng.uniform(0.0, 3.0, size=3)])
        tw = dh.trig_weights(sigma, omega, taus)
        assert tw.s[0] == 0.0 and tw.c[0] == 1.0
        rhs = np.exp(-2.0 * sigma * taus)
        assert np.max(np.abs(tw.s**2 + tw.c**2 - rhs) / rhs) < 1e-12

    for name, sol in hopf_points.items():
        model = models[name]
        # normalization and phase rows at the converged solution
        assert abs(sol.a @ sol.a + sol.b @ sol.b - 1.0) <= 1e-10, name
        assert abs(sol.a @ sol.b) <= 1e-10, name
        # kernel residual and unit normal
        nv = dh.normal_at(model, sol)
        bundle = dh.bundle_derivatives(model, sol.x_tilde, sol.alpha)
        K = dh.assemble_B(bundle, sol).kernel_rows()
        kres = float(np.linalg.norm(K @ nv.kappa, np.inf)) / float(np.linalg.norm(K, 2))
        assert kres < 1e-8, name
        assert abs(float(np.linalg.norm(nv.r)) - 1.0) <= 1e-12, name
        # conjugate closure of the computed spectrum
        point = dh.solve_steady(model, sol.alpha, x_guess=sol.x_tilde)
        roots = dh.char_roots(point, bundle)
        values = [r.value for r in roots]
        for v in values:
            if abs(v.imag) > 1e-8:
                assert min(abs(v.conjugate() - w) for w in values) < 1e-6, name
    _announce(8, "trig, normalization, kernel, unit-normal, conjugate closure")
