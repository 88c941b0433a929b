"""Command-line frontend.

One subcommand per operation; every run prints a single JSON document to
standard output (floats serialized with ``repr``, so they round-trip to the
exact double) and keeps diagnostics on standard error.  Exit codes: 0 on
success, 2 on input errors, 3 on non-convergence, 4 on regularity failures,
5 on numerical failures.

Vector-valued flags (``--alpha``, ``--nominal``, ``--direction``) accept the
model's full parameter layout even when ``--fix`` froze some entries; frozen
slots are taken from ``--fix`` (which wins over the corresponding ``--alpha``
entry) and the remaining components feed the reduced model.  Vectors already
given in the reduced layout are accepted as well — the lengths differ, so
there is no ambiguity.
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import (
    DomainError,
    InputError,
    NonConvergenceError,
    NumericalError,
    RegularityError,
)
from .hopf_manifold import (
    HopfSolution,
    augmented_residual,
    continue_manifold,
    margin_point_from_alpha,
    _residual_scale,
)
from .model import ModelSpec, bundle_derivatives, fix_parameters, get_model, load_model_json
from .normalvec import closest_boundary_point, normal_at
from .spectrum import char_roots
from .steady import solve_steady
from .verify import full_verification

RESUME_TOL = 1e-8


# ---------------------------------------------------------------------------
# argument plumbing
# ---------------------------------------------------------------------------


def _parse_floats(text: str, what: str) -> np.ndarray:
    try:
        values = [float(part) for part in text.split(",") if part.strip() != ""]
    except ValueError:
        raise InputError(f"{what} must be a comma-separated list of numbers, got {text!r}") from None
    if not values:
        raise InputError(f"{what} must not be empty")
    return np.asarray(values, dtype=float)


def _load_model(args) -> ModelSpec:
    ref = args.model
    if "/" in ref or ref.endswith(".json") or Path(ref).is_file():
        try:
            model = load_model_json(ref)
        except OSError as exc:
            raise InputError(f"cannot read model file {ref!r}: {exc}") from None
    else:
        model = get_model(ref)
    fixes = getattr(args, "fix", None) or []
    if fixes:
        assignments = {}
        for item in fixes:
            key, sep, value = item.partition("=")
            if not sep:
                raise InputError(f"--fix expects NAME=VALUE, got {item!r}")
            key = key.strip()
            if key.lstrip("+-").isdigit():
                key = int(key)
            try:
                assignments[key] = float(value)
            except ValueError:
                raise InputError(f"--fix value for {key!r} is not a number: {value!r}") from None
        model = fix_parameters(model, assignments)
    return model


def _reduce(model: ModelSpec, vec: np.ndarray, what: str) -> np.ndarray:
    """Accept a vector in either the parent layout or the reduced layout."""
    if vec.size == model.n_alpha:
        return vec
    if model.fixed_assignments is not None and vec.size == model.parent_n_alpha:
        fixed = {i for i, _ in model.fixed_assignments}
        free = [i for i in range(model.parent_n_alpha) if i not in fixed]
        return vec[free]
    expected = f"{model.n_alpha}"
    if model.fixed_assignments is not None:
        expected += f" (reduced) or {model.parent_n_alpha} (full)"
    raise InputError(f"{what} has {vec.size} entries; model {model.name!r} expects {expected}")


def _model_and_alpha(args):
    model = _load_model(args)
    alpha = _reduce(model, _parse_floats(args.alpha, "--alpha"), "--alpha")
    return model, alpha


def _guess(args, model: ModelSpec):
    if args.guess is None:
        return None
    guess = _parse_floats(args.guess, "--guess")
    if guess.size != model.n:
        raise InputError(f"--guess has {guess.size} entries; model state dimension is {model.n}")
    return guess


def _free_index(args, model: ModelSpec):
    if args.free is None:
        return None
    key = args.free.strip()
    if key.lstrip("+-").isdigit():
        return model.alpha_index(int(key))
    return model.alpha_index(key)


def _solution_dict(sol: HopfSolution) -> dict:
    return {
        "x_tilde": sol.x_tilde.tolist(),
        "alpha": sol.alpha.tolist(),
        "sigma": sol.sigma,
        "omega": sol.omega,
        "a": sol.a.tolist(),
        "b": sol.b.tolist(),
        "residual_norm": sol.residual_norm,
    }


def _with_parent_alpha(payload: dict, model: ModelSpec, alpha) -> dict:
    if model.fixed_assignments is not None:
        payload["alpha_full"] = model.embed_alpha(np.asarray(alpha)).tolist()
    return payload


def _solve_margin_point(args) -> tuple[ModelSpec, HopfSolution]:
    model, alpha = _model_and_alpha(args)
    sol = margin_point_from_alpha(
        model,
        args.sigma,
        alpha,
        x_guess=_guess(args, model),
        free_index=_free_index(args, model),
        order=args.order,
    )
    return model, sol


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_steady(args) -> dict:
    model, alpha = _model_and_alpha(args)
    point = solve_steady(model, alpha, x_guess=_guess(args, model))
    payload = {
        "command": "steady",
        "model": model.name,
        "x_tilde": point.x_tilde.tolist(),
        "alpha": point.alpha.tolist(),
        "tau_values": point.tau_values.tolist(),
        "residual_norm": point.residual_norm,
    }
    return _with_parent_alpha(payload, model, point.alpha)


def _cmd_eigs(args) -> dict:
    model, alpha = _model_and_alpha(args)
    point = solve_steady(model, alpha, x_guess=_guess(args, model))
    bundle = bundle_derivatives(model, point.x_tilde, point.alpha)
    roots = char_roots(point, bundle, order=args.order)
    payload = {
        "command": "eigs",
        "model": model.name,
        "x_tilde": point.x_tilde.tolist(),
        "alpha": point.alpha.tolist(),
        "order": args.order,
        "roots": [
            {"re": r.value.real, "im": r.value.imag, "residual": r.residual} for r in roots
        ],
    }
    return _with_parent_alpha(payload, model, point.alpha)


def _resume_solution(args, model: ModelSpec) -> HopfSolution:
    try:
        data = json.loads(Path(args.resume).read_text())
    except OSError as exc:
        raise InputError(f"cannot read resume file {args.resume!r}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"resume file {args.resume!r} is not valid JSON: {exc}") from None
    try:
        sigma = float(data["sigma"]) if args.sigma is None else float(args.sigma)
        sol = HopfSolution(
            x_tilde=np.asarray(data["x_tilde"], dtype=float).reshape(model.n),
            alpha=np.asarray(data["alpha"], dtype=float).reshape(model.n_alpha),
            sigma=sigma,
            omega=float(data["omega"]),
            a=np.asarray(data["a"], dtype=float).reshape(model.n),
            b=np.asarray(data["b"], dtype=float).reshape(model.n),
            residual_norm=float(data["residual_norm"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"resume file {args.resume!r} has missing or malformed fields: {exc}") from None
    res = augmented_residual(model, sol.x_tilde, sol.alpha, sol.omega, sol.a, sol.b, sol.sigma)
    norm = float(np.linalg.norm(res, np.inf))
    scale = _residual_scale(sol.x_tilde, sol.a, sol.b)
    if norm > RESUME_TOL * scale:
        raise InputError(
            f"resume file {args.resume!r} is stale: defining residual {norm:.3e} "
            f"exceeds {RESUME_TOL:.0e} * scale"
        )
    return HopfSolution(
        x_tilde=sol.x_tilde,
        alpha=sol.alpha,
        sigma=sol.sigma,
        omega=sol.omega,
        a=sol.a,
        b=sol.b,
        residual_norm=norm,
    )


def _cmd_find_hopf(args) -> dict:
    if args.resume is not None:
        model = _load_model(args)
        sol = _resume_solution(args, model)
        print(f"resumed point verified (residual {sol.residual_norm:.3e})", file=sys.stderr)
    else:
        if args.alpha is None:
            raise InputError("find-hopf needs --alpha unless --resume is given")
        if args.sigma is None:
            raise InputError("find-hopf needs --sigma unless --resume is given")
        model, sol = _solve_margin_point(args)
    payload = {"command": "find-hopf", "model": model.name, **_solution_dict(sol)}
    return _with_parent_alpha(payload, model, sol.alpha)


def _cmd_normal_vector(args) -> dict:
    model, sol = _solve_margin_point(args)
    nv = normal_at(model, sol)
    payload = {
        "command": "normal-vector",
        "model": model.name,
        **_solution_dict(sol),
        "kappa": nv.kappa.tolist(),
        "r": nv.r.tolist(),
        "kernel_dim": nv.kernel_dim,
        "sign_convention": nv.sign_convention,
    }
    return _with_parent_alpha(payload, model, sol.alpha)


def _cmd_continue(args) -> dict:
    model, sol = _solve_margin_point(args)
    direction = _reduce(model, _parse_floats(args.direction, "--direction"), "--direction")
    points = continue_manifold(
        model, args.sigma, sol, direction, steps=args.steps, h=args.step_size
    )
    print(f"accepted {len(points) - 1} continuation steps", file=sys.stderr)
    payload = {
        "command": "continue",
        "model": model.name,
        "sigma": args.sigma,
        "step_size": args.step_size,
        "points": [
            {
                "index": i,
                "alpha": p.alpha.tolist(),
                "omega": p.omega,
                "x_tilde": p.x_tilde.tolist(),
                "residual_norm": p.residual_norm,
            }
            for i, p in enumerate(points)
        ],
    }
    if args.csv:
        header = list(model.alpha_names) + ["omega", "index"]
        lines = [",".join(header)]
        for i, p in enumerate(points):
            cells = [repr(float(v)) for v in p.alpha] + [repr(float(p.omega)), str(i)]
            lines.append(",".join(cells))
        Path(args.csv).write_text("\n".join(lines) + "\n")
        print(f"wrote {len(points)} rows to {args.csv}", file=sys.stderr)
    return payload


def _cmd_closest_point(args) -> dict:
    model, sol = _solve_margin_point(args)
    nominal = _reduce(model, _parse_floats(args.nominal, "--nominal"), "--nominal")
    cp = closest_boundary_point(model, args.sigma, nominal, sol)
    payload = {
        "command": "closest-point",
        "model": model.name,
        "sigma": args.sigma,
        "alpha_nominal": nominal.tolist(),
        "distance": cp.distance,
        "boundary": _solution_dict(cp.solution),
        "kappa": cp.normal.kappa.tolist(),
        "r": cp.normal.r.tolist(),
    }
    return _with_parent_alpha(payload, model, cp.solution.alpha)


def _cmd_verify(args) -> dict:
    model, sol = _solve_margin_point(args)
    report = full_verification(model, sol)
    status = "passed" if report.passed else "FAILED"
    print(f"verification {status} ({len(report.checks)} checks)", file=sys.stderr)
    payload = {
        "command": "verify",
        "model": model.name,
        "point": _solution_dict(sol),
        "report": report.to_dict(),
    }
    return _with_parent_alpha(payload, model, sol.alpha)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ddehopf",
        description=(
            "Locate stability-margin points of delay differential equations, "
            "assemble their defining-system Jacobian, and compute normal vectors "
            "to the margin manifold in parameter space."
        ),
    )
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", required=True, help="built-in model name or path to a model JSON file")
    common.add_argument(
        "--fix",
        action="append",
        metavar="NAME=VALUE",
        help="freeze a parameter at a value (repeatable); overrides the --alpha entry",
    )
    common.add_argument("--out", metavar="FILE", help="also write the JSON document to FILE")
    common.add_argument("--guess", metavar="X1,...", help="initial state guess (defaults to zeros)")
    common.add_argument("--order", type=int, default=20, help="collocation order for spectra (default 20)")

    point_opts = argparse.ArgumentParser(add_help=False)
    point_opts.add_argument("--sigma", type=float, help="prescribed real part of the leading pair")
    point_opts.add_argument("--free", metavar="NAME_OR_INDEX", help="parameter released to the point solver (default: last)")

    p = sub.add_parser("steady", parents=[common], help="solve a steady state")
    p.add_argument("--alpha", required=True, help="parameter vector, comma-separated")
    p.set_defaults(handler=_cmd_steady)

    p = sub.add_parser("eigs", parents=[common], help="characteristic roots at a steady state")
    p.add_argument("--alpha", required=True)
    p.set_defaults(handler=_cmd_eigs)

    p = sub.add_parser("find-hopf", parents=[common, point_opts], help="solve for a margin point")
    p.add_argument("--alpha", help="seed parameter vector")
    p.add_argument("--resume", metavar="FILE", help="re-verify a previous find-hopf output without solving")
    p.set_defaults(handler=_cmd_find_hopf)

    p = sub.add_parser(
        "normal-vector", parents=[common, point_opts], help="margin point plus manifold normal"
    )
    p.add_argument("--alpha", required=True)
    p.set_defaults(handler=_cmd_normal_vector)

    p = sub.add_parser("continue", parents=[common, point_opts], help="trace the margin manifold")
    p.add_argument("--alpha", required=True)
    p.add_argument("--direction", required=True, help="initial parameter-space direction")
    p.add_argument("--steps", type=int, required=True, help="number of continuation steps")
    p.add_argument("--step-size", type=float, default=0.05, help="arclength step (default 0.05)")
    p.add_argument("--csv", metavar="FILE", help="also write accepted points as CSV")
    p.set_defaults(handler=_cmd_continue)

    p = sub.add_parser(
        "closest-point", parents=[common, point_opts], help="nearest boundary point to nominal parameters"
    )
    p.add_argument("--alpha", required=True, help="seed parameter vector for the initial margin point")
    p.add_argument("--nominal", required=True, help="nominal parameter vector")
    p.set_defaults(handler=_cmd_closest_point)

    p = sub.add_parser("verify", parents=[common, point_opts], help="run the full oracle suite at a point")
    p.add_argument("--alpha", required=True)
    p.set_defaults(handler=_cmd_verify)

    return parser


def _require_sigma(args):
    if getattr(args, "sigma", None) is None and args.subcommand in (
        "normal-vector",
        "continue",
        "closest-point",
        "verify",
    ):
        raise InputError(f"{args.subcommand} needs --sigma")


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code is None else int(exc.code)
    try:
        _require_sigma(args)
        payload = args.handler(args)
    except (InputError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except RegularityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    try:
        text = json.dumps(payload, indent=2, allow_nan=False)
    except ValueError as exc:
        print(f"error: result contains non-finite numbers: {exc}", file=sys.stderr)
        return 5
    print(text)
    if getattr(args, "out", None):
        Path(args.out).write_text(text + "\n")
        print(f"wrote {args.out}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
