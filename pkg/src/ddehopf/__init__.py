"""Stability-margin analysis for delay differential equations.

Define systems ``x'(t) = f(x(t), x(t - tau_1), ..., x(t - tau_m), alpha)``
whose delays may depend on the current state and the parameters; find steady
states and characteristic roots; solve for margin points where the leading
complex-conjugate root pair sits at a prescribed real part; assemble the
defining system's transposed Jacobian in closed form; compute unit normals
to the margin manifold in parameter space; trace the manifold by
pseudo-arclength continuation; and search for the boundary point closest to
a nominal parameter vector.  Everything is double-precision dense numerics
on top of NumPy.
"""

from .errors import (
    ContinuationStalledError,
    DdeHopfError,
    DegenerateNormalError,
    DomainError,
    InputError,
    LeadingPairDriftWarning,
    NonConvergenceError,
    NumericalError,
    ParseError,
    RegularityError,
    RootRefinementWarning,
)
from .expr import Expression
from .hopf_manifold import (
    BMatrix,
    HopfSolution,
    TrigWeights,
    assemble_B,
    augmented_residual,
    continue_manifold,
    margin_point_from_alpha,
    solve_hopf,
    trig_weights,
)
from .model import (
    AnalyticDerivatives,
    BUILTIN_MODELS,
    DerivativeBundle,
    ModelSpec,
    bundle_derivatives,
    delay_values,
    evaluate_rhs,
    fix_parameters,
    get_model,
    load_model_json,
)
from .normalvec import (
    ClosestPoint,
    NormalVector,
    closest_boundary_point,
    normal_at,
    normal_vector,
)
from .numkernel import Eigenpair, NullspaceResult, dense_eigs, nullspace
from .spectrum import (
    CharRoot,
    char_roots,
    characteristic_determinant,
    characteristic_matrix,
    leading_pair,
)
from .steady import SteadyPoint, solve_steady
from .verify import (
    CheckResult,
    VerificationReport,
    eig_gradient_check,
    fd_jacobian_check,
    fd_residual_jacobian,
    full_verification,
    invariant_checks,
    tangent_orthogonality_check,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticDerivatives",
    "BMatrix",
    "BUILTIN_MODELS",
    "CharRoot",
    "CheckResult",
    "ClosestPoint",
    "ContinuationStalledError",
    "DdeHopfError",
    "DegenerateNormalError",
    "DerivativeBundle",
    "DomainError",
    "Eigenpair",
    "Expression",
    "HopfSolution",
    "InputError",
    "LeadingPairDriftWarning",
    "ModelSpec",
    "NonConvergenceError",
    "NormalVector",
    "NullspaceResult",
    "NumericalError",
    "ParseError",
    "RegularityError",
    "RootRefinementWarning",
    "SteadyPoint",
    "TrigWeights",
    "VerificationReport",
    "assemble_B",
    "augmented_residual",
    "bundle_derivatives",
    "char_roots",
    "characteristic_determinant",
    "characteristic_matrix",
    "closest_boundary_point",
    "continue_manifold",
    "delay_values",
    "dense_eigs",
    "eig_gradient_check",
    "evaluate_rhs",
    "fd_jacobian_check",
    "fd_residual_jacobian",
    "fix_parameters",
    "full_verification",
    "get_model",
    "invariant_checks",
    "leading_pair",
    "load_model_json",
    "margin_point_from_alpha",
    "normal_at",
    "normal_vector",
    "nullspace",
    "solve_hopf",
    "solve_steady",
    "tangent_orthogonality_check",
    "trig_weights",
    "__version__",
]
