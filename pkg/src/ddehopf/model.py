"""Model definitions for delay-differential systems with varying delays.

A model describes the autonomous system

    x'(t) = f(x(t - tau_0), x(t - tau_1), ..., x(t - tau_m), alpha)

where ``tau_0 = 0`` identifies the undelayed argument, the remaining delays
may depend on the current state and on the parameter vector ``alpha``, and
``f`` maps ``m + 1`` state vectors of length ``n`` plus ``n_alpha`` parameters
to an ``n``-vector.  Delays are assumed smooth near the points where
derivatives are requested; all derivative machinery here evaluates at a
steady state, where every state argument equals the same vector.

The central product of this module is :func:`bundle_derivatives`, which
packages every derivative the boundary machinery needs:

* ``A[i]``           Jacobian of ``f`` w.r.t. its ``i``-th state argument,
* ``grad_x_tau[i]``  state gradient of the ``i``-th delay,
* ``grad_alpha_tau[i]``  parameter gradient of the ``i``-th delay,
* ``grad_x_f``       transposed Jacobian of the steady-state residual,
* ``grad_alpha_f``   transposed parameter Jacobian of ``f``,
* ``hess_x(v, i)``   second-derivative contraction: the matrix with entries
  ``sum_r v_r * d^2 f_nu / d x_mu d x_r``, where the ``r`` derivative acts on
  state argument ``i`` and the ``mu`` derivative moves every argument at once
  (the total steady-state dependence),
* ``hess_alpha(v, i)``  the same contraction with the outer derivative taken
  w.r.t. ``alpha``.

Every family is available either analytically (the built-in models supply
closed forms) or by central finite differences.
"""

from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field, replace
import json

import numpy as np

from .errors import DomainError, InputError
from .expr import Expression

# central-difference base steps; scaled per coordinate by (1 + |z_j|)
FD_STEP_FIRST = 1e-6
FD_STEP_SECOND = 1e-4

DERIVATIVE_FAMILIES = ("jacobian", "delay", "parameter", "hessian")


@dataclass(frozen=True)
class AnalyticDerivatives:
    """Closed-form derivative callables for a model.

    ``jacobians(x_args, alpha)`` returns the list ``A[0..m]``;
    ``grad_x_tau(x, alpha)`` / ``grad_alpha_tau(x, alpha)`` return gradients
    for the delayed arguments ``i = 1..m`` only (the zero delay has zero
    gradient by definition); ``hess_x(x, alpha, v, i)`` and
    ``hess_alpha(x, alpha, v, i)`` implement the contractions documented in
    the module docstring.
    """

    jacobians: Callable
    grad_alpha_f: Callable
    grad_x_tau: Callable | None = None
    grad_alpha_tau: Callable | None = None
    hess_x: Callable | None = None
    hess_alpha: Callable | None = None


@dataclass(frozen=True)
class ModelSpec:
    """Immutable description of one delay-differential system."""

    name: str
    n: int
    n_alpha: int
    rhs: Callable
    delays: tuple = ()
    x_names: tuple[str, ...] = ()
    alpha_names: tuple[str, ...] = ()
    analytic: AnalyticDerivatives | None = None
    providers: Mapping[str, str] = field(default_factory=dict)
    # set on models produced by fix_parameters(); maps reduced alpha back
    fixed_assignments: tuple[tuple[int, float], ...] | None = None
    parent_n_alpha: int | None = None
    parent_alpha_names: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.n < 1 or self.n_alpha < 1:
            raise InputError(f"model {self.name!r}: need n >= 1 and n_alpha >= 1")
        x_names = self.x_names or tuple(f"x{i + 1}" for i in range(self.n))
        a_names = self.alpha_names or tuple(f"a{i + 1}" for i in range(self.n_alpha))
        if len(x_names) != self.n or len(a_names) != self.n_alpha:
            raise InputError(f"model {self.name!r}: name lists do not match n/n_alpha")
        object.__setattr__(self, "x_names", tuple(x_names))
        object.__setattr__(self, "alpha_names", tuple(a_names))
        providers = dict(self.providers)
        for family in DERIVATIVE_FAMILIES:
            default = "analytic" if self.analytic is not None else "fd"
            mode = providers.setdefault(family, default)
            if mode not in ("analytic", "fd"):
                raise InputError(f"unknown derivative provider {mode!r}")
            if mode == "analytic" and self.analytic is None:
                raise InputError(f"model {self.name!r} has no analytic derivatives")
        object.__setattr__(self, "providers", providers)

    @property
    def m(self) -> int:
        """Number of delayed arguments (excluding the undelayed one)."""
        return len(self.delays)

    def alpha_index(self, key) -> int:
        """Resolve a parameter given by index or name to its index."""
        if isinstance(key, str):
            try:
                return self.alpha_names.index(key)
            except ValueError:
                raise InputError(
                    f"unknown parameter {key!r}; model {self.name!r} has {self.alpha_names}"
                ) from None
        idx = int(key)
        if not 0 <= idx < self.n_alpha:
            raise InputError(f"parameter index {idx} out of range for {self.name!r}")
        return idx

    def embed_alpha(self, alpha: np.ndarray) -> np.ndarray:
        """Map a parameter vector back to the coordinates of the parent model.

        Identity for models that were not produced by :func:`fix_parameters`.
        """
        alpha = np.asarray(alpha, dtype=float)
        if self.fixed_assignments is None:
            return alpha
        full = np.empty(self.parent_n_alpha)
        fixed_idx = {i for i, _ in self.fixed_assignments}
        free = [i for i in range(self.parent_n_alpha) if i not in fixed_idx]
        full[free] = alpha
        for i, value in self.fixed_assignments:
            full[i] = value
        return full


def evaluate_rhs(model: ModelSpec, x_args: Sequence[np.ndarray], alpha: np.ndarray) -> np.ndarray:
    """Evaluate f at the given state arguments (one per delay, undelayed first)."""
    if len(x_args) != model.m + 1:
        raise InputError(
            f"expected {model.m + 1} state arguments for model {model.name!r}, got {len(x_args)}"
        )
    args = []
    for k, x in enumerate(x_args):
        x = np.asarray(x, dtype=float)
        if x.shape != (model.n,):
            raise InputError(f"state argument {k} has shape {x.shape}, expected ({model.n},)")
        args.append(x)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (model.n_alpha,):
        raise InputError(f"alpha has shape {alpha.shape}, expected ({model.n_alpha},)")
    out = np.asarray(model.rhs(args, alpha), dtype=float).reshape(-1)
    if out.shape != (model.n,):
        raise InputError(f"rhs of {model.name!r} returned shape {out.shape}, expected ({model.n},)")
    return out


def delay_values(model: ModelSpec, x: np.ndarray, alpha: np.ndarray) -> np.ndarray:
    """Evaluate all delays at (x, alpha); index 0 is the zero delay."""
    x = np.asarray(x, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    taus = np.zeros(model.m + 1)
    for i, tau_fn in enumerate(model.delays, start=1):
        value = float(tau_fn(x, alpha))
        if value < 0.0:
            raise DomainError(f"delay {i} of model {model.name!r} evaluated negative ({value:.3e})")
        taus[i] = value
    return taus


@dataclass(frozen=True)
class DerivativeBundle:
    """All derivatives of one model at one steady state.

    ``hess_x``/``hess_alpha`` are exposed as methods so both providers share a
    call signature; the finite-difference provider precomputes coordinate
    tensors once, which keeps the contraction exactly linear in ``v``.
    """

    A: tuple
    grad_x_tau: tuple
    grad_alpha_tau: tuple
    grad_x_f: np.ndarray
    grad_alpha_f: np.ndarray
    tau_values: np.ndarray
    _hess_x_impl: Callable
    _hess_alpha_impl: Callable

    def hess_x(self, v: np.ndarray, i: int) -> np.ndarray:
        """Contraction of the state/state second derivative block ``i`` with v."""
        return self._hess_x_impl(np.asarray(v, dtype=float), i)

    def hess_alpha(self, v: np.ndarray, i: int) -> np.ndarray:
        """Contraction of the parameter/state second derivative block ``i`` with v."""
        return self._hess_alpha_impl(np.asarray(v, dtype=float), i)


def _steady_args(x: np.ndarray, count: int) -> list[np.ndarray]:
    return [x.copy() for _ in range(count)]


def _fd_jacobian_slot(model, x, alpha, slot) -> np.ndarray:
    """Central-difference Jacobian of f w.r.t. one state argument."""
    n = model.n
    J = np.empty((n, n))
    for j in range(n):
        h = FD_STEP_FIRST * (1.0 + abs(x[j]))
        args_p = _steady_args(x, model.m + 1)
        args_m = _steady_args(x, model.m + 1)
        args_p[slot][j] += h
        args_m[slot][j] -= h
        J[:, j] = (evaluate_rhs(model, args_p, alpha) - evaluate_rhs(model, args_m, alpha)) / (2 * h)
    return J


def _fd_grad_x_f(model, x, alpha) -> np.ndarray:
    """Transposed Jacobian of x -> f(x, ..., x, alpha) (all slots move)."""
    n = model.n
    G = np.empty((n, n))
    for j in range(n):
        h = FD_STEP_FIRST * (1.0 + abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += h
        xm[j] -= h
        diff = evaluate_rhs(model, _steady_args(xp, model.m + 1), alpha) - evaluate_rhs(
            model, _steady_args(xm, model.m + 1), alpha
        )
        G[j, :] = diff / (2 * h)
    return G


def _fd_grad_alpha_f(model, x, alpha) -> np.ndarray:
    G = np.empty((model.n_alpha, model.n))
    args = _steady_args(x, model.m + 1)
    for j in range(model.n_alpha):
        h = FD_STEP_FIRST * (1.0 + abs(alpha[j]))
        ap, am = alpha.copy(), alpha.copy()
        ap[j] += h
        am[j] -= h
        G[j, :] = (evaluate_rhs(model, args, ap) - evaluate_rhs(model, args, am)) / (2 * h)
    return G


def _fd_tau_gradients(model, x, alpha):
    """State and parameter gradients of each delay by central differences."""
    gx = [np.zeros(model.n)]
    ga = [np.zeros(model.n_alpha)]
    for i, tau_fn in enumerate(model.delays, start=1):
        gxi = np.empty(model.n)
        for j in range(model.n):
            h = FD_STEP_FIRST * (1.0 + abs(x[j]))
            xp, xm = x.copy(), x.copy()
            xp[j] += h
            xm[j] -= h
            tp, tm = float(tau_fn(xp, alpha)), float(tau_fn(xm, alpha))
            if tp < 0.0 or tm < 0.0:
                raise DomainError(f"delay {i} evaluated negative at a perturbed state")
            gxi[j] = (tp - tm) / (2 * h)
        gai = np.empty(model.n_alpha)
        for j in range(model.n_alpha):
            h = FD_STEP_FIRST * (1.0 + abs(alpha[j]))
            ap, am = alpha.copy(), alpha.copy()
            ap[j] += h
            am[j] -= h
            tp, tm = float(tau_fn(x, ap)), float(tau_fn(x, am))
            if tp < 0.0 or tm < 0.0:
                raise DomainError(f"delay {i} evaluated negative at a perturbed parameter")
            gai[j] = (tp - tm) / (2 * h)
        gx.append(gxi)
        ga.append(gai)
    return gx, ga


def _fd_hess_x_tensor(model, x, alpha, slot) -> np.ndarray:
    """Tensor T[mu, rho, nu] = d^2 f_nu / d x_mu d x_rho(slot), mu total."""
    n = model.n
    T = np.empty((n, n, n))
    for mu in range(n):
        h = FD_STEP_SECOND * (1.0 + abs(x[mu]))
        for rho in range(n):
            k = FD_STEP_SECOND * (1.0 + abs(x[rho]))
            vals = []
            for s_mu in (+1, -1):
                for s_rho in (+1, -1):
                    base = x.copy()
                    base[mu] += s_mu * h
                    args = _steady_args(base, model.m + 1)
                    args[slot][rho] += s_rho * k
                    vals.append(evaluate_rhs(model, args, alpha))
            T[mu, rho, :] = (vals[0] - vals[1] - vals[2] + vals[3]) / (4 * h * k)
    return T


def _fd_hess_alpha_tensor(model, x, alpha, slot) -> np.ndarray:
    """Tensor T[mu, rho, nu] = d^2 f_nu / d alpha_mu d x_rho(slot)."""
    n, na = model.n, model.n_alpha
    T = np.empty((na, n, n))
    for mu in range(na):
        h = FD_STEP_SECOND * (1.0 + abs(alpha[mu]))
        for rho in range(n):
            k = FD_STEP_SECOND * (1.0 + abs(x[rho]))
            vals = []
            for s_mu in (+1, -1):
                for s_rho in (+1, -1):
                    a = alpha.copy()
                    a[mu] += s_mu * h
                    args = _steady_args(x, model.m + 1)
                    args[slot][rho] += s_rho * k
                    vals.append(evaluate_rhs(model, args, a))
            T[mu, rho, :] = (vals[0] - vals[1] - vals[2] + vals[3]) / (4 * h * k)
    return T


def bundle_derivatives(
    model: ModelSpec,
    x_tilde: np.ndarray,
    alpha: np.ndarray,
    provider: str | None = None,
) -> DerivativeBundle:
    """Evaluate every derivative family at a steady state.

    Parameters
    ----------
    model : ModelSpec
    x_tilde, alpha : ndarray
        The evaluation point.  Callers are responsible for ``x_tilde`` being a
        steady state within tolerance; this is not re-verified here.
    provider : {'analytic', 'fd', None}
        Force one provider for every family, or ``None`` to use the model's
        per-family configuration.

    Returns
    -------
    DerivativeBundle
    """
    x = np.asarray(x_tilde, dtype=float).reshape(model.n)
    alpha = np.asarray(alpha, dtype=float).reshape(model.n_alpha)
    if provider is not None:
        if provider not in ("analytic", "fd"):
            raise InputError(f"unknown derivative provider {provider!r}")
        modes = {family: provider for family in DERIVATIVE_FAMILIES}
        if provider == "analytic" and model.analytic is None:
            raise InputError(f"model {model.name!r} has no analytic derivatives")
    else:
        modes = model.providers

    taus = delay_values(model, x, alpha)
    args = _steady_args(x, model.m + 1)
    ana = model.analytic

    if modes["jacobian"] == "analytic":
        A = [np.asarray(Ai, dtype=float) for Ai in ana.jacobians(args, alpha)]
        grad_x_f = sum(A).T.copy()
    else:
        A = [_fd_jacobian_slot(model, x, alpha, i) for i in range(model.m + 1)]
        grad_x_f = _fd_grad_x_f(model, x, alpha)

    if modes["delay"] == "analytic":
        gx = [np.zeros(model.n)]
        ga = [np.zeros(model.n_alpha)]
        if model.m:
            gx_fn = ana.grad_x_tau
            ga_fn = ana.grad_alpha_tau
            gx += [np.asarray(g, dtype=float) for g in gx_fn(x, alpha)]
            ga += [np.asarray(g, dtype=float) for g in ga_fn(x, alpha)]
    else:
        gx, ga = _fd_tau_gradients(model, x, alpha)

    if modes["parameter"] == "analytic":
        grad_alpha_f = np.asarray(ana.grad_alpha_f(args, alpha), dtype=float)
    else:
        grad_alpha_f = _fd_grad_alpha_f(model, x, alpha)

    if modes["hessian"] == "analytic":
        def hess_x_impl(v, i, _x=x, _a=alpha):
            return np.asarray(ana.hess_x(_x, _a, v, i), dtype=float)

        def hess_alpha_impl(v, i, _x=x, _a=alpha):
            return np.asarray(ana.hess_alpha(_x, _a, v, i), dtype=float)
    else:
        tensors_x = [_fd_hess_x_tensor(model, x, alpha, i) for i in range(model.m + 1)]
        tensors_a = [_fd_hess_alpha_tensor(model, x, alpha, i) for i in range(model.m + 1)]

        def hess_x_impl(v, i, _T=tensors_x):
            # contract the middle (rho) axis: (mu, rho, nu) . (rho,) -> (mu, nu)
            return np.tensordot(_T[i], v, axes=([1], [0]))

        def hess_alpha_impl(v, i, _T=tensors_a):
            return np.tensordot(_T[i], v, axes=([1], [0]))

    return DerivativeBundle(
        A=tuple(A),
        grad_x_tau=tuple(gx),
        grad_alpha_tau=tuple(ga),
        grad_x_f=np.asarray(grad_x_f, dtype=float),
        grad_alpha_f=grad_alpha_f,
        tau_values=taus,
        _hess_x_impl=hess_x_impl,
        _hess_alpha_impl=hess_alpha_impl,
    )


# ---------------------------------------------------------------------------
# built-in models
# ---------------------------------------------------------------------------


def _hayes() -> ModelSpec:
    """Scalar linear equation x' = -a_p x(t) - b_p x(t - tau), constant delay."""

    def rhs(args, alpha):
        return np.array([-alpha[0] * args[0][0] - alpha[1] * args[1][0]])

    def jacobians(args, alpha):
        return [np.array([[-alpha[0]]]), np.array([[-alpha[1]]])]

    def grad_alpha_f(args, alpha):
        return np.array([[-args[0][0]], [-args[1][0]], [0.0]])

    ana = AnalyticDerivatives(
        jacobians=jacobians,
        grad_alpha_f=grad_alpha_f,
        grad_x_tau=lambda x, a: [np.zeros(1)],
        grad_alpha_tau=lambda x, a: [np.array([0.0, 0.0, 1.0])],
        hess_x=lambda x, a, v, i: np.zeros((1, 1)),
        hess_alpha=lambda x, a, v, i: (
            np.array([[-v[0]], [0.0], [0.0]]) if i == 0 else np.array([[0.0], [-v[0]], [0.0]])
        ),
    )
    return ModelSpec(
        name="hayes",
        n=1,
        n_alpha=3,
        rhs=rhs,
        delays=(lambda x, a: a[2],),
        x_names=("x",),
        alpha_names=("a_p", "b_p", "tau"),
        analytic=ana,
    )


def _sd_source() -> ModelSpec:
    """Scalar source equation x' = mu - a_p x(t) - b_p x(t - tau) with a
    state-dependent delay tau = tau_c + c * x(t)."""

    def rhs(args, alpha):
        return np.array([alpha[0] - alpha[1] * args[0][0] - alpha[2] * args[1][0]])

    def jacobians(args, alpha):
        return [np.array([[-alpha[1]]]), np.array([[-alpha[2]]])]

    def grad_alpha_f(args, alpha):
        return np.array([[1.0], [-args[0][0]], [-args[1][0]], [0.0], [0.0]])

    ana = AnalyticDerivatives(
        jacobians=jacobians,
        grad_alpha_f=grad_alpha_f,
        grad_x_tau=lambda x, a: [np.array([a[4]])],
        grad_alpha_tau=lambda x, a: [np.array([0.0, 0.0, 0.0, 1.0, x[0]])],
        hess_x=lambda x, a, v, i: np.zeros((1, 1)),
        hess_alpha=lambda x, a, v, i: (
            np.array([[0.0], [-v[0]], [0.0], [0.0], [0.0]])
            if i == 0
            else np.array([[0.0], [0.0], [-v[0]], [0.0], [0.0]])
        ),
    )
    return ModelSpec(
        name="sd-source",
        n=1,
        n_alpha=5,
        rhs=rhs,
        delays=(lambda x, a: a[3] + a[4] * x[0],),
        x_names=("x",),
        alpha_names=("mu", "a_p", "b_p", "tau_c", "c"),
        analytic=ana,
    )


def _quadratic() -> ModelSpec:
    """Scalar equation x' = a1 x(t) + a2 x(t-1) + x(t) x(t-1); exercises the
    second-derivative contractions (the mixed state product)."""

    def rhs(args, alpha):
        x0, x1 = args[0][0], args[1][0]
        return np.array([alpha[0] * x0 + alpha[1] * x1 + x0 * x1])

    def jacobians(args, alpha):
        x0, x1 = args[0][0], args[1][0]
        return [np.array([[alpha[0] + x1]]), np.array([[alpha[1] + x0]])]

    def grad_alpha_f(args, alpha):
        return np.array([[args[0][0]], [args[1][0]]])

    # A_0 v = (a1 + x1) v: total state derivative is v (through the delayed
    # slot); A_1 v = (a2 + x0) v likewise through the undelayed slot.
    ana = AnalyticDerivatives(
        jacobians=jacobians,
        grad_alpha_f=grad_alpha_f,
        grad_x_tau=lambda x, a: [np.zeros(1)],
        grad_alpha_tau=lambda x, a: [np.zeros(2)],
        hess_x=lambda x, a, v, i: np.array([[v[0]]]),
        hess_alpha=lambda x, a, v, i: (
            np.array([[v[0]], [0.0]]) if i == 0 else np.array([[0.0], [v[0]]])
        ),
    )
    return ModelSpec(
        name="quadratic",
        n=1,
        n_alpha=2,
        rhs=rhs,
        delays=(lambda x, a: 1.0,),
        x_names=("x",),
        alpha_names=("a1", "a2"),
        analytic=ana,
    )


def _osc2() -> ModelSpec:
    """Planar oscillator x1' = x2, x2' = -k x1(t - tau) - d x2(t)."""

    def rhs(args, alpha):
        return np.array([args[0][1], -alpha[0] * args[1][0] - alpha[1] * args[0][1]])

    def jacobians(args, alpha):
        A0 = np.array([[0.0, 1.0], [0.0, -alpha[1]]])
        A1 = np.array([[0.0, 0.0], [-alpha[0], 0.0]])
        return [A0, A1]

    def grad_alpha_f(args, alpha):
        return np.array([[0.0, -args[1][0]], [0.0, -args[0][1]], [0.0, 0.0]])

    def hess_alpha(x, a, v, i):
        out = np.zeros((3, 2))
        if i == 0:
            out[1, 1] = -v[1]  # d/dd of (A0 v)_2 = -v2
        else:
            out[0, 1] = -v[0]  # d/dk of (A1 v)_2 = -v1
        return out

    ana = AnalyticDerivatives(
        jacobians=jacobians,
        grad_alpha_f=grad_alpha_f,
        grad_x_tau=lambda x, a: [np.zeros(2)],
        grad_alpha_tau=lambda x, a: [np.array([0.0, 0.0, 1.0])],
        hess_x=lambda x, a, v, i: np.zeros((2, 2)),
        hess_alpha=hess_alpha,
    )
    return ModelSpec(
        name="osc2",
        n=2,
        n_alpha=3,
        rhs=rhs,
        delays=(lambda x, a: a[2],),
        x_names=("x1", "x2"),
        alpha_names=("k", "d", "tau"),
        analytic=ana,
    )


BUILTIN_MODELS: dict[str, Callable[[], ModelSpec]] = {
    "hayes": _hayes,
    "sd-source": _sd_source,
    "quadratic": _quadratic,
    "osc2": _osc2,
}


def get_model(name: str) -> ModelSpec:
    """Return a built-in model by name."""
    try:
        factory = BUILTIN_MODELS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_MODELS))
        raise InputError(f"unknown model {name!r}; built-ins: {known}") from None
    return factory()


# ---------------------------------------------------------------------------
# user-defined models from JSON + expressions
# ---------------------------------------------------------------------------


def load_model_json(source) -> ModelSpec:
    """Build a model from a JSON document (path, JSON text, or parsed dict).

    Schema::

        {"n": int, "n_alpha": int,
         "delays": ["<expr>", ...],      # one per delayed argument, may be []
         "f": ["<expr>", ...],           # n right-hand sides
         "names": {"x": [...], "alpha": [...]}}   # optional

    Expression symbols: ``x1..xn`` (current state), ``xJ_dI`` (state J at
    delayed argument I) and ``a1..a{n_alpha}``.  Delay expressions may use
    only the current state and parameters.  Derivatives of expression models
    are always taken by finite differences.
    """
    if isinstance(source, Mapping):
        doc = source
        where = "<dict>"
    else:
        text = str(source)
        if "{" not in text:
            with open(text, encoding="utf-8") as fh:
                raw = fh.read()
            where = text
        else:
            raw = text
            where = "<json>"
        try:
            doc = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise InputError(f"{where}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None

    for key in ("n", "n_alpha", "f", "delays"):
        if key not in doc:
            raise InputError(f"{where}: missing required key {key!r}")
    n = int(doc["n"])
    n_alpha = int(doc["n_alpha"])
    if n < 1 or n_alpha < 1:
        raise InputError(f"{where}: need n >= 1 and n_alpha >= 1")
    f_sources = list(doc["f"])
    delay_sources = list(doc["delays"])
    if len(f_sources) != n:
        raise InputError(f"{where}: expected {n} entries in 'f', got {len(f_sources)}")
    m = len(delay_sources)

    names = doc.get("names", {})
    x_names = tuple(names.get("x", ())) or tuple(f"x{i + 1}" for i in range(n))
    alpha_names = tuple(names.get("alpha", ())) or tuple(f"a{i + 1}" for i in range(n_alpha))
    if len(x_names) != n or len(alpha_names) != n_alpha:
        raise InputError(f"{where}: 'names' lists do not match n/n_alpha")

    state_syms = {f"x{j + 1}": j for j in range(n)}
    alpha_syms = {f"a{j + 1}": j for j in range(n_alpha)}
    delayed_syms = {
        f"x{j + 1}_d{i + 1}": (i + 1, j) for i in range(m) for j in range(n)
    }

    allowed_f = set(state_syms) | set(alpha_syms) | set(delayed_syms)
    allowed_tau = set(state_syms) | set(alpha_syms)

    f_exprs = [Expression(src, allowed_f) for src in f_sources]
    tau_exprs = [Expression(src, allowed_tau) for src in delay_sources]

    def build_env(args, alpha):
        # plain floats so that 1/0 raises instead of returning numpy inf
        env = {name: float(args[0][j]) for name, j in state_syms.items()}
        for name, j in alpha_syms.items():
            env[name] = float(alpha[j])
        for name, (slot, j) in delayed_syms.items():
            env[name] = float(args[slot][j])
        return env

    def rhs(args, alpha):
        env = build_env(args, alpha)
        return np.array([expr(env) for expr in f_exprs])

    def make_delay(expr):
        def tau(x, alpha):
            env = {name: float(x[j]) for name, j in state_syms.items()}
            for name, j in alpha_syms.items():
                env[name] = float(alpha[j])
            return expr(env)

        return tau

    return ModelSpec(
        name=str(doc.get("name", where)),
        n=n,
        n_alpha=n_alpha,
        rhs=rhs,
        delays=tuple(make_delay(e) for e in tau_exprs),
        x_names=x_names,
        alpha_names=alpha_names,
        analytic=None,
    )


# ---------------------------------------------------------------------------
# freezing parameters
# ---------------------------------------------------------------------------


def fix_parameters(model: ModelSpec, fixed: Mapping) -> ModelSpec:
    """Return a copy of ``model`` with some parameters frozen at fixed values.

    The remaining parameters keep their relative order.  Boundary manifolds of
    the reduced model are slices of the full model's manifold, so this is the
    tool for tracing or searching a boundary with selected parameters held
    constant.  ``embed_alpha`` on the result maps reduced parameter vectors
    back to full-length ones.
    """
    assignments = sorted((model.alpha_index(k), float(v)) for k, v in fixed.items())
    if not assignments:
        return model
    fixed_idx = [i for i, _ in assignments]
    if len(set(fixed_idx)) != len(fixed_idx):
        raise InputError("duplicate parameter in fixed set")
    free = [i for i in range(model.n_alpha) if i not in set(fixed_idx)]
    if not free:
        raise InputError("cannot fix every parameter")
    fixed_values = dict(assignments)

    def embed(alpha_red):
        full = np.empty(model.n_alpha)
        full[free] = np.asarray(alpha_red, dtype=float)
        for i, v in fixed_values.items():
            full[i] = v
        return full

    def rhs(args, alpha_red):
        return model.rhs(args, embed(alpha_red))

    def make_delay(tau_fn):
        return lambda x, alpha_red: tau_fn(x, embed(alpha_red))

    ana = None
    if model.analytic is not None:
        parent = model.analytic

        def jacobians(args, alpha_red):
            return parent.jacobians(args, embed(alpha_red))

        def grad_alpha_f(args, alpha_red):
            return np.asarray(parent.grad_alpha_f(args, embed(alpha_red)))[free, :]

        def grad_x_tau(x, alpha_red):
            return parent.grad_x_tau(x, embed(alpha_red))

        def grad_alpha_tau(x, alpha_red):
            return [np.asarray(g)[free] for g in parent.grad_alpha_tau(x, embed(alpha_red))]

        def hess_x(x, alpha_red, v, i):
            return parent.hess_x(x, embed(alpha_red), v, i)

        def hess_alpha(x, alpha_red, v, i):
            return np.asarray(parent.hess_alpha(x, embed(alpha_red), v, i))[free, :]

        ana = AnalyticDerivatives(
            jacobians=jacobians,
            grad_alpha_f=grad_alpha_f,
            grad_x_tau=grad_x_tau,
            grad_alpha_tau=grad_alpha_tau,
            hess_x=hess_x,
            hess_alpha=hess_alpha,
        )

    label = ",".join(f"{model.alpha_names[i]}={v:g}" for i, v in assignments)
    return ModelSpec(
        name=f"{model.name}[{label}]",
        n=model.n,
        n_alpha=len(free),
        rhs=rhs,
        delays=tuple(make_delay(t) for t in model.delays),
        x_names=model.x_names,
        alpha_names=tuple(model.alpha_names[i] for i in free),
        analytic=ana,
        providers=dict(model.providers),
        fixed_assignments=tuple(assignments),
        parent_n_alpha=model.n_alpha,
        parent_alpha_names=model.alpha_names,
    )
