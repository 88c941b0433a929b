"""Exception types and warning categories shared across the package."""


class DdeHopfError(Exception):
    """Base class for every error raised by this package."""


class InputError(DdeHopfError, ValueError):
    """Malformed user input: bad dimensions, unknown names, unparsable values."""


class DomainError(DdeHopfError):
    """Evaluation left the model domain (e.g. a delay became negative)."""


class ParseError(InputError):
    """An expression could not be parsed.

    Carries the location (1-based line and column) and the offending token.
    """

    def __init__(self, message: str, line: int, column: int, token: str):
        super().__init__(f"{message} (line {line}, column {column}, near {token!r})")
        self.line = line
        self.column = column
        self.token = token


class NonConvergenceError(DdeHopfError):
    """An iterative solver ran out of iterations or stopped making progress."""

    def __init__(self, message: str, residual: float | None = None):
        if residual is not None:
            message = f"{message} (last residual {residual:.3e})"
        super().__init__(message)
        self.residual = residual


class ContinuationStalledError(NonConvergenceError):
    """The continuation corrector kept failing after exhausting step halving.

    ``points`` holds the portion of the branch accepted before the stall.
    """

    def __init__(self, message: str, points: list):
        super().__init__(message)
        self.points = points


class RegularityError(DdeHopfError):
    """A Jacobian or kernel violated a rank assumption."""


class DegenerateNormalError(RegularityError):
    """The projected parameter-space normal has (numerically) zero length."""


class NumericalError(DdeHopfError):
    """A dense linear-algebra backend failed (non-convergence, NaN/Inf input)."""


class LeadingPairDriftWarning(UserWarning):
    """The tracked eigenpair stopped being the rightmost one along a branch."""


class RootRefinementWarning(UserWarning):
    """A characteristic-root seed was dropped because refinement diverged."""
