"""Exception hierarchy.

Each numerical guard in the package raises one of these; the CLI maps them to
exit codes (schema/input errors -> 3, numerical failures -> 4).
"""


class LatticeDNError(Exception):
    """Base class for all package errors."""


class SchemaError(LatticeDNError, ValueError):
    """Malformed configuration, D-N sample file or report."""


class NumericalError(LatticeDNError, ArithmeticError):
    """Base class for numerical failures."""


class IntegrationError(NumericalError):
    """The ODE integration produced non-finite values."""


class WindowExhaustedError(NumericalError):
    """Fewer roots were found than requested inside the scan window."""

    def __init__(self, msg, found=None):
        super().__init__(msg)
        self.found = found


class NearEigenvalueError(NumericalError):
    """A characteristic value used as a denominator is too close to zero."""


class InadmissibleLambdaError(NumericalError):
    """lambda hits the exceptional set or makes a required system singular."""

    def __init__(self, msg, reason="", edge=None):
        super().__init__(msg)
        self.reason = reason
        self.edge = edge


class IllConditionedError(NumericalError):
    """A linear system is singular or its condition estimate exceeds kappa_max."""

    def __init__(self, msg, cond=float("inf")):
        super().__init__(msg)
        self.cond = cond


class IncompleteFrontierError(NumericalError):
    """A coefficient is missing where the propagated field is non-zero."""


class UninformativeError(NumericalError):
    """All samples were masked out by vanishing denominators."""


class FitError(NumericalError):
    """A least-squares recovery did not converge.

    ``best`` holds the best iterate and ``residual`` its squared residual.
    """

    def __init__(self, msg, best=None, residual=float("nan")):
        super().__init__(msg)
        self.best = best
        self.residual = residual


class ReconstructionError(NumericalError):
    """A reconstruction step failed; ``state`` carries the frontier snapshot."""

    def __init__(self, msg, k=None, state=None):
        super().__init__(msg)
        self.k = k
        self.state = state
