"""Exception hierarchy shared by all cpkrisk modules."""


class CpkRiskError(Exception):
    """Base class for errors raised by cpkrisk."""


class DomainError(CpkRiskError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class DegenerateSampleError(DomainError):
    """The sample has zero dispersion, so scale-dependent quantities are undefined."""


class FamilyInapplicableError(DomainError):
    """A distribution family cannot describe the data (e.g. non-positive values)."""


class FitError(CpkRiskError, RuntimeError):
    """Maximum-likelihood iteration failed to converge.

    Attributes
    ----------
    family : str
    iterations : int
    residual : float
        Absolute value of the score equation at the last iterate.
    """

    def __init__(self, message, family=None, iterations=None, residual=None):
        super().__init__(message)
        self.family = family
        self.iterations = iterations
        self.residual = residual


class InputError(CpkRiskError, ValueError):
    """Malformed input file or record."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
