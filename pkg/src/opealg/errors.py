"""Exception types shared across the package."""


class OpeAlgError(Exception):
    """Base class for all errors raised by this package."""


class ScalarDomainError(OpeAlgError):
    """Division by zero, evaluation at a pole, or an unbound parameter."""


class AlgebraError(OpeAlgError):
    """Invalid algebra declaration: duplicate generators, bad weights,
    inhomogeneous table entries, failed Lie-data validation."""


class UnknownGeneratorError(AlgebraError):
    """An expression references a generator the algebra does not declare."""


class ParseError(OpeAlgError):
    """Syntax error in an algebra file, expression, or scalar literal."""

    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        loc = ""
        if line is not None:
            loc = f" at line {line}" + (f", col {col}" if col is not None else "")
        super().__init__(message + loc)


class StepBudgetExceeded(OpeAlgError):
    """Rewriting did not finish within the configured step budget."""


class OracleError(OpeAlgError):
    """Mode-level evaluation cannot be carried out as requested
    (missing bindings, cutoff too small for the requested mode)."""
