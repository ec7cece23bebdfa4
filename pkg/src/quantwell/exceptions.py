"""Exception types raised across the package.

Every error carries a short machine-readable ``code`` which the CLI
emits in JSON mode.
"""


class QuantWellError(ValueError):
    code = "error"


class ParseError(QuantWellError):
    code = "parse_error"

    def __init__(self, message, line=None):
        if line is not None:
            message = f"{message} at line {line}"
        super().__init__(message)
        self.line = line


class ValidationError(QuantWellError):
    code = "validation_error"


class DomainError(QuantWellError):
    """A numeric argument falls outside the domain where a formula is defined."""

    code = "domain_error"


class ConvergenceError(QuantWellError):
    code = "convergence_error"
