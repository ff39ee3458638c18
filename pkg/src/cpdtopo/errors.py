"""Exception types shared across the package."""


class InvalidProblemError(ValueError):
    """The problem definition cannot be solved (e.g. no supports, all-void domain)."""


class SolverFailureError(RuntimeError):
    """Iterative linear solve did not reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class DegenerateThetaError(ValueError):
    """The cubic dual equation is degenerate (theta = 0 admits no positive root)."""


class ParseError(ValueError):
    """Malformed problem file."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no
