"""Exception types shared across the package.

The CLI maps these onto exit codes: validation -> 1, capacity -> 2,
certification -> 3.
"""


class SubtreeLabError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(SubtreeLabError):
    """Malformed input, bad arguments, or a violated precondition."""


class EdgeListParseError(ValidationError):
    """Edge-list document rejected; carries the offending line number."""

    def __init__(self, line_number, message):
        self.line_number = line_number
        super().__init__(f"line {line_number}: {message}")


class CapacityError(SubtreeLabError):
    """A resource guard tripped (enumeration caps, brute-force guards)."""


class CertificationError(SubtreeLabError):
    """Root certification failed; carries the best iterates and residuals."""

    def __init__(self, message, roots=None, residuals=None):
        self.roots = list(roots) if roots is not None else []
        self.residuals = list(residuals) if residuals is not None else []
        super().__init__(message)
