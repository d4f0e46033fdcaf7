"""Exception hierarchy shared across the package."""


class VanetSimError(Exception):
    """Base class for all package errors."""


class ConfigError(VanetSimError):
    """Invalid configuration values. Maps to CLI exit code 1."""

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ParseError(VanetSimError):
    """Malformed input file.  Carries a 1-based line number when known."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(VanetSimError):
    """Data violates a structural invariant (duplicates, gaps, bad values)."""


class EmptySampleError(VanetSimError):
    """An operation that needs a nonempty sample pool received an empty one."""
