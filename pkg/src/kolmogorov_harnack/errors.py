"""Exception types, each mapped to a CLI exit code."""


class ConfigError(ValueError):
    """Malformed input or parameters outside the admissible range."""

    exit_code = 1


class HypothesisViolation(ValueError):
    """A coefficient field or parameter choice violates H1 or H2."""

    exit_code = 2


class InfeasibleDiscretization(ValueError):
    """The requested grid cannot hold the stencil or meet the CFL bound."""

    exit_code = 3


class VerificationFailure(AssertionError):
    exit_code = 4
