"""Exception types raised by squeezelab."""


class SqueezelabError(Exception):
    """Base class for all package errors."""


class InvalidArgument(SqueezelabError, ValueError):
    pass


class PreconditionViolation(SqueezelabError, ValueError):
    pass


class ZeroGainError(SqueezelabError, ArithmeticError):
    """The signal does not depend on the phase at the operating point."""


class SingularOperatingPoint(SqueezelabError, ArithmeticError):
    pass


class TruncationOverflowError(SqueezelabError, RuntimeError):
    """Probability leaked out of the truncated Fock space."""

    def __init__(self, step, deficit, tolerance):
        self.step = step
        self.deficit = deficit
        self.tolerance = tolerance
        super().__init__(
            f"norm deficit {deficit:.3e} exceeds tolerance {tolerance:.1e} "
            f"after step {step}; raise the cutoff"
        )


class ConfigError(SqueezelabError, ValueError):
    """A scenario configuration failed validation.

    ``violations`` holds one ``(path, message)`` pair per problem found.
    """

    def __init__(self, violations):
        self.violations = list(violations)
        lines = [f"  {path or '<root>'}: {msg}" for path, msg in self.violations]
        super().__init__("invalid scenario config:\n" + "\n".join(lines))


class EnvelopeExceededError(SqueezelabError, ValueError):
    def __init__(self, parameter, value, limit):
        self.parameter = parameter
        self.value = value
        self.limit = limit
        super().__init__(
            f"{parameter}={value:g} is outside the oracle envelope (limit {limit:g})"
        )
