"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """A run/generator configuration is invalid or inconsistent."""


class ValidationError(ValueError):
    """Data violates a documented invariant (counts, kinds, request times)."""


class ParseError(ValidationError):
    """A file could not be parsed; the message names the offending field/line."""


class DomainError(KeyError):
    """An id refers to a customer that does not exist in the instance."""


class ContractViolation(RuntimeError):
    """An internal precondition was broken (bug signal, not a user error)."""
