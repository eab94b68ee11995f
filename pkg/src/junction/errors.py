"""Exception types shared across the package."""


class ParseError(ValueError):
    """A document is structurally malformed (bad JSON, wrong types, out-of-domain ids)."""


class ValidationError(ValueError):
    """A structurally sound record violates a domain invariant."""


class GenerationError(RuntimeError):
    """Scenario generation could not satisfy the requested constraints."""


class TransportError(RuntimeError):
    """A remote controller request failed after exhausting its retry budget."""
