"""Exception taxonomy shared across the protocol stack."""


class RangeError(ValueError):
    """A real value falls outside the representable fixed-point range."""


class DomainError(ValueError):
    """An operand violates a mathematical precondition (e.g. recip of x <= 0)."""


class ProtocolError(RuntimeError):
    """Protocol-state misuse: party mismatch, triple reuse, length mismatch."""
