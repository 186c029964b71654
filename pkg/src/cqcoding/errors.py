"""Exception types shared across the package."""


class CQError(Exception):
    """Base class for all package errors."""


class DimensionError(CQError, ValueError):
    """Operands have incompatible or non-factorizable dimensions."""


class ValidationError(CQError, ValueError):
    """An operator or distribution violates a structural invariant."""


class DomainError(CQError, ValueError):
    """A query falls outside the domain where the quantity is defined."""


class ResourceError(CQError, MemoryError):
    """A computation would exceed the configured size cap."""


class NumericError(CQError, ArithmeticError):
    """A numerical routine failed to converge."""


class UnsupportedError(CQError, TypeError):
    """The operation is not defined for this kind of object."""


class InvariantError(CQError, AssertionError):
    """A post-condition that the theory guarantees was violated."""
