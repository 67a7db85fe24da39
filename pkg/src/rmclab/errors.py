"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration problems exit 2, budget
overruns exit 3 and detected invariant violations exit 1.
"""


class RMCError(Exception):
    """Base class for all errors raised by rmclab."""


class ConfigError(RMCError, ValueError):
    """Invalid user-supplied configuration."""


class DomainError(RMCError, ValueError):
    """An argument lies outside the domain where a formula is valid."""


class SizeError(RMCError):
    """A requested size is zero, negative or beyond the memory budget."""


class ScaleError(SizeError):
    """A block schedule or diagnostic range exceeds the computational budget."""


class MissingInputError(RMCError, ValueError):
    """Not enough Gaussian inputs were supplied for the requested quantity."""


class NonFiniteError(RMCError, FloatingPointError):
    """A computation produced NaN or Inf (for instance an overflowing exp)."""


class ContractError(RMCError, ValueError):
    """A process or sequence does not satisfy the hypotheses of a check."""


class UnsupportedConstraintError(RMCError, ValueError):
    """A partition constraint cannot be handled by the requested path."""


class InvariantViolation(RMCError, AssertionError):
    """A mathematical invariant failed on concrete data."""
