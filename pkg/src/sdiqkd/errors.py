"""Exception types shared across the package."""


class DomainError(Exception):
    """Base class for physically meaningful failures (CLI exit code 1)."""


class NeverSecure(DomainError):
    """The key rate is not positive even at the most favourable parameter."""


class ZeroSuccessProbability(DomainError):
    """A purification round kept (numerically) no probability mass."""


class NotBellDiagonal(ValueError):
    """State has coherences between Bell states; twirl it first."""


class CompletenessError(ValueError):
    """Kraus operators do not sum to the identity."""


class NonConvergence(ArithmeticError):
    """An eigensolver failed on a pathological input."""
