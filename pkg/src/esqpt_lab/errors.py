"""Exception hierarchy.

Every error raised by this package derives from :class:`EsqptError`, so
callers (notably the CLI) can map failure categories to exit codes.
"""


class EsqptError(Exception):
    """Base class for all package errors."""


class DomainError(EsqptError, ValueError):
    """An argument lies outside the mathematically valid domain."""


class EmptyBlockError(EsqptError):
    """The requested conserved-quantum-number block contains no states."""


class NoEsqptError(EsqptError):
    """The spectrum has no zero crossing (no excited-state critical point)."""


class ConvergenceError(EsqptError):
    """An iterative procedure failed to reach its tolerance."""


class DivergenceError(EsqptError):
    """A quantity is evaluated where it diverges (e.g. the orbit period at the barrier top)."""


class OutOfSpectrumError(EsqptError):
    """A quantization target lies outside the classically allowed action range."""


class WindowOverflowError(EsqptError):
    """An eigenvalue window contains more states than the configured cap."""


class FitError(EsqptError):
    """A least-squares fit is ill-conditioned or under-determined."""
