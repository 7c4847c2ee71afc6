"""Exception hierarchy shared by all modules."""


class LearnedIEError(Exception):
    """Base class for every error raised by this package."""


class DomainError(LearnedIEError, ValueError):
    """Argument outside the mathematical domain of a function."""


class UnsupportedOrderError(LearnedIEError, ValueError):
    """Order outside the range handled by the special-function kernels."""


class SingularMatrixError(LearnedIEError, ArithmeticError):
    """A pivot fell below the singularity threshold during factorization."""


class DegenerateMatchingError(LearnedIEError, ArithmeticError):
    """The matching system of a layered medium has a vanishing determinant."""


class CutoffResonanceError(LearnedIEError, ValueError):
    """Waveguide sample sits exactly on a cutoff frequency (lambda == k**2)."""


class ResonanceError(LearnedIEError, ArithmeticError):
    """The radial boundary value problem is singular at the requested lambda."""

    def __init__(self, lam, message=None):
        self.lam = lam
        super().__init__(message or f"radial problem is singular at lambda={lam!r}")


class PoleCollisionError(LearnedIEError, ArithmeticError):
    """A learned pole coincides with an evaluation point."""

    def __init__(self, j=None, ell=None, lam=None):
        self.j = j
        self.ell = ell
        self.lam = lam
        super().__init__(f"pole collision (pole j={j}, sample ell={ell}, lambda={lam})")


class StalledOptimizationError(LearnedIEError, RuntimeError):
    """Levenberg-Marquardt could not make progress; carries the best iterate."""

    def __init__(self, x_best, diagnostics, message="optimization stalled"):
        self.x_best = x_best
        self.diagnostics = diagnostics
        super().__init__(message)


class SchemaError(LearnedIEError, ValueError):
    """A persisted file does not match the expected schema."""


class ConfigError(LearnedIEError, ValueError):
    """Invalid or incomplete run configuration."""
