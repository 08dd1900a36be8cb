# fracbec/domain/errors.py


class FracBecError(Exception):
    """Base class for all fracbec errors; `exit_code` is what the CLI returns."""
    exit_code = 1


# --- Configuration class (exit 2) ---

class ConfigError(FracBecError):
    exit_code = 2


class ResolutionError(ConfigError):
    """A sweep ladder point is narrower than the grid can resolve."""

    def __init__(self, message: str, eps: float, suggested_n_points: int):
        super().__init__(message)
        self.eps = eps
        self.suggested_n_points = suggested_n_points


# --- Convergence class (exit 3) ---

class ConvergenceError(FracBecError):
    exit_code = 3

    def __init__(self, message: str, residual: float = float("nan"), iterations: int = 0):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NonConvergenceError(ConvergenceError):
    pass


class StagnationError(ConvergenceError):
    """The step size underflowed, or the energy stalled while the defect stayed flat."""


class DegenerateIterationError(ConvergenceError):
    """The iterate collapsed to (or started from) the zero field."""


# --- Verification class (exit 4) ---

class VerificationError(FracBecError):
    exit_code = 4

    def __init__(self, message: str, failed: list[str]):
        super().__init__(message)
        self.failed = failed


# --- Numerical input errors (exit 1) ---

class GridError(FracBecError):
    pass


class InvalidFieldError(FracBecError):
    pass


class DegenerateNormalizationError(FracBecError):
    pass


class SpectralResidueError(FracBecError):
    """Imaginary residue after an inverse transform exceeded the roundoff bound."""


class DomainCoverageError(FracBecError):
    pass


class PotentialError(FracBecError):
    pass


class NoCommonZeroError(PotentialError):
    pass


class DivergentMomentError(FracBecError):
    pass


class ConstraintError(FracBecError):
    pass


class FitError(FracBecError):
    pass


class SweepError(FracBecError):
    pass
