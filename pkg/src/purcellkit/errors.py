"""Exception types shared across the toolkit.

Plain ``ValueError`` is used for ordinary domain/usage mistakes (bad units,
out-of-range inputs).  The classes below exist where callers need to
distinguish failure modes, e.g. for CLI exit codes.
"""


class PoleConditionError(ArithmeticError):
    """Admittance requested exactly at a lossless-network pole (junction voltage -> 0)."""


class FitConvergenceError(RuntimeError):
    """Least-squares fit did not converge within the iteration budget."""

    def __init__(self, message: str, residual_rms: float | None = None):
        super().__init__(message)
        self.residual_rms = residual_rms


class FitQualityError(RuntimeError):
    """Fit converged but the model does not describe the data (e.g. overlapping resonances)."""


class IntegrationError(RuntimeError):
    """Master-equation integrator failed (step-size underflow or trace drift)."""


class InconsistentStatsError(ValueError):
    """Measured readout statistics are inconsistent with the error model."""


class DegenerateStatsError(InconsistentStatsError):
    """Excitation ratios r_a = r_b make the post-selection expansion singular."""


class InfeasibleModelError(ValueError):
    """The flip-error linear system admits no nonnegative solution."""

    def __init__(self, message: str, certificate: dict | None = None):
        super().__init__(message)
        self.certificate = certificate or {}
